"""Anisotropic phase-space calculus and Gabor wave-front estimation.

The package splits along the pipeline:

* :mod:`anisogabor.geometry` -- s-conic weights, the radial coordinate, sphere
  projection, neighborhoods;
* :mod:`anisogabor.polynomials` / :mod:`anisogabor.symbols` -- exact phase-space
  polynomials, anisotropic symbol classes, cutoffs, characteristic sets;
* :mod:`anisogabor.weyl` -- discrete quantization, Weyl product, Wigner pairing,
  parametrix;
* :mod:`anisogabor.tfa` / :mod:`anisogabor.oracles` -- STFT engines and the
  catalog of distributions with known wave front sets;
* :mod:`anisogabor.wavefront` -- the decay-profile estimator and comparisons;
* :mod:`anisogabor.cli` -- the ``aniso-gabor`` command.
"""

from .geometry import (GeometryConfig, SConicNbhd, angular_distance, contains,
                       kappa, mu_weight, project, ray, solve_lambda, sphere_grid)
from .oracles import (GroundTruthWF, OracleError, generate_oracle, ground_truth,
                      metaplectic, oracle_names, sample_distribution)
from .polynomials import PhasePoly
from .symbols import (CharSetConfig, SamplingGrid, Symbol, asymptotic_sum,
                      char_set_poly, check_membership, isotropic_embedding,
                      make_cutoff, seminorm_estimate)
from .tfa import (AnalyticDistribution, CappedEvaluationError, Signal,
                  StftEvaluator, Window, invert_stft_grid, make_window,
                  moyal_ratio, stft_grid)
from .wavefront import (WaveFrontEstimate, WaveFrontEstimator, WavefrontConfig,
                        compare, decay_profile, estimate_wavefront,
                        invariance_suite)
from .weyl import (GridSpec, OperatorMatrix, SingularSymbolError, interior,
                   parametrix, quantization_shift, quantize,
                   weyl_apply_via_wigner, weyl_product_expansion, wigner)

__version__ = "0.1.0"
