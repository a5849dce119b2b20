"""Deterministic JSON/CSV serialization for CLI artifacts.

All JSON artifacts carry the schema key "aniso-gabor/1", embed the resolved
run configuration, sort their keys, and format floats with Python's
shortest-round-trip repr, so identical inputs produce byte-identical files.
"""

from __future__ import annotations

import csv
import json

import numpy as np

from .tfa import Signal
from .wavefront import WaveFrontEstimate, WavefrontConfig

SCHEMA = "aniso-gabor/1"

__all__ = [
    "SCHEMA",
    "dump_json",
    "estimate_from_json_obj",
    "jsonable",
    "read_signal_csv",
    "truth_json_obj",
    "write_decay_csv",
    "write_signal_csv",
]


def jsonable(obj):
    """Recursively convert numpy scalars/arrays so json.dumps accepts them."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, float) and not np.isfinite(obj):
        return repr(obj)
    return obj


def dump_json(obj, path):
    text = json.dumps(jsonable(obj), sort_keys=True, indent=1)
    with open(path, "w") as f:
        f.write(text + "\n")
    return text


def write_signal_csv(sig, path):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["t", "re", "im"])
        for t, v in zip(sig.grid.x, sig.samples):
            w.writerow([repr(float(t)), repr(float(v.real)), repr(float(v.imag))])


def read_signal_csv(path):
    from .weyl import GridSpec

    ts, vs = [], []
    with open(path) as f:
        r = csv.reader(f)
        header = next(r)
        if [h.strip() for h in header[:3]] != ["t", "re", "im"]:
            raise ValueError("signal CSV must have the header t,re,im")
        for row in r:
            ts.append(float(row[0]))
            vs.append(complex(float(row[1]), float(row[2])))
    ts = np.asarray(ts)
    n = ts.size
    dx = ts[1] - ts[0]
    if not np.allclose(np.diff(ts), dx, rtol=1e-9, atol=1e-12):
        raise ValueError("signal CSV grid is not uniform")
    T = -ts[0]
    if abs(2.0 * T / n - dx) > 1e-9 * max(dx, 1.0):
        raise ValueError("signal CSV grid is not of the form [-T, T)")
    return Signal(np.asarray(vs), GridSpec(float(T), int(n)))


def write_decay_csv(profiles, path):
    """Decay-map export: direction angle x lambda x log|V| rows."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["angle", "lambda", "log_abs_v", "valid"])
        for p in profiles:
            ang = float(np.arctan2(p.direction[1], p.direction[0]))
            for lam, v, ok in zip(p.lambdas, p.log_sup, p.valid):
                w.writerow([repr(ang), repr(float(lam)), repr(float(v)), int(ok)])


def truth_json_obj(gt, config_echo=None):
    return {
        "schema": SCHEMA,
        "kind": "ground_truth",
        "s": gt.s,
        "equality": bool(gt.equality),
        "directions": [[float(v) for v in d] for d in gt.directions],
        "label": gt.label,
        "config": config_echo or {},
    }


def estimate_from_json_obj(obj):
    """Rebuild a comparable WaveFrontEstimate from its JSON form."""
    if obj.get("kind") == "ground_truth":
        from .oracles import GroundTruthWF

        return GroundTruthWF(s=float(obj["s"]),
                             directions=np.asarray(obj["directions"], dtype=float)
                             .reshape(-1, 2),
                             equality=bool(obj.get("equality", True)),
                             label=obj.get("label", ""))
    dirs = np.array([e["vector"] for e in obj["directions"]], dtype=float)
    labels = np.array([e["class"] for e in obj["directions"]])
    slopes = np.array([e["slope"] if e["slope"] is not None else np.nan
                       for e in obj["directions"]])
    residuals = np.array([e["residual"] if e["residual"] is not None else np.nan
                          for e in obj["directions"]])
    caps = np.array([e["lambda_max_valid"] for e in obj["directions"]])
    known = {k: v for k, v in obj.get("config", {}).items()
             if k in WavefrontConfig.__dataclass_fields__}
    cfg = WavefrontConfig(**known) if known else WavefrontConfig()
    return WaveFrontEstimate(s=float(obj["s"]), directions=dirs, labels=labels,
                             slopes=slopes, residuals=residuals,
                             lambda_caps=caps, config=cfg)
