"""Command-line surface.

Subcommands: gen, stft, wavefront, symbol-check, charset, weyl-apply,
compare, invariance.  Every subcommand writes deterministic JSON/CSV
artifacts (schema "aniso-gabor/1", resolved config embedded) and a short
human-readable summary on stdout.  Exit codes: 0 on success/pass, 2 when a
comparison fails, 1 on usage or runtime errors.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import io as agio
from .config import load_config
from .oracles import OracleError, generate_oracle, oracle_names, sample_distribution
from .polynomials import PhasePoly
from .symbols import CharSetConfig, Symbol, char_set_poly, check_membership
from .tfa import StftEvaluator, stft_grid
from .wavefront import compare, estimate_wavefront, invariance_suite


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _add_common(p):
    p.add_argument("--config", help="TOML or JSON config file")
    p.add_argument("--s", type=float, default=None)
    p.add_argument("--window", default=None)
    p.add_argument("--lambda-min", dest="lambda_min", type=float, default=None)
    p.add_argument("--lambda-max", dest="lambda_max", type=float, default=None)
    p.add_argument("--lambda-points", dest="lambda_points", type=int, default=None)
    p.add_argument("--n-thresh", dest="n_thresh", type=float, default=None)
    p.add_argument("--cap-radius", dest="cap_radius", type=float, default=None)
    p.add_argument("--sphere-res", dest="sphere_res", type=int, default=None)
    p.add_argument("--grid-t", dest="grid_half_width", type=float, default=None)
    p.add_argument("--grid-n", dest="grid_n", type=int, default=None)
    p.add_argument("--taper", type=float, default=None)


def _resolve(args):
    keys = ("s", "window", "lambda_min", "lambda_max", "lambda_points", "n_thresh",
            "cap_radius", "sphere_res", "grid_half_width", "grid_n", "taper")
    overrides = {k: getattr(args, k, None) for k in keys}
    return load_config(getattr(args, "config", None), **overrides)


def _input_evaluator(args, cfg):
    """Evaluator from --oracle or --signal, honoring the window."""
    if getattr(args, "oracle", None):
        params = json.loads(args.params) if getattr(args, "params", None) else {}
        dist, truth = generate_oracle(args.oracle, params)
        return StftEvaluator(dist, cfg.window), dist, truth
    if getattr(args, "signal", None):
        sig = agio.read_signal_csv(args.signal)
        return StftEvaluator(sig, cfg.window), None, None
    raise ValueError("provide either --oracle or --signal")


def _cmd_gen(args):
    cfg = _resolve(args)
    if args.list:
        for name in oracle_names():
            print(name)
        return 0
    dist, truth = generate_oracle(args.oracle,
                                  json.loads(args.params) if args.params else {})
    wrote = []
    if args.out:
        sig = sample_distribution(dist, cfg.grid(), taper=cfg.taper)
        agio.write_signal_csv(sig, args.out)
        wrote.append(args.out)
    if args.truth_out:
        agio.dump_json(agio.truth_json_obj(truth(cfg.s), cfg.echo()), args.truth_out)
        wrote.append(args.truth_out)
    print(f"gen {args.oracle}: wrote {', '.join(wrote) if wrote else 'nothing'}")
    return 0


def _cmd_stft(args):
    cfg = _resolve(args)
    ev, dist, _ = _input_evaluator(args, cfg)
    if ev.method == "sampled":
        sig = ev.dist.signal
    else:
        sig = sample_distribution(dist, cfg.grid(), taper=cfg.taper)
    V = stft_grid(sig, cfg.window)
    g = sig.grid
    stride = max(args.stride, 1)
    import csv as _csv

    with open(args.out, "w", newline="") as f:
        w = _csv.writer(f)
        w.writerow(["x", "xi", "re", "im"])
        xs = g.x[::stride]
        xis = g.xi_sorted[::stride]
        for i, xv in enumerate(xs):
            for j, xiv in enumerate(xis):
                z = V[i * stride, j * stride]
                w.writerow([repr(float(xv)), repr(float(xiv)),
                            repr(float(z.real)), repr(float(z.imag))])
    print(f"stft: wrote {args.out} ({xs.size} x {xis.size} samples)")
    return 0


def _cmd_wavefront(args):
    cfg = _resolve(args)
    ev, dist, truth = _input_evaluator(args, cfg)
    est = estimate_wavefront(ev, cfg.s, cfg=cfg.wavefront(),
                             keep_profiles=bool(args.decay_csv))
    obj = est.to_json_obj()
    obj["config"] = cfg.echo()
    if args.out:
        agio.dump_json(obj, args.out)
    if args.decay_csv:
        agio.write_decay_csv(est.profiles, args.decay_csv)
    n_sing = int(np.sum(est.labels == "singular"))
    print(f"wavefront s={cfg.s}: {n_sing} singular, "
          f"{int(np.sum(est.labels == 'regular'))} regular, "
          f"{est.n_inconclusive} inconclusive"
          + (f"; wrote {args.out}" if args.out else ""))
    if args.check_truth:
        if truth is None:
            raise ValueError("--check-truth requires --oracle")
        rep = compare(est, truth(cfg.s), "equal", np.deg2rad(args.tol_deg))
        print(f"truth check: {'PASS' if rep.passed else 'FAIL'}"
              f" (mode={rep.mode}{', ' + rep.note if rep.note else ''})")
        return 0 if rep.passed else 2
    return 0


def _load_symbol(path):
    with open(path) as f:
        data = json.load(f)
    if isinstance(data, dict) and "coefficients" in data:
        poly = PhasePoly.from_json_obj(data["coefficients"])
        meta = data
    else:
        poly = PhasePoly.from_json_obj(data)
        meta = {}
    return Symbol.from_poly(poly, meta.get("m"), meta.get("s")), meta


def _cmd_symbol_check(args):
    cfg = _resolve(args)
    sym, meta = _load_symbol(args.symbol)
    m = args.m if args.m is not None else meta.get("m")
    if m is None:
        raise ValueError("provide --m (claimed order)")
    ok, rep0, rep1 = check_membership(sym, m, cfg.s, j=args.j)
    out = {
        "schema": agio.SCHEMA,
        "kind": "seminorm_report",
        "m": m, "s": cfg.s, "j": args.j,
        "bounded": bool(ok),
        "coarse": rep0.to_json_obj(),
        "refined": rep1.to_json_obj(),
        "config": cfg.echo(),
    }
    if args.out:
        agio.dump_json(out, args.out)
    print(f"symbol-check m={m} s={cfg.s}: "
          f"{'bounded (stable under refinement)' if ok else 'NOT bounded'}")
    return 0


def _cmd_charset(args):
    cfg = _resolve(args)
    sym, meta = _load_symbol(args.symbol)
    est = char_set_poly(sym, cfg.s, args.m1,
                        config=CharSetConfig(lambda_max=args.r_probe))
    obj = est.to_json_obj()
    obj["schema"] = agio.SCHEMA
    obj["kind"] = "charset"
    obj["config"] = cfg.echo()
    if args.out:
        agio.dump_json(obj, args.out)
    flagged = est.char_directions()
    angles = np.rad2deg(np.arctan2(flagged[:, 1], flagged[:, 0])) if len(flagged) else []
    print(f"charset s={cfg.s} m1={args.m1}: {len(flagged)} characteristic "
          f"directions" + (f" at degrees {np.round(angles, 1).tolist()}"
                           if 0 < len(flagged) <= 16 else ""))
    return 0


def _cmd_weyl_apply(args):
    cfg = _resolve(args)
    from .weyl import quantize

    sym, _ = _load_symbol(args.symbol)
    sig = agio.read_signal_csv(args.signal)
    op = quantize(sym, args.t, sig.grid)
    if op.warning:
        print(f"warning: {op.warning}", file=sys.stderr)
    out = type(sig)(op.apply(sig.samples), sig.grid)
    agio.write_signal_csv(out, args.out)
    print(f"weyl-apply t={args.t}: wrote {args.out}")
    return 0


def _cmd_compare(args):
    with open(args.a) as f:
        a = agio.estimate_from_json_obj(json.load(f))
    with open(args.b) as f:
        b = agio.estimate_from_json_obj(json.load(f))
    rep = compare(a, b, args.mode, np.deg2rad(args.tol_deg))
    if args.out:
        obj = rep.to_json_obj()
        obj["schema"] = agio.SCHEMA
        obj["kind"] = "comparison"
        agio.dump_json(obj, args.out)
    print(f"compare mode={args.mode}: {'PASS' if rep.passed else 'FAIL'} "
          f"(|left|={rep.n_left}, |right|={rep.n_right}, "
          f"worst unmatched={np.rad2deg(rep.max_unmatched):.2f} deg, "
          f"inconclusive excluded: {rep.inconclusive_left}+{rep.inconclusive_right})")
    return 0 if rep.passed else 2


def _cmd_invariance(args):
    cfg = _resolve(args)
    dist, _ = generate_oracle(args.oracle,
                              json.loads(args.params) if args.params else {})
    checks = args.checks.split(",") if args.checks else None
    out = invariance_suite(dist, cfg.s, cfg=cfg.wavefront(),
                           angular_tol=np.deg2rad(args.tol_deg), checks=checks,
                           window=cfg.window)
    results = {}
    failed = False
    for name, rep in out.items():
        if name == "base":
            continue
        if isinstance(rep, str):
            results[name] = rep
            print(f"  {name}: {rep}")
        else:
            results[name] = rep.to_json_obj()
            print(f"  {name}: {'PASS' if rep.passed else 'FAIL'}")
            failed = failed or not rep.passed
    if args.out:
        agio.dump_json({"schema": agio.SCHEMA, "kind": "invariance",
                        "oracle": args.oracle, "results": results,
                        "config": cfg.echo()}, args.out)
    return 2 if failed else 0


def build_parser():
    p = _Parser(prog="aniso-gabor",
                description="anisotropic phase-space calculus and Gabor "
                            "wave-front estimation")
    sub = p.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("gen", help="emit oracle samples and ground truth")
    _add_common(g)
    g.add_argument("--oracle")
    g.add_argument("--params", help="JSON parameter object")
    g.add_argument("--out", help="signal CSV path")
    g.add_argument("--truth-out", dest="truth_out", help="ground-truth JSON path")
    g.add_argument("--list", action="store_true", help="list catalog names")
    g.set_defaults(func=_cmd_gen)

    st = sub.add_parser("stft", help="dump an STFT field")
    _add_common(st)
    st.add_argument("--oracle")
    st.add_argument("--params")
    st.add_argument("--signal", help="signal CSV path")
    st.add_argument("--stride", type=int, default=8)
    st.add_argument("--out", required=True)
    st.set_defaults(func=_cmd_stft)

    wf = sub.add_parser("wavefront", help="estimate the wave front set")
    _add_common(wf)
    wf.add_argument("--oracle")
    wf.add_argument("--params")
    wf.add_argument("--signal")
    wf.add_argument("--out")
    wf.add_argument("--decay-csv", dest="decay_csv")
    wf.add_argument("--check-truth", dest="check_truth", action="store_true")
    wf.add_argument("--tol-deg", dest="tol_deg", type=float, default=5.0)
    wf.set_defaults(func=_cmd_wavefront)

    sc = sub.add_parser("symbol-check", help="empirical seminorm membership")
    _add_common(sc)
    sc.add_argument("--symbol", required=True, help="polynomial symbol JSON")
    sc.add_argument("--m", type=float, default=None)
    sc.add_argument("--j", type=int, default=2)
    sc.add_argument("--out")
    sc.set_defaults(func=_cmd_symbol_check)

    ch = sub.add_parser("charset", help="characteristic set of a polynomial symbol")
    _add_common(ch)
    ch.add_argument("--symbol", required=True)
    ch.add_argument("--m1", type=float, required=True)
    ch.add_argument("--r-probe", dest="r_probe", type=float, default=256.0)
    ch.add_argument("--out")
    ch.set_defaults(func=_cmd_charset)

    wa = sub.add_parser("weyl-apply", help="apply a quantized symbol to a signal")
    _add_common(wa)
    wa.add_argument("--symbol", required=True)
    wa.add_argument("--signal", required=True)
    wa.add_argument("--t", type=float, default=0.5)
    wa.add_argument("--out", required=True)
    wa.set_defaults(func=_cmd_weyl_apply)

    cp = sub.add_parser("compare", help="compare two estimates / ground truths")
    cp.add_argument("--a", required=True)
    cp.add_argument("--b", required=True)
    cp.add_argument("--mode", choices=("subset", "equal"), default="subset")
    cp.add_argument("--tol-deg", dest="tol_deg", type=float, default=5.0)
    cp.add_argument("--out")
    cp.set_defaults(func=_cmd_compare)

    iv = sub.add_parser("invariance", help="window/shift/metaplectic invariances")
    _add_common(iv)
    iv.add_argument("--oracle", required=True)
    iv.add_argument("--params")
    iv.add_argument("--checks", help="comma-separated subset of checks")
    iv.add_argument("--tol-deg", dest="tol_deg", type=float, default=5.0)
    iv.add_argument("--out")
    iv.set_defaults(func=_cmd_invariance)

    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as e:
        return e.code if e.code is not None else 0
    except (OracleError, ValueError, OSError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
