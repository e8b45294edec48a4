"""Command-line entry point.

Subcommands: sample, density, correlate, kernel, verify, sweep.  Every
output file embeds its full resolved configuration (including the seed) in
a header comment, so any published number can be re-derived from the file
alone.  Bulk numeric data goes to CSV; verification reports and sweep
indexes go to JSON.  Exit codes: 0 success, 1 validation error, 2
numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .ensembles import EnsembleSpec, SamplingError, sample_batch
from .estimators import (Bump, ScalingWindow, TestFunction, empirical_density,
                         estimate_correlation_integral)
from .kernels import (KernelKind, NumericalError, k_airy, k_sine, matrix_kernel,
                      one_point_prediction)
from .oracle import VERIFIERS

OUTPUT_DIR_ENV = "BETATRACE_OUTPUT_DIR"


class ValidationError(ValueError):
    """Rejected configuration; the message names the offending field."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _out_path(args, default_name: str) -> Path:
    if args.output:
        return Path(args.output)
    base = Path(os.environ.get(OUTPUT_DIR_ENV, "."))
    return base / default_name


def _config_header(command: str, args, extra=None) -> str:
    skip = {"func", "output"}
    cfg = {k: v for k, v in vars(args).items() if k not in skip and v is not None}
    cfg["command"] = command
    if extra:
        cfg.update(extra)
    return json.dumps(cfg, sort_keys=True, default=str)


def _write_csv(path: Path, header: str, schema: str, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w") as fh:
        fh.write(f"# betatrace {__version__}\n")
        fh.write(f"# config: {header}\n")
        fh.write(f"# schema: {schema}\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    tmp.replace(path)


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
    tmp.replace(path)


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return int(args.seed)
    return int(np.random.SeedSequence().entropy % (2 ** 63))


def _spec_from(args) -> EnsembleSpec:
    try:
        return EnsembleSpec(args.n, args.beta, args.constraint, args.radius)
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc


def _window_from(args) -> ScalingWindow:
    if args.regime == "bulk" and not abs(args.bulk_u) < 1.0:
        raise ValidationError(f"--bulk-u must satisfy |u| < 1, got {args.bulk_u}")
    if args.regime == "zero":
        return ScalingWindow.zero(args.n)
    if args.regime == "bulk":
        return ScalingWindow.bulk(args.n, args.bulk_u)
    return ScalingWindow.edge(args.n, side=getattr(args, "edge_side", 1))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_sample(args) -> int:
    spec = _spec_from(args)
    seed = _resolve_seed(args)
    batch = sample_batch(spec, args.count, seed, path=args.path, workers=args.workers)
    header = _config_header("sample", args, {"seed": seed})
    rows = ([s.seed] + list(s.eigenvalues) for s in batch)
    out = _out_path(args, "sample.csv")
    _write_csv(out, header, "seed,x_1..x_N (ascending)", rows)
    print(f"sample: wrote {len(batch)} rows of {spec.n} eigenvalues to {out} (seed={seed})")
    return 0


def _cmd_density(args) -> int:
    spec = _spec_from(args)
    seed = _resolve_seed(args)
    if args.bins < 1:
        raise ValidationError(f"--bins must be >= 1, got {args.bins}")
    if not args.hi > args.lo:
        raise ValidationError("--hi must exceed --lo")
    batch = sample_batch(spec, args.count, seed, path=args.path, workers=args.workers)
    centers, values = empirical_density(batch, args.bins, (args.lo, args.hi))
    header = _config_header("density", args, {"seed": seed})
    out = _out_path(args, "density.csv")
    _write_csv(out, header, "bin_center,value", zip(centers, values))
    print(f"density: wrote {args.bins} bins to {out} (seed={seed})")
    return 0


def _parse_centers(text: str):
    try:
        return [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError as exc:
        raise ValidationError(f"--f-centers must be a comma list of reals, got {text!r}") from exc


def _cmd_correlate(args) -> int:
    spec = _spec_from(args)
    seed = _resolve_seed(args)
    window = _window_from(args)
    if args.arity not in (1, 2):
        raise ValidationError(f"--arity must be 1 or 2, got {args.arity}")
    if not args.f_width > 0:
        raise ValidationError("--f-width must be positive")
    centers = _parse_centers(args.f_centers)
    if not centers:
        raise ValidationError("--f-centers is empty")
    batch = sample_batch(spec, args.count, seed, path=args.path, workers=args.workers)
    rows = []
    for c in centers:
        bump = Bump(args.f_kind, c, args.f_width)
        if args.f_normalized:
            bump = bump.normalized()
        f = TestFunction(tuple([bump] * args.arity))
        est = estimate_correlation_integral(batch, f, window)
        f_id = f"{args.f_kind}:c={c:g}:w={args.f_width:g}:n={args.arity}" \
               + (":unit" if args.f_normalized else "")
        rows.append([est.value, est.stderr, est.samples, args.regime,
                     spec.beta, spec.n, f_id])
    header = _config_header("correlate", args, {"seed": seed})
    out = _out_path(args, "correlate.csv")
    _write_csv(out, header, "estimate,stderr,n_samples,regime,beta,N,f_id", rows)
    print(f"correlate: wrote {len(rows)} estimate(s) to {out} (seed={seed})")
    return 0


def _cmd_kernel(args) -> int:
    kind = KernelKind(args.family, args.beta)
    header = _config_header("kernel", args)
    out = _out_path(args, "kernel.csv")
    if args.diag:
        if args.points < 2:
            raise ValidationError("--points must be >= 2")
        t = np.linspace(args.t_min, args.t_max, args.points)
        vals = one_point_prediction(kind, t)
        _write_csv(out, header, "t,value", zip(t, vals))
        print(f"kernel: wrote {args.points} diagonal values to {out}")
        return 0
    if args.x is None or args.y is None:
        raise ValidationError("pointwise mode needs --x and --y (or use --diag)")
    if args.beta == 2:
        v = k_sine(args.x, args.y) if args.family == "sine" else k_airy(args.x, args.y)
        _write_csv(out, header, "x,y,value", [[args.x, args.y, v]])
        print(f"kernel: K({args.x}, {args.y}) = {v!r} -> {out}")
    else:
        m = matrix_kernel(kind, args.x, args.y)
        _write_csv(out, header, "x,y,e11,e12,e21,e22",
                   [[args.x, args.y, m[0, 0], m[0, 1], m[1, 0], m[1, 1]]])
        print(f"kernel: block K({args.x}, {args.y}) -> {out}")
    return 0


def _parse_n_list(text: str):
    try:
        vals = [int(v) for v in text.split(",") if v.strip() != ""]
    except ValueError as exc:
        raise ValidationError(f"--n-list must be a comma list of integers, got {text!r}") from exc
    if not vals:
        raise ValidationError("--n-list is empty")
    return vals


def _cmd_verify(args) -> int:
    check = args.check
    fn = VERIFIERS.get(check)
    if fn is None:
        raise ValidationError(f"unknown --check {check!r}; choose from {sorted(VERIFIERS)}")
    kwargs = {}
    if check == "psi-normalization":
        kwargs = {"n": args.n, "beta": args.beta}
    elif check == "psi-central-mass":
        alpha = args.alpha if args.alpha is not None else float(args.n) ** (-0.8)
        kwargs = {"n": args.n, "beta": args.beta, "alpha": alpha}
    elif check == "tail-rate":
        kwargs = {"n_list": _parse_n_list(args.n_list), "beta": args.beta,
                  "theta": args.theta}
    elif check == "radial-concentration":
        kwargs = {"n_list": _parse_n_list(args.n_list), "beta": args.beta,
                  "kappa": args.kappa}
    elif check == "bridge-equation":
        kwargs = {"n_dim": args.n, "n_samples": args.samples,
                  "master_seed": _resolve_seed(args)}
    elif check == "scaling-relation":
        kwargs = {"n_dim": args.n, "beta": args.beta, "n_samples": args.samples,
                  "master_seed": _resolve_seed(args)}
    try:
        report = fn(**kwargs)
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc
    out = _out_path(args, f"verify_{check}.json")
    _write_json(out, report)
    if args.csv and "rows" in report:
        rows = report["rows"]
        if check == "tail-rate":
            csv_rows = [[r["n"], r["ratio_lower"], r["ratio_upper"]] for r in rows]
            schema = "N,ratio_lower,ratio_upper"
        elif check == "radial-concentration":
            csv_rows = [[r["n"], r["ratio"]] for r in rows]
            schema = "N,ratio"
        else:
            csv_rows = [[r.get("x"), r.get("lhs"), r.get("rhs")] for r in rows]
            schema = "x,lhs,rhs"
        _write_csv(Path(args.csv), _config_header("verify", args), schema, csv_rows)
    status = "pass" if report["pass"] else "FAIL"
    print(f"verify {check}: {status} (observed={report['observed']}, "
          f"tolerance={report['tolerance']}) -> {out}")
    return 0 if report["pass"] else 2


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _sweep_point_argv(command: str, base: dict, params: dict, out_file: Path):
    argv = [command]
    merged = dict(base)
    merged.update(params)
    for key, val in sorted(merged.items()):
        flag = "--" + key.replace("_", "-")
        if isinstance(val, bool):
            if val:
                argv.append(flag)
        else:
            argv.extend([flag, str(val)])
    argv.extend(["--output", str(out_file)])
    return argv


def _cmd_sweep(args) -> int:
    cfg_path = Path(args.config)
    if not cfg_path.exists():
        raise ValidationError(f"sweep config not found: {cfg_path}")
    try:
        cfg = json.loads(cfg_path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"sweep config is not valid JSON: {exc}") from exc
    command = cfg.get("command")
    if command not in ("sample", "density", "correlate"):
        raise ValidationError("sweep config needs command: sample | density | correlate")
    grid = cfg.get("grid") or {}
    ns = grid.get("n") or []
    betas = grid.get("beta") or []
    regimes = grid.get("regime") or [None]
    if not ns or not betas:
        raise ValidationError("sweep grid must list at least one n and one beta")
    if cfg.get("output_dir"):
        out_dir = Path(cfg["output_dir"])
    else:
        out_dir = Path(os.environ.get(OUTPUT_DIR_ENV, ".")) / "sweep_out"
    out_dir.mkdir(parents=True, exist_ok=True)
    base = cfg.get("base") or {}

    old_index = {}
    index_path = out_dir / "index.json"
    if index_path.exists():
        try:
            prev = json.loads(index_path.read_text())
            old_index = {p["file"]: p.get("sha256") for p in prev.get("points", [])}
        except (json.JSONDecodeError, KeyError):
            old_index = {}

    points = []
    for n in ns:
        for beta in betas:
            for regime in regimes:
                params = {"n": n, "beta": beta}
                name = f"{command}_n{n}_beta{beta}"
                if regime is not None:
                    params["regime"] = regime
                    name += f"_{regime}"
                points.append((params, out_dir / (name + ".csv")))

    def run_point(point):
        params, out_file = point
        if out_file.exists() and old_index.get(out_file.name) == _sha256(out_file):
            return {"params": params, "file": out_file.name,
                    "sha256": _sha256(out_file), "status": "skipped"}
        argv = _sweep_point_argv(command, base, params, out_file)
        try:
            code = run(argv)
        except (ValidationError, NumericalError, SamplingError) as exc:
            return {"params": params, "file": out_file.name, "sha256": None,
                    "status": f"failed: {exc}"}
        if code != 0:
            return {"params": params, "file": out_file.name, "sha256": None,
                    "status": f"failed: exit {code}"}
        return {"params": params, "file": out_file.name,
                "sha256": _sha256(out_file), "status": "ok"}

    if args.workers > 1:
        with ThreadPoolExecutor(max_workers=args.workers) as pool:
            entries = list(pool.map(run_point, points))
    else:
        entries = [run_point(p) for p in points]

    index = {"command": command, "points": entries}
    _write_json(index_path, index)
    failed = [e for e in entries if e["status"].startswith("failed")]
    print(f"sweep: {len(entries)} point(s), {len(failed)} failed -> {index_path}")
    return 2 if failed else 0


# ---------------------------------------------------------------------------
# parser assembly
# ---------------------------------------------------------------------------

def _add_sampling_args(p):
    p.add_argument("--n", type=int, required=True, help="matrix dimension N")
    p.add_argument("--beta", type=int, choices=(1, 2, 4), required=True)
    p.add_argument("--constraint", choices=("none", "fixed", "bounded"), default="none")
    p.add_argument("--radius", type=float, default=None,
                   help="constraint strength r (default sqrt(N)/2)")
    p.add_argument("--count", type=int, default=1, help="number of samples")
    p.add_argument("--seed", type=int, default=None,
                   help="master seed (auto-generated and recorded if omitted)")
    p.add_argument("--path", choices=("dense", "tridiagonal"), default="tridiagonal")
    p.add_argument("--workers", type=int, default=1)


def build_parser() -> _Parser:
    parser = _Parser(prog="betatrace",
                     description="Gaussian beta-ensembles with trace constraints: "
                                 "samplers, kernel evaluation, verification")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sample", help="draw eigenvalue samples as CSV")
    _add_sampling_args(p)
    p.add_argument("--output", default=None)
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("density", help="binned estimate of the level density")
    _add_sampling_args(p)
    p.add_argument("--bins", type=int, default=50)
    p.add_argument("--lo", type=float, default=-1.2)
    p.add_argument("--hi", type=float, default=1.2)
    p.add_argument("--output", default=None)
    p.set_defaults(func=_cmd_density)

    p = sub.add_parser("correlate", help="Monte Carlo correlation integrals")
    _add_sampling_args(p)
    p.add_argument("--regime", choices=("zero", "bulk", "edge"), default="zero")
    p.add_argument("--bulk-u", type=float, default=0.0)
    p.add_argument("--edge-side", type=int, choices=(-1, 1), default=1)
    p.add_argument("--arity", type=int, default=1)
    p.add_argument("--f-kind", choices=("gauss", "spline"), default="spline")
    p.add_argument("--f-centers", default="0.0",
                   help="comma list of bump centers, one estimate per center")
    p.add_argument("--f-width", type=float, default=2.0, help="bump half-width")
    p.add_argument("--f-normalized", action="store_true",
                   help="rescale the bump to unit integral")
    p.add_argument("--output", default=None)
    p.set_defaults(func=_cmd_correlate)

    p = sub.add_parser("kernel", help="pointwise kernel evaluation / prediction tables")
    p.add_argument("--family", choices=("sine", "airy"), required=True)
    p.add_argument("--beta", type=int, choices=(1, 2, 4), required=True)
    p.add_argument("--x", type=float, default=None)
    p.add_argument("--y", type=float, default=None)
    p.add_argument("--diag", action="store_true",
                   help="tabulate the one-point prediction on a t-grid")
    p.add_argument("--t-min", type=float, default=-4.0)
    p.add_argument("--t-max", type=float, default=4.0)
    p.add_argument("--points", type=int, default=81)
    p.add_argument("--output", default=None)
    p.set_defaults(func=_cmd_kernel)

    p = sub.add_parser("verify", help="run a named identity verifier")
    p.add_argument("--check", required=True)
    p.add_argument("--n", type=int, default=6)
    p.add_argument("--beta", type=int, choices=(1, 2, 4), default=2)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--theta", type=float, default=0.7)
    p.add_argument("--kappa", type=float, default=1.5)
    p.add_argument("--n-list", default="50,100,200,400")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--csv", default=None, help="also write trend rows as CSV")
    p.add_argument("--output", default=None)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("sweep", help="run a grid of configurations from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=_cmd_sweep)

    return parser


def run(argv) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


def main(argv=None) -> int:
    try:
        return run(sys.argv[1:] if argv is None else argv)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (NumericalError, SamplingError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
