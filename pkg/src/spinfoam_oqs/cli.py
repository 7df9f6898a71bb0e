"""Command-line scenario runner.

Subcommands: evolve, steady-state, two-level, fit, sample, compare,
spectral-temperature.  One scenario per process; --jobs parallelizes a
batch of independent configs.  CSV outputs are comma-separated with a
header row, UTF-8, LF line endings; JSON reports use a stable key order.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="override scenario seed")
    parser.add_argument("--jmax", default=None, help="override spin cutoff (e.g. 2 or 5/2)")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument(
        "--deterministic",
        action="store_true",
        default=True,
        help="deterministic mode (default; recorded in the report)",
    )


def _load_config(path: str, args) -> "ScenarioConfig":
    from .scenario import ScenarioConfig

    cfg = ScenarioConfig.from_file(path)
    if args.seed is not None:
        cfg.raw["seed"] = args.seed
    if args.jmax is not None:
        cfg.raw["jmax"] = args.jmax
    cfg.raw["deterministic"] = bool(args.deterministic)
    return cfg


def _out_dir(args, config_path: str) -> Path:
    if args.out:
        return Path(args.out)
    return Path(config_path).resolve().parent / (Path(config_path).stem + "_out")


def _cmd_evolve(args) -> int:
    from .scenario import run_scenario

    jobs = max(1, args.jobs)
    tasks = [(path, _out_dir(args, path) if len(args.config) == 1 or args.out is None
              else Path(args.out) / Path(path).stem) for path in args.config]
    if args.out and len(args.config) == 1:
        tasks = [(args.config[0], Path(args.out))]

    def run_one(path, out):
        try:
            cfg = _load_config(path, args)
        except Exception as exc:  # noqa: BLE001 - bad config is a run failure
            out = Path(out)
            out.mkdir(parents=True, exist_ok=True)
            report = {
                "status": "error",
                "error": f"{type(exc).__name__}: {exc}",
                "config_path": str(path),
            }
            (out / "report.json").write_text(
                json.dumps(report, sort_keys=True, indent=2) + "\n",
                encoding="utf-8",
                newline="\n",
            )
            return path, report
        return path, run_scenario(cfg, out)

    results = []
    if jobs == 1 or len(tasks) == 1:
        for path, out in tasks:
            results.append(run_one(path, out))
    else:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda t: run_one(*t), tasks))
    failed = 0
    for path, report in results:
        print(f"{path}: {report['status']}"
              + (f" ({report.get('error')})" if report["status"] != "ok" else ""))
        if report["status"] != "ok":
            failed += 1
    return 1 if failed else 0


def _cmd_steady_state(args) -> int:
    from .scenario import steady_state_report

    cfg = _load_config(args.config, args)
    report = steady_state_report(cfg, _out_dir(args, args.config))
    if report["status"] != "ok":
        print(f"error: {report.get('error')}", file=sys.stderr)
        return 1
    for idx, pops in enumerate(report["populations"]):
        print(f"steady[{idx}]: " + ", ".join(f"{p:.6g}" for p in pops))
    return 0


def _cmd_two_level(args) -> int:
    from .amplitudes import AsymptoticParams, two_level_rho11

    params = AsymptoticParams(
        gamma_immirzi=args.gamma_immirzi,
        regge_action=args.regge_action,
        alpha=complex(args.alpha_re, args.alpha_im),
        n_plus_abs=args.n_plus_abs,
    )
    if args.sweep is None:
        value = two_level_rho11(args.lambda1, args.lambda2, params)
        print(repr(value))
        return 0
    lo, hi, n = args.sweep
    grid = np.linspace(float(lo), float(hi), int(n))
    lines = ["lambda1,lambda2,rho11"]
    for l1 in grid:
        for l2 in grid:
            lines.append(f"{l1!r},{l2!r},{two_level_rho11(float(l1), float(l2), params)!r}")
    out = Path(args.out or "two_level_sweep.csv")
    if out.is_dir():
        out = out / "two_level_sweep.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    print(f"wrote {out}")
    return 0


def _fit_basis(spec, config_path: str):
    """Basis triples: from a textual network file or sampled randomly."""
    from .bathfit import admissible_triple_basis, basis_from_network_file

    if "basis_file" in spec:
        path = Path(config_path).resolve().parent / spec["basis_file"]
        return basis_from_network_file(path)
    return admissible_triple_basis(
        int(spec.get("dim", 10)),
        spec.get("j_min", "1/2"),
        spec.get("j_max", "5/2"),
        seed=int(spec.get("basis_seed", 0)),
    )


def _cmd_fit(args) -> int:
    from .bathfit import FitProblem, chain_target, fit_bath, standard_model

    with open(args.config, "r", encoding="utf-8") as fh:
        spec = json.load(fh)
    seed = args.seed if args.seed is not None else int(spec.get("seed", 0))
    basis = _fit_basis(spec, args.config)
    model = standard_model(basis)
    target = chain_target(
        int(spec.get("vertices", 2)),
        basis,
        internal_max=spec.get("internal_max", "2"),
        j_max=spec.get("j_max", "5/2"),
    )
    problem = FitProblem(
        target,
        model,
        restarts=int(spec.get("restarts", 5)),
        max_evals_per_restart=int(spec.get("max_evals_per_restart", 4000)),
        seed=seed,
    )
    result = fit_bath(problem)
    out = _out_dir(args, args.config)
    out.mkdir(parents=True, exist_ok=True)
    payload = {
        "params": [float(x) for x in result.params],
        "cost": result.cost,
        "evaluations": result.evaluations,
        "seed": result.seed,
        "status": result.status,
        "vertices": int(spec.get("vertices", 2)),
        "dim": len(basis),
    }
    (out / "fit_report.json").write_text(
        json.dumps(payload, sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
        newline="\n",
    )
    print(f"C = {result.cost!r} after {result.evaluations} evaluations ({result.status})")
    return 0


def _cmd_sample(args) -> int:
    from .bathfit import FitProblem, chain_target, sample_cost_distribution, standard_model

    with open(args.config, "r", encoding="utf-8") as fh:
        spec = json.load(fh)
    seed = args.seed if args.seed is not None else int(spec.get("seed", 0))
    basis = _fit_basis(spec, args.config)
    model = standard_model(basis)
    target = chain_target(
        int(spec.get("vertices", 2)),
        basis,
        internal_max=spec.get("internal_max", "2"),
        j_max=spec.get("j_max", "5/2"),
    )
    problem = FitProblem(target, model, seed=seed)
    hist = sample_cost_distribution(problem, args.n)
    out = _out_dir(args, args.config)
    out.mkdir(parents=True, exist_ok=True)
    (out / "histogram.csv").write_text(hist.to_csv(), encoding="utf-8", newline="\n")
    print(
        f"n={hist.n_samples} min={hist.minimum!r} mean={hist.mean!r} max={hist.maximum!r}"
    )
    return 0


def _read_series(path: str, x_col: str, y_col: str):
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        xi, yi = header.index(x_col), header.index(y_col)
        xs, ys = [], []
        for line in fh:
            if not line.strip():
                continue
            cells = line.strip().split(",")
            xs.append(float(cells[xi]))
            ys.append(float(cells[yi]))
    return np.array(xs), np.array(ys)


def _cmd_compare(args) -> int:
    from .qed_reference import compare_curves

    xa, ya = _read_series(args.series_a, args.x_col, args.y_col)
    xb, yb = _read_series(args.series_b, args.x_col_b or args.x_col, args.y_col_b or args.y_col)
    if args.normalized_time:
        xa = xa / xa.max()
        xb = xb / xb.max()
    distance = compare_curves((xa, ya), (xb, yb))
    print(repr(distance))
    return 0


def _cmd_spectral_temperature(args) -> int:
    from .observables import EnergySpectrum, spectral_temperature
    from .recoupling import as_spin

    spins = tuple(as_spin(s.strip()) for s in args.spins.split(","))
    spec = EnergySpectrum(spins, scale=args.scale)
    with open(args.trajectory, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        pop_cols = [i for i, name in enumerate(header) if name.startswith("p_")]
        if len(pop_cols) != len(spins):
            print(
                f"error: trajectory has {len(pop_cols)} population columns, "
                f"got {len(spins)} spins",
                file=sys.stderr,
            )
            return 1
        lines = ["step,inv_kbt,temperature"]
        for line in fh:
            if not line.strip():
                continue
            cells = line.strip().split(",")
            step = cells[0]
            pops = np.array([float(cells[i]) for i in pop_cols])
            rho = np.diag(pops).astype(complex)
            try:
                beta, temp = spectral_temperature(rho, spec)
            except ValueError:
                continue
            lines.append(f"{step},{beta!r},{temp!r}")
    out = Path(args.out or "temperature.csv")
    if out.is_dir():
        out = out / "temperature.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    print(f"wrote {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spinfoam-oqs",
        description="Reduced open-system dynamics of spin-network states",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evolve", help="run one or more scenario configs")
    p.add_argument("--config", nargs="+", required=True)
    p.add_argument("--jobs", type=int, default=1, help="parallel scenarios")
    _add_common(p)
    p.set_defaults(func=_cmd_evolve)

    p = sub.add_parser("steady-state", help="steady states of a scenario's generator")
    p.add_argument("--config", required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_steady_state)

    p = sub.add_parser("two-level", help="closed-form two-level steady state")
    p.add_argument("--lambda1", type=float, required=True)
    p.add_argument("--lambda2", type=float, required=True)
    p.add_argument("--alpha-re", type=float, default=0.0)
    p.add_argument("--alpha-im", type=float, default=0.0)
    p.add_argument("--gamma-immirzi", type=float, default=1.0)
    p.add_argument("--regge-action", type=float, default=1.0)
    p.add_argument("--n-plus-abs", type=float, default=1.0)
    p.add_argument(
        "--sweep", nargs=3, metavar=("LO", "HI", "N"), default=None,
        help="write a rho11 grid over [LO, HI]^2 with N points per axis",
    )
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_two_level)

    p = sub.add_parser("fit", help="fit the simplified two-vertex model to a foam target")
    p.add_argument("--config", required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("sample", help="cost distribution at random model parameters")
    p.add_argument("--config", required=True)
    p.add_argument("--n", type=int, default=10000)
    _add_common(p)
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("compare", help="L2 distance of two integral-normalized CSV series")
    p.add_argument("series_a")
    p.add_argument("series_b")
    p.add_argument("--x-col", default="time")
    p.add_argument("--y-col", default="release")
    p.add_argument("--x-col-b", default=None)
    p.add_argument("--y-col-b", default=None)
    p.add_argument("--normalized-time", action="store_true")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser(
        "spectral-temperature", help="temperature series from an exported trajectory"
    )
    p.add_argument("--trajectory", required=True)
    p.add_argument("--spins", required=True, help="comma-separated level spins, e.g. 0,1,2")
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_spectral_temperature)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
