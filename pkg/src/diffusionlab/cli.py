"""Command line interface.

    difflab [--out DIR] [--workers K] [--tol-scale F] <verb> ...

Verbs: profile, steady, evolve, fit, run <manifest.json>, sweep <dir>,
report <dir>.  Exit status is 0 iff every assertion of every executed
scenario passed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import experiments, pde, profiles, rates, steady
from .errors import DiffusionLabError


def _parse_datum(spec: str) -> pde.InitialDatum:
    """'algebraic:gamma=2,C0=1' | 'gaussian:sigma=2' | 'table:<csv>'."""
    kind, _, rest = spec.partition(":")
    kv = {}
    if kind != "table" and rest:
        for item in rest.split(","):
            key, _, val = item.partition("=")
            kv[key.strip()] = float(val)
    if kind == "algebraic":
        return pde.InitialDatum.algebraic(kv["gamma"], kv.get("C0", 1.0))
    if kind == "gaussian":
        return pde.InitialDatum.gaussian(kv["sigma"], kv.get("amplitude", 1.0))
    if kind == "table":
        data = np.loadtxt(rest, delimiter=",", skiprows=1)
        return pde.InitialDatum.table(data[:, 0], data[:, 1], description=rest)
    raise DiffusionLabError(f"unknown datum spec '{spec}'")


def cmd_profile(args, out: Path) -> int:
    if args.beta is not None:
        params = profiles.ProfileParams(p=args.p, alpha=args.alpha, beta=args.beta, A=args.A)
    else:
        params = profiles.ProfileParams.self_similar(args.p, args.alpha, args.A)
    prof = profiles.integrate_profile(params, args.xi_max, tol=args.tol, n=args.n)
    csv = out / f"profile_p={args.p:g}_a={args.alpha:g}_A={args.A:g}_n={args.n}.csv"
    profiles.save_profile(prof, csv)
    print(f"profile: {len(prof.xi)} nodes to xi={prof.xi_max:g}, f(0)={prof.f[0]:g}")
    if params.p > 1.0:
        print(f"identity residual: {profiles.check_integral_identity(prof):.3e}")
    if params.is_self_similar and prof.xi_max >= 100.0 * 100.0:
        slope, se = profiles.fit_tail_exponent(prof, (100.0, min(1e4, prof.xi_max)))
        print(f"tail slope: {slope:.6f} +- {se:.2g} (formula -a/b = {-params.tail_exponent:g})")
    print(f"wrote {csv}")
    return 0


def cmd_steady(args, out: Path) -> int:
    unit = steady.shoot_unit_profile(args.p, args.n)
    prof = steady.scale_profile(unit, args.R) if args.R != 1.0 else unit
    csv = out / f"steady_p={args.p:g}_n={args.n}_R={args.R:g}.csv"
    steady.save_steady(prof, csv)
    print(f"steady profile on B_{args.R:g}: center value {prof.center_value:.8g}")
    print(f"ODE residual (unit ball): {steady.steady_residual(unit):.3e}")
    print(f"wrote {csv}")
    return 0


def cmd_evolve(args, out: Path) -> int:
    datum = _parse_datum(args.datum)
    cfg = pde.SolverConfig(
        n_nodes=args.n_nodes,
        stretch=args.stretch,
        dt_rel_max=args.dt_rel,
        inner_radius=args.inner_radius,
    )
    run = pde.evolve(
        datum,
        p=args.p,
        n=args.n,
        R=args.R,
        eps=args.eps,
        t_end=args.t_end,
        norm_qs=tuple(float(q) for q in args.norm_qs.split(",")),
        config=cfg,
        t_start=args.t_start,
    )
    jsonl = out / "run.jsonl"
    pde.run_to_jsonl(run, jsonl)
    print(f"evolved to t={args.t_end:g}: {len(run.samples)} samples -> {jsonl}")
    if args.snapshots:
        files = pde.snapshots_to_csv(run, out / "snapshots")
        print(f"wrote {len(files)} snapshot CSVs")
    return 0


def cmd_fit(args, out: Path) -> int:
    path = Path(args.series)
    times, values = [], []
    for line in path.read_text(encoding="utf-8").splitlines():
        rec = json.loads(line)
        if "t" not in rec:
            continue
        times.append(rec["t"])
        values.append(rec["linf"] if args.norm == "linf" else rec["lq"][args.norm[1:]])
    fit = rates.fit_decay(times, values, (args.window[0], args.window[1]), norm_id=args.norm)
    print(f"slope {fit.slope:.6f} +- {fit.stderr:.2g} over t in [{args.window[0]:g}, {args.window[1]:g}]")
    with path.open("a", encoding="utf-8") as fh:
        fh.write(json.dumps({"fits": {args.norm: {"slope": fit.slope, "stderr": fit.stderr,
                                                  "window": list(fit.window)}}}) + "\n")
    return 0


def cmd_run(args, out: Path, tol_scale: float) -> int:
    manifest = experiments.ExperimentManifest.load(args.manifest)
    record = experiments.run_manifest(manifest, tol_scale)
    for a in record.assertions:
        print(f"[{'PASS' if a.passed else 'FAIL'}] {a.name}: measured {a.measured:.6g} "
              f"vs {a.theory:.6g} (tol {a.tolerance:.3g})")
    if record.error:
        print(f"scenario error: {record.error}", file=sys.stderr)
    print(f"record: {Path(manifest.output_dir) / 'record.json'}")
    return 0 if record.passed else 1


def cmd_sweep(args, out: Path, tol_scale: float, workers: int) -> int:
    paths = sorted(Path(args.directory).glob("*.json"))
    manifests = [experiments.ExperimentManifest.load(p) for p in paths]
    records = experiments.sweep(manifests, parallelism=workers, tol_scale=tol_scale)
    ok = True
    for rec in records:
        status = "PASS" if rec.passed else "FAIL"
        ok &= rec.passed
        print(f"[{status}] {rec.name} ({rec.scenario}): "
              f"{sum(a.passed for a in rec.assertions)}/{len(rec.assertions)} assertions")
    return 0 if ok else 1


def cmd_report(args, out: Path) -> int:
    records = experiments.load_records(args.directory)
    text, files = experiments.report(records, out)
    print(text, end="")
    print(f"report files: {', '.join(str(f) for f in files)}")
    return 0 if all(rec.passed for _, rec in records) else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="difflab", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default=".", help="output directory (default: cwd)")
    ap.add_argument("--workers", type=int, default=1, help="sweep parallelism")
    ap.add_argument("--tol-scale", type=float, default=1.0,
                    help="global multiplier on scenario tolerances")
    sub = ap.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("profile", help="integrate a self-similar profile")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, default=None,
                   help="explicit beta (default: self-similar (1-p*alpha)/2)")
    p.add_argument("--A", type=float, default=1.0)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--xi-max", dest="xi_max", type=float, default=50.0)
    p.add_argument("--tol", type=float, default=1e-10)

    s = sub.add_parser("steady", help="steady Dirichlet profile on a ball")
    s.add_argument("--p", type=float, required=True)
    s.add_argument("--n", type=int, default=1)
    s.add_argument("--R", type=float, default=1.0)

    e = sub.add_parser("evolve", help="evolve the regularized ball problem")
    e.add_argument("--p", type=float, required=True)
    e.add_argument("--n", type=int, default=1)
    e.add_argument("--R", type=float, default=100.0)
    e.add_argument("--eps", type=float, default=1e-5)
    e.add_argument("--t-end", dest="t_end", type=float, required=True)
    e.add_argument("--t-start", dest="t_start", type=float, default=0.0)
    e.add_argument("--datum", required=True,
                   help="algebraic:gamma=2,C0=1 | gaussian:sigma=2 | table:<csv>")
    e.add_argument("--norm-qs", dest="norm_qs", default="1,2")
    e.add_argument("--n-nodes", dest="n_nodes", type=int, default=512)
    e.add_argument("--stretch", type=float, default=1.0)
    e.add_argument("--dt-rel", dest="dt_rel", type=float, default=0.05)
    e.add_argument("--inner-radius", dest="inner_radius", type=float, default=None)
    e.add_argument("--snapshots", action="store_true")

    f = sub.add_parser("fit", help="fit a decay slope from a run's JSON-lines")
    f.add_argument("--series", required=True)
    f.add_argument("--norm", default="linf")
    f.add_argument("--window", type=float, nargs=2, required=True)

    r = sub.add_parser("run", help="run one experiment manifest")
    r.add_argument("manifest")

    w = sub.add_parser("sweep", help="run every manifest in a directory")
    w.add_argument("directory")

    rep = sub.add_parser("report", help="summarize records under a directory")
    rep.add_argument("directory")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        if args.verb == "profile":
            return cmd_profile(args, out)
        if args.verb == "steady":
            return cmd_steady(args, out)
        if args.verb == "evolve":
            return cmd_evolve(args, out)
        if args.verb == "fit":
            return cmd_fit(args, out)
        if args.verb == "run":
            return cmd_run(args, out, args.tol_scale)
        if args.verb == "sweep":
            return cmd_sweep(args, out, args.tol_scale, args.workers)
        if args.verb == "report":
            return cmd_report(args, out)
    except DiffusionLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
