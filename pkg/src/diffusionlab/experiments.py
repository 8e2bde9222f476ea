"""Declarative experiment runner: manifests, scenarios, sweeps, reports.

A manifest is a JSON document

    {"schema": 1, "name": ..., "scenario": ..., "parameters": {...},
     "output_dir": ...}

naming one of the registered scenarios.  Each scenario composes the solver
modules, writes its artifacts (JSON-lines norm series, CSV profiles and
snapshots), and returns a list of assertions; every assertion carries a
self-describing claim string (the formula or property being checked), the
measured and theoretical values, and the tolerance that was applied.
Tolerances live in the manifest (scaled globally by --tol-scale): the
underlying statements are asymptotic with non-constructive constants, so
pass bands at desk scale are experiment policy, not truth.

Determinism: identical manifests produce byte-identical records apart from
the two timestamp fields.
"""

from __future__ import annotations

import hashlib
import json
import math
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import pde, profiles, rates, steady
from .errors import DiffusionLabError, DomainError

SCHEMA_VERSION = 1

SCENARIOS = {}


def scenario(name):
    def deco(fn):
        SCENARIOS[name] = fn
        return fn

    return deco


@dataclass(frozen=True)
class ExperimentManifest:
    name: str
    scenario: str
    parameters: dict
    output_dir: str
    schema: int = SCHEMA_VERSION

    @classmethod
    def from_dict(cls, payload: dict) -> "ExperimentManifest":
        if payload.get("schema", SCHEMA_VERSION) != SCHEMA_VERSION:
            raise DomainError(f"unsupported manifest schema {payload.get('schema')}")
        missing = {"name", "scenario", "output_dir"} - set(payload)
        if missing:
            raise DomainError(f"manifest missing fields: {sorted(missing)}")
        if payload["scenario"] not in SCENARIOS:
            raise DomainError(
                f"unknown scenario '{payload['scenario']}'; known: {sorted(SCENARIOS)}"
            )
        return cls(
            name=payload["name"],
            scenario=payload["scenario"],
            parameters=payload.get("parameters", {}),
            output_dir=payload["output_dir"],
            schema=SCHEMA_VERSION,
        )

    @classmethod
    def load(cls, path) -> "ExperimentManifest":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()


@dataclass
class Assertion:
    name: str
    claim: str
    measured: float
    theory: float
    tolerance: float
    passed: bool


@dataclass
class ResultRecord:
    name: str
    scenario: str
    manifest_hash: str
    started: str
    finished: str
    produced_files: list
    assertions: list
    passed: bool
    error: str | None = None
    plots: list = field(default_factory=list)

    def to_json(self) -> str:
        payload = asdict(self)
        payload["assertions"] = [asdict(a) if isinstance(a, Assertion) else a for a in self.assertions]
        return json.dumps(payload, indent=2, sort_keys=True)


def _check(name, claim, measured, theory, tolerance) -> Assertion:
    return Assertion(
        name=name,
        claim=claim,
        measured=float(measured),
        theory=float(theory),
        tolerance=float(tolerance),
        passed=bool(abs(measured - theory) <= tolerance),
    )


def _check_le(name, claim, measured, bound, slack=0.0) -> Assertion:
    return Assertion(
        name=name,
        claim=claim,
        measured=float(measured),
        theory=float(bound),
        tolerance=float(slack),
        passed=bool(measured <= bound + slack),
    )


# ---------------------------------------------------------------------------
# Scenarios
# ---------------------------------------------------------------------------


@scenario("profile_atlas")
def run_profile_atlas(params: dict, out_dir: Path, tol_scale: float):
    ps = params.get("ps", [1.5, 2.0, 3.0])
    alpha_rels = params.get("alpha_rels", [0.5, 0.25])  # alpha = rel / p
    A_list = params.get("A_list", [0.5, 1.0, 2.0])
    n_list = params.get("n_list", [1, 3])
    xi_max = params.get("xi_max", 50.0)
    tol = params.get("tol", 1e-10)
    identity_tol = params.get("identity_tol", 1e-6) * tol_scale

    assertions, files = [], []
    for p in ps:
        for rel in alpha_rels:
            alpha = rel / p
            for A in A_list:
                for n in n_list:
                    pp = profiles.ProfileParams.self_similar(p, alpha, A)
                    prof = profiles.integrate_profile(pp, xi_max, tol=tol, n=n)
                    res = profiles.check_integral_identity(prof)
                    tag = f"p={p:g}_a={alpha:.4g}_A={A:g}_n={n}"
                    csv = out_dir / f"profile_{tag}.csv"
                    profiles.save_profile(prof, csv)
                    files += [csv.name, csv.with_suffix(".json").name]
                    assertions.append(
                        _check_le(
                            f"identity[{tag}]",
                            "xi^(n-1) f' + (b/(p-1))(n+(p-1)a/b) Int sigma^(n-1) f^(1-p)"
                            " - (b/(p-1)) xi^n f^(1-p) = 0",
                            res,
                            identity_tol,
                        )
                    )
    return assertions, files


@scenario("steady_scaling")
def run_steady_scaling(params: dict, out_dir: Path, tol_scale: float):
    p_list = params.get("p_list", [1.0, 2.0])
    n_list = params.get("n_list", [1, 2, 3])
    R_list = params.get("R_list", [0.5, 2.0, 10.0])
    tol = params.get("tol", 1e-5) * tol_scale
    closed_tol = params.get("closed_form_tol", 1e-8) * tol_scale

    assertions, files = [], []
    for p in p_list:
        for n in n_list:
            unit = steady.shoot_unit_profile(p, n)
            csv = out_dir / f"steady_unit_p={p:g}_n={n}.csv"
            steady.save_steady(unit, csv)
            files += [csv.name, csv.with_suffix(".json").name]
            dev = steady.verify_scaling_law(p, n, R_list)
            assertions.append(
                _check_le(
                    f"scaling[p={p:g},n={n}]",
                    "w_R(x) = R^(2/p) w_1(x/R) vs independent re-shoots",
                    dev,
                    tol,
                )
            )
            if p == 1.0:
                exact = (1.0 - unit.r**2) / (2 * n)
                err = float(np.max(np.abs(unit.w - exact)))
                assertions.append(
                    _check_le(
                        f"closed_form[p=1,n={n}]",
                        "w_R(r) = (R^2 - r^2)/(2n) for p = 1",
                        err,
                        closed_tol,
                    )
                )
    return assertions, files


def _evolve_from_params(params: dict, defaults: dict):
    merged = dict(defaults, **params)
    kind = merged.get("datum", "algebraic")
    if kind == "algebraic":
        datum = pde.InitialDatum.algebraic(merged["gamma"], merged.get("C0", 1.0))
    elif kind == "gaussian":
        datum = pde.InitialDatum.gaussian(merged["sigma"])
    else:
        raise DomainError(f"unknown datum kind '{kind}'")
    cfg = pde.SolverConfig(
        n_nodes=merged.get("n_nodes", 800),
        stretch=merged.get("stretch", 1.0),
        dt_rel_max=merged.get("dt_rel_max", 0.02),
        inner_radius=merged.get("inner_radius"),
    )
    run = pde.evolve(
        datum,
        p=merged["p"],
        n=merged["n"],
        R=merged.get("R", 100.0),
        eps=merged.get("eps", 1e-6),
        t_end=merged.get("t_end", 1e4),
        norm_qs=tuple(merged.get("norm_qs", (1.0, 2.0))),
        config=cfg,
    )
    return run, merged


@scenario("theorem200")
def run_theorem200(params: dict, out_dir: Path, tol_scale: float):
    """Upper decay bounds for data in L^q0: fitted slopes must not fall short
    of the closed-form rates by more than delta (data chosen at the sharp
    edge gamma slightly above n/q0)."""
    defaults = {
        "p": 2.0, "n": 1, "q0": 1.0, "q": 2.0, "gamma_factor": 1.05,
        "R": 200.0, "eps": 1e-7, "t_end": 1e4, "window": [1e2, 1e4],
        "delta": 0.05, "n_nodes": 1000,
    }
    merged = dict(defaults, **params)
    p, n, q0, q = merged["p"], merged["n"], merged["q0"], merged["q"]
    merged["gamma"] = merged["gamma_factor"] * n / q0
    merged["norm_qs"] = (q,)
    run, merged = _evolve_from_params(merged, {})
    jsonl = out_dir / "run.jsonl"
    pde.run_to_jsonl(run, jsonl)

    window = tuple(merged["window"])
    delta = merged["delta"] * tol_scale
    t, vq = run.norm_series(f"l{q:g}")
    fit_q = rates.fit_decay(t, vq, window, norm_id=f"l{q:g}")
    _, vinf = run.norm_series("linf")
    fit_inf = rates.fit_decay(t, vinf, window, norm_id="linf")
    rl = rates.rate_lq(p, n, q0, q)
    nu = rates.rate_nu(p, n, q0)
    assertions = [
        _check_le(
            "lq_upper",
            f"||u(t)||_q <= C t^-(1-q0/q)/(p+2q0/n) (rate {rl:g})",
            fit_q.slope,
            -rl,
            delta,
        ),
        _check_le(
            "linf_upper",
            f"||u(t)||_inf <= C t^(-nu+d), nu = n/(np+2q0) = {nu:g}",
            fit_inf.slope,
            -nu,
            delta,
        ),
    ]
    plots = [
        {"series": jsonl.name, "norm": f"l{q:g}", "rate": rl, "label": "lq_upper"},
        {"series": jsonl.name, "norm": "linf", "rate": nu, "label": "linf_upper"},
    ]
    return assertions, [jsonl.name], plots


@scenario("theorem100")
def run_theorem100(params: dict, out_dir: Path, tol_scale: float):
    """Sharpness: for the same near-critical data the fitted L^q slope cannot
    beat the optimal rate by more than delta."""
    defaults = {
        "p": 2.0, "n": 1, "q0": 1.0, "q": 2.0, "gamma_factor": 1.05,
        "R": 200.0, "eps": 1e-7, "t_end": 1e4, "window": [1e2, 1e4],
        "delta": 0.05, "n_nodes": 1000,
    }
    merged = dict(defaults, **params)
    p, n, q0, q = merged["p"], merged["n"], merged["q0"], merged["q"]
    merged["gamma"] = merged["gamma_factor"] * n / q0
    merged["norm_qs"] = (q,)
    run, merged = _evolve_from_params(merged, {})
    jsonl = out_dir / "run.jsonl"
    pde.run_to_jsonl(run, jsonl)

    window = tuple(merged["window"])
    delta = merged["delta"] * tol_scale
    t, vq = run.norm_series(f"l{q:g}")
    fit_q = rates.fit_decay(t, vq, window, norm_id=f"l{q:g}")
    rl = rates.rate_lq(p, n, q0, q)
    assertions = [
        _check_le(
            "lq_lower",
            f"||u(t)||_q >= c t^(-rate-d) for near-critical data (rate {rl:g})",
            -fit_q.slope,  # decay magnitude must not exceed rate + delta
            rl,
            delta,
        )
    ]
    plots = [{"series": jsonl.name, "norm": f"l{q:g}", "rate": rl, "label": "lq_lower"}]
    return assertions, [jsonl.name], plots


def _theorem2000_run(params: dict):
    defaults = {
        "p": 2.0, "n": 1, "gamma": 2.0, "C0": 1.0, "R": 100.0, "eps": 1e-5,
        "t_end": 1e4, "window": [1e2, 1e4], "delta": 0.05, "n_nodes": 800,
        "norm_qs": (1.0,),
    }
    return _evolve_from_params(params, defaults)


@scenario("theorem2000_upper")
def run_theorem2000_upper(params: dict, out_dir: Path, tol_scale: float):
    """Algebraically decaying data: sup-norm decay at the exact closed-form
    rate, certified from above by an amplitude-matched self-similar solution."""
    run, merged = _theorem2000_run(params)
    p, n, gamma = merged["p"], merged["n"], merged["gamma"]
    jsonl = out_dir / "run.jsonl"
    pde.run_to_jsonl(run, jsonl)

    rate = rates.rate_gamma(p, n, gamma, rates.INF)
    window = tuple(merged["window"])
    delta = merged["delta"] * tol_scale
    t, vinf = run.norm_series("linf")
    fit = rates.fit_decay(t, vinf, window, norm_id="linf")

    alpha = gamma / (p * gamma + 2.0)
    pp1 = profiles.ProfileParams.self_similar(p, alpha, 1.0)
    prof1 = profiles.integrate_profile(pp1, merged["R"] * 1.1, tol=1e-10, n=n)
    lhat = profiles.certify_tail_bounds(prof1, (0.0, merged["R"])).lower_const
    A = 1.05 * merged.get("C1", merged["C0"]) / lhat
    ppA = profiles.ProfileParams.self_similar(p, alpha, A)
    profA = profiles.integrate_profile(ppA, merged["R"] * 1.1, tol=1e-10, n=n)
    sup_margin = pde.supersolution_margin(run, ppA, profA, shift=1.0)

    assertions = [
        _check(
            "linf_rate",
            f"||u(t)||_inf ~ t^-(gamma/(p gamma + 2)) = t^-{rate:g}",
            fit.slope,
            -rate,
            delta,
        ),
        _check_le(
            "supersolution",
            "u(x,t) <= (t+1)^-a f_A((t+1)^-b |x|) once f_A dominates the datum",
            sup_margin,
            0.0,
            1e-3 * tol_scale,
        ),
    ]
    plots = [{"series": jsonl.name, "norm": "linf", "rate": rate, "label": "linf_rate"}]
    return assertions, [jsonl.name], plots


@scenario("theorem2000_lower")
def run_theorem2000_lower(params: dict, out_dir: Path, tol_scale: float):
    """Algebraic lower bounds: the run dominates the separated subsolution
    y(tau) w_R(tau) on the growing balls, and decays no faster than the rate."""
    run, merged = _theorem2000_run(params)
    p, n, gamma, C0 = merged["p"], merged["n"], merged["gamma"], merged["C0"]
    jsonl = out_dir / "run.jsonl"
    pde.run_to_jsonl(run, jsonl)

    rate = rates.rate_gamma(p, n, gamma, rates.INF)
    window = tuple(merged["window"])
    delta = merged["delta"] * tol_scale
    t, vinf = run.norm_series("linf")
    fit = rates.fit_decay(t, vinf, window, norm_id="linf")

    unit = steady.shoot_unit_profile(p, n)
    vrun = pde.rescale_to_v(run)
    tau_checks = [tau for tau in vrun.taus if tau > 0.5]
    worst = math.inf
    for tau in tau_checks:
        sub = pde.separated_subsolution(p, n, gamma, C0, tau, unit)
        worst = min(worst, pde.subsolution_margin(vrun, sub, tau))

    assertions = [
        _check_le(
            "linf_no_faster",
            f"||u(t)||_inf >= c t^-{rate:g} (decay magnitude bounded by rate + delta)",
            -fit.slope,
            rate,
            delta,
        ),
        _check_le(
            "subsolution",
            "v(x,tau) >= y(tau) w_R(tau)(x) on B_R(tau), R(tau) = e^(tau/(p gamma+2))",
            -worst,  # min margin must be >= -tol
            0.0,
            1e-3 * tol_scale,
        ),
    ]
    plots = [{"series": jsonl.name, "norm": "linf", "rate": rate, "label": "linf_no_faster"}]
    return assertions, [jsonl.name], plots


@scenario("prop103")
def run_prop103(params: dict, out_dir: Path, tol_scale: float):
    """Fast-decaying data: the rescaled inner-ball minimum (t+1)^(1/p) u grows
    without bound; checked as strict increase across sampled decades."""
    defaults = {
        "p": 2.0, "n": 1, "sigma": 2.0, "R": 40.0, "eps": 1e-9, "t_end": 1e3,
        "t_checks": [10.0, 100.0, 1000.0], "inner_radius": 2.0, "n_nodes": 512,
        "datum": "gaussian", "norm_qs": (1.0,),
    }
    run, merged = _evolve_from_params(params, defaults)
    jsonl = out_dir / "run.jsonl"
    pde.run_to_jsonl(run, jsonl)

    vrun = pde.rescale_to_v(run)
    ts = np.array([s["t"] for s in vrun.samples])
    mins = np.array([s["min_inner"] for s in vrun.samples])
    checks = merged["t_checks"]
    picked = [float(mins[int(np.argmin(np.abs(ts - tv)))]) for tv in checks]
    assertions = []
    for (t_lo, v_lo), (t_hi, v_hi) in zip(zip(checks, picked), zip(checks[1:], picked[1:])):
        assertions.append(
            _check_le(
                f"vmin_increase[{t_lo:g}->{t_hi:g}]",
                "inf over the inner ball of (t+1)^(1/p) u(x,t) diverges",
                v_lo,
                v_hi,
                -1e-12,  # strict increase
            )
        )
    return assertions, [jsonl.name]


@scenario("remark_heat")
def run_remark_heat(params: dict, out_dir: Path, tol_scale: float):
    """Linear-diffusion contrast: polynomial data x^k grow like t^(k/2), with
    exact integer infimum coefficients k!/(k/2)!."""
    k = params.get("k", 4)
    count = params.get("n_random", 100)
    seed = params.get("seed", 0)
    inf_coeff = rates.heat_poly_inf(k, 1)
    expected = math.factorial(k) // math.factorial(k // 2)
    residual_bad = 0
    for x, t in rates.heat_random_rationals(k, count=count, seed=seed):
        if rates.heat_poly_residual(k, x, t) != 0:
            residual_bad += 1
    table = {
        "k": k,
        "inf_coefficient": inf_coeff,
        "H_k(3,1)": float(rates.heat_polynomial(k, 3.0, 1.0)),
    }
    out = out_dir / "heat_table.json"
    out.write_text(json.dumps(table, indent=2) + "\n", encoding="utf-8")
    assertions = [
        _check(
            "inf_coefficient",
            f"inf_x H_k(x,t) = k!/(k/2)! t^(k/2); coefficient for k={k}",
            inf_coeff,
            expected,
            0.0,
        ),
        _check(
            "heat_equation_residual",
            "dH_k/dt - d^2H_k/dx^2 = 0 at random rational points, exactly",
            residual_bad,
            0,
            0.0,
        ),
    ]
    return assertions, [out.name]


@scenario("vartheta_table")
def run_vartheta_table(params: dict, out_dir: Path, tol_scale: float):
    """Growth-exponent table: bounds, monotonicity, and the exact roundtrip
    against the decay-rate formula."""
    n_theta = params.get("n_theta", 20)
    n_m = params.get("n_m", 20)
    thetas = np.linspace(params.get("theta_min", 0.1), params.get("theta_max", 10.0), n_theta)
    ms = np.linspace(params.get("m_min", -40.0), params.get("m_max", -0.05), n_m)
    grid = [[rates.vartheta(th, m) for th in thetas] for m in ms]

    in_bounds = all(
        0.0 < grid[i][j] < 1.0 and grid[i][j] < 1.0 / (1.0 - ms[i])
        for i in range(n_m)
        for j in range(n_theta)
    )
    mono_theta = all(
        grid[i][j] < grid[i][j + 1] for i in range(n_m) for j in range(n_theta - 1)
    )
    mono_m = all(
        grid[i][j] < grid[i + 1][j] for i in range(n_m - 1) for j in range(n_theta)
    )
    worst_roundtrip = max(
        rates.exponent_roundtrip(th, m) for th in thetas for m in ms
    )
    limit_val = rates.vartheta(float(thetas[-1]), -1e12)

    out = out_dir / "vartheta_table.json"
    out.write_text(
        json.dumps(
            {"thetas": thetas.tolist(), "ms": ms.tolist(), "vartheta": grid}, indent=2
        )
        + "\n",
        encoding="utf-8",
    )
    assertions = [
        _check("bounds", "0 < theta/((1-m)theta+2) < min(1, 1/(1-m))", float(in_bounds), 1.0, 0.0),
        _check("monotone_theta", "growth exponent increases in theta", float(mono_theta), 1.0, 0.0),
        _check("monotone_m", "growth exponent increases in m", float(mono_m), 1.0, 0.0),
        _check_le(
            "roundtrip",
            "|m| theta/((1-m)theta+2) = gamma/(p gamma+2) with p=(m-1)/m, gamma=|m|theta",
            worst_roundtrip,
            1e-15 * tol_scale,
        ),
        _check_le("limit_m", "exponent -> 0 as m -> -inf", limit_val, 1e-10),
    ]
    return assertions, [out.name]


# ---------------------------------------------------------------------------
# run / sweep / report
# ---------------------------------------------------------------------------


def run_manifest(manifest: ExperimentManifest, tol_scale: float = 1.0) -> ResultRecord:
    """Execute one scenario; artifacts and the record land in output_dir.
    Failures keep partial outputs next to a `failed` marker."""
    out_dir = Path(manifest.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    started = datetime.now(timezone.utc).isoformat()
    try:
        result = SCENARIOS[manifest.scenario](manifest.parameters, out_dir, tol_scale)
        assertions, files = result[0], result[1]
        plots = result[2] if len(result) > 2 else []
        record = ResultRecord(
            name=manifest.name,
            scenario=manifest.scenario,
            manifest_hash=manifest.digest(),
            started=started,
            finished=datetime.now(timezone.utc).isoformat(),
            produced_files=sorted(files),
            assertions=assertions,
            passed=all(a.passed for a in assertions),
            plots=plots,
        )
    except (DiffusionLabError, ValueError, KeyError) as exc:
        (out_dir / "failed").write_text(traceback.format_exc(), encoding="utf-8")
        record = ResultRecord(
            name=manifest.name,
            scenario=manifest.scenario,
            manifest_hash=manifest.digest(),
            started=started,
            finished=datetime.now(timezone.utc).isoformat(),
            produced_files=[],
            assertions=[],
            passed=False,
            error=f"{type(exc).__name__}: {exc}",
        )
    (out_dir / "record.json").write_text(record.to_json() + "\n", encoding="utf-8")
    return record


def _run_manifest_worker(args):
    payload, tol_scale = args
    return run_manifest(ExperimentManifest.from_dict(payload), tol_scale)


def sweep(manifests, parallelism: int = 1, tol_scale: float = 1.0) -> list:
    """Run manifests concurrently; per-manifest results are deterministic and
    independent of scheduling, and individual failures do not abort the rest."""
    manifests = list(manifests)
    if not manifests:
        raise DomainError("sweep needs at least one manifest")
    if parallelism <= 1 or len(manifests) == 1:
        return [run_manifest(m, tol_scale) for m in manifests]
    jobs = [(asdict(m), tol_scale) for m in manifests]
    with ProcessPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(_run_manifest_worker, jobs))


def load_records(directory) -> list:
    """All record.json files under a directory tree, sorted by name."""
    recs = []
    for path in sorted(Path(directory).rglob("record.json")):
        payload = json.loads(path.read_text(encoding="utf-8"))
        payload["assertions"] = [Assertion(**a) for a in payload["assertions"]]
        payload.setdefault("plots", [])
        recs.append((path.parent, ResultRecord(**payload)))
    return recs


def report(records_with_dirs, out_dir) -> tuple[str, list]:
    """Summary table plus two-column plot-data files for the norm series."""
    if not records_with_dirs:
        raise DomainError("report needs at least one record")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    lines = [
        f"{'record':28s} {'assertion':32s} {'measured':>13s} {'theory':>13s} {'tol':>9s} verdict",
        "-" * 110,
    ]
    files = []
    n_pass = n_fail = 0
    for rec_dir, rec in records_with_dirs:
        if rec.error:
            lines.append(f"{rec.name:28s} {'(scenario error)':32s} {'-':>13s} {'-':>13s} {'-':>9s} FAIL  {rec.error}")
            n_fail += 1
        for a in rec.assertions:
            verdict = "PASS" if a.passed else "FAIL"
            n_pass += a.passed
            n_fail += not a.passed
            lines.append(
                f"{rec.name:28s} {a.name:32s} {a.measured:13.6g} {a.theory:13.6g} "
                f"{a.tolerance:9.3g} {verdict}  [{a.claim}]"
            )
        for plot in rec.plots:
            series = rec_dir / plot["series"]
            if not series.exists():
                continue
            ts, vs = [], []
            for line in series.read_text(encoding="utf-8").splitlines():
                rec_j = json.loads(line)
                if "t" not in rec_j:
                    continue
                ts.append(rec_j["t"])
                v = rec_j["linf"] if plot["norm"] == "linf" else rec_j["lq"][plot["norm"][1:]]
                vs.append(v)
            ts = np.array(ts)
            vs = np.array(vs)
            pos = ts > 0.0
            anchor_i = int(np.argmax(pos))
            overlay = np.full_like(vs, np.nan)
            overlay[pos] = vs[anchor_i] * (ts[pos] / ts[anchor_i]) ** (-plot["rate"])
            fname = out_dir / f"{rec.name}_{plot['label']}_{plot['norm']}.csv"
            with fname.open("w", encoding="utf-8") as fh:
                fh.write(f"t,{plot['norm']},overlay_rate_{plot['rate']:g}\n")
                for t, v, o in zip(ts, vs, overlay):
                    fh.write(f"{t:.12g},{v:.12g},{o:.12g}\n")
            files.append(fname)

    lines.append("-" * 110)
    lines.append(f"{n_pass} passed, {n_fail} failed")
    text = "\n".join(lines) + "\n"
    (out_dir / "summary.txt").write_text(text, encoding="utf-8")
    files.append(out_dir / "summary.txt")
    return text, files
