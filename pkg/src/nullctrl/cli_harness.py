"""Config-driven scenario runner.

``nullctrl run cfg.toml`` executes every ``[[scenario]]`` table in the file and
writes ``report.json`` plus per-scenario CSV files under ``--out``. Wall times
go to ``timing.json`` so that reports are byte-identical across runs.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import __version__
from .errors import ConfigError, NullCtrlError

SCHEMA_VERSION = 1


# ---------------------------------------------------------------------------
# scenario implementations; each returns (metrics, checks, csv_files)


def _check(checks, name, ok, detail=""):
    checks.append({"name": name, "passed": bool(ok), "detail": detail})


def _fmt(x):
    return float(f"{float(x):.12g}")


def sc_lti_cost(p, seed):
    from . import lti_control as lc

    checks, metrics, files = [], {}, {}
    mode = p.get("mode", "chain")
    if mode == "chain":
        n = int(p.get("n", 2))
        exps = p.get("T_exponents", list(range(1, 9)))
        Ts = [2.0 ** -e for e in exps]
        curve = lc.cost_curve(lc.chain(n), Ts)
        slope, const, r2 = lc.fit_cost_asymptotics(curve)
        K = lc.seidman_exponent(lc.chain(n))
        expected = lc.cost_exponent(K, 2)
        metrics.update(exponent=_fmt(slope), constant=_fmt(const), r2=_fmt(r2),
                       expected_exponent=expected, expected_constant=_fmt(lc.seidman_constant(n)))
        _check(checks, "exponent", abs(slope - expected) <= p.get("exponent_tol", 0.05),
               f"{slope:.4f} vs {expected}")
        if "constant_rtol" in p:
            c0 = lc.seidman_constant(n)
            _check(checks, "constant", abs(const / c0 - 1) <= p["constant_rtol"], f"{const:.4f} vs {c0:.4f}")
        files["cost_curve.csv"] = curve.to_csv()
    elif mode == "moments":
        rows = ["n,T,cost,bound"]
        ok = True
        for n in range(1, int(p.get("n_max", 8)) + 1):
            for T in p.get("T_list", [0.25, 0.5, 1.0, 2.0, 4.0]):
                cost, bound, _ = lc.diag_moment_cost(n, T, extended=True)
                rows.append(f"{n},{T!r},{cost!r},{bound!r}")
                ok &= cost <= bound
        _check(checks, "moment-bound", ok)
        files["moments.csv"] = "\n".join(rows) + "\n"
    else:
        raise ConfigError(f"unknown lti-cost mode {mode!r}")
    return metrics, checks, files


def sc_inequality_suite(p, seed):
    from . import inequalities as iq

    checks, metrics, files = [], {}, {}
    suites = {
        "remez1d": lambda: iq.remez_suite(seed, p.get("remez_trials", 50)),
        "remez2d": lambda: iq.remez2d_suite(seed, p.get("remez2d_trials", 10)),
        "turan": lambda: iq.turan_suite(seed),
        "bernstein": lambda: iq.bernstein_suite(seed),
        "sobolev": lambda: iq.sobolev_suite(seed, p.get("sobolev_trials", 20)),
        "gautschi": lambda: iq.gautschi_suite(seed, p.get("gautschi_trials", 500), p.get("gautschi_nmax", 8)),
    }
    all_rows = []
    for name in p.get("suites", list(suites)):
        if name not in suites:
            raise ConfigError(f"unknown suite {name!r}; available: {', '.join(suites)}")
        rows = suites[name]()
        all_rows.extend(rows)
        bad = [r for r in rows if not r.ok]
        _check(checks, name, not bad, f"{len(rows)} rows, {len(bad)} violations")
    files["margins.csv"] = iq.rows_to_csv(all_rows, seed)
    if p.get("ls_scan", True):
        ts = iq.ThickSet1D(float(p.get("ls_a", 1.0)))
        Ns = p.get("ls_N", [1, 2, 4, 8])
        scan = iq.ls_ratio_scan(Ns, ts, trials=p.get("ls_trials", 50), seed=seed)
        s, c, r2 = iq.log_affine_fit([N * ts.a for N, _ in scan], [w for _, w in scan])
        metrics.update(ls_slope=_fmt(s), ls_r2=_fmt(r2))
        _check(checks, "ls-log-affine", r2 >= 0.9, f"r2={r2:.4f}")
        files["ls_scan.csv"] = "N,worst_ratio\n" + "".join(f"{N!r},{w!r}\n" for N, w in scan)
    return metrics, checks, files


def sc_kolmogorov(p, seed):
    from . import spectral_models as sm

    checks, metrics, files = [], {}, {}
    n = int(p.get("grid", 64))
    xi, zeta = sm.frequency_grid(n)
    worst_ratio, worst_diff = 0.0, 0.0
    rows = ["t,max_ratio_to_bound,max_ode_diff"]
    for t in p.get("t_list", [0.1, 1.0, 2.0]):
        mult = sm.kolmogorov_multiplier(t, xi, zeta)
        bound = np.exp(-sm.KOLMOGOROV_C0 * (t * zeta ** 2 + t ** 3 * xi ** 2))
        ratio = float(np.max(mult / bound))
        ode = sm.kolmogorov_ode_multiplier(t, xi, zeta).reshape(xi.shape)
        diff = float(np.max(np.abs(ode - mult)))
        rows.append(f"{t!r},{ratio!r},{diff!r}")
        worst_ratio, worst_diff = max(worst_ratio, ratio), max(worst_diff, diff)
    metrics.update(max_ratio=_fmt(worst_ratio), max_ode_diff=_fmt(worst_diff))
    _check(checks, "dissipation-bound", worst_ratio <= 1 + 1e-12, f"{worst_ratio:.15f}")
    _check(checks, "ode-oracle", worst_diff <= 1e-8, f"{worst_diff:.3g}")
    files["kolmogorov.csv"] = "\n".join(rows) + "\n"
    return metrics, checks, files


def _unit_vector(rng, n):
    v = rng.standard_normal(n)
    return v / np.linalg.norm(v)


def sc_lr_interior(p, seed):
    from . import lr_engine as lr
    from . import spectral_models as sm

    checks, metrics, files = [], {}, {}
    model = sm.HeatInteriorModel(int(p.get("N", 64)), tuple(map(tuple, p.get("omega", [[0.5, 1.0]]))))
    consts = lr.calibrate_heat_interior(model)
    rng = np.random.default_rng(seed)
    y0 = _unit_vector(rng, model.N)
    eps = float(p.get("eps_stop", 1e-6))
    T = float(p.get("T", 1.0))
    res = lr.lr_null_control(model, y0, T, eps, consts, check_contraction=False)
    yT = sm.ode_propagate(model.eigs, y0, res.history)
    term = float(np.linalg.norm(yT))
    mono = all(b <= a for a, b in zip(res.norms, res.norms[1:]))
    metrics.update(terminal=_fmt(term), steps=res.steps, total_cost=_fmt(res.total_cost),
                   c1=_fmt(consts.c1), C1=_fmt(consts.C1))
    _check(checks, "terminal", term <= eps, f"{term:.3g}")
    _check(checks, "monotone", mono)
    files["lr_steps.csv"] = res.to_csv()
    Ts = p.get("fit_T", [1.0, 0.5, 0.25, 0.125])
    if Ts:
        costs = {}
        for t in Ts:
            costs[float(t)] = lr.lr_null_control(model, y0, t, eps, consts).total_cost
        sig, c0, r2 = lr.lr_cost_fit(costs, min_points=4)
        metrics.update(sigma_hat=_fmt(sig), c0_hat=_fmt(c0), fit_r2=_fmt(r2))
        _check(checks, "sigma", abs(sig - 1.0) <= p.get("sigma_tol", 0.25), f"{sig:.4f}")
        _check(checks, "slope-positive", 0 < c0 < math.inf, f"{c0:.4g}")
        files["lr_costs.csv"] = "T,total_cost\n" + "".join(f"{t!r},{c!r}\n" for t, c in sorted(costs.items()))
    return metrics, checks, files


def sc_lr_boundary(p, seed):
    from . import lr_engine as lr
    from . import spectral_models as sm

    checks, metrics, files = [], {}, {}
    model = sm.HeatBoundaryModel(int(p.get("N", 6)))
    consts = lr.boundary_constants()
    y0 = np.zeros(model.N)
    y0[:2] = 1.0
    if p.get("random", False):
        y0 = _unit_vector(np.random.default_rng(seed), model.N)
    eps = float(p.get("eps_stop", 1e-6))
    res = lr.lr_null_control(model, y0, float(p.get("T", 1.0)), eps, consts)
    term = float(np.linalg.norm(sm.ode_propagate(model.eigs, y0, res.history))) / np.linalg.norm(y0)
    metrics.update(terminal=_fmt(term), steps=res.steps, ks=list(res.ks))
    _check(checks, "terminal", term <= eps, f"{term:.3g}")
    files["lr_steps.csv"] = res.to_csv()
    return metrics, checks, files


def sc_ltt_burgers(p, seed):
    from . import lr_engine as lr
    from . import ltt_engine as lt
    from . import spectral_models as sm
    from .spectral_models import history_cost

    checks, metrics, files = [], {}, {}
    model = sm.BurgersModel(int(p.get("N", 64)), tuple(map(tuple, p.get("omega", [[0.5, 1.0]]))))
    consts = lr.calibrate_heat_interior(model.heat)
    oracle = lt.lr_linear_oracle(model.heat, consts, rule=p.get("rule", "lean"))
    rng = np.random.default_rng(seed)
    y0 = rng.standard_normal(model.N) / np.arange(1, model.N + 1)
    y0 *= float(p.get("y0_norm", 1e-3)) / np.linalg.norm(y0)
    eps = float(p.get("eps_stop", 1e-8))
    T = float(p.get("T", 1.0))
    lconsts = None
    if p.get("certify", False):
        probe = _unit_vector(rng, model.N)
        costs = {t: history_cost(oracle(probe, t)) for t in p.get("certify_T", [1.0, 0.5, 0.25, 0.125])}
        C_L, c = lt.calibrate_linear_cost(costs, 1.0)
        C_N = sm.calibrate_gap_constant(model, p.get("gap_samples", 32), seed=seed)
        lconsts = lt.LttConstants(C_L, c, 1.0, C_N, 2.0)
        metrics.update(C_L=_fmt(C_L), c_lin=_fmt(c), C_N=_fmt(C_N))
    res = lt.ltt_null_control(model, oracle, y0, T, eps, consts=lconsts, override=True)
    if res.delta is not None:
        metrics.update(certified_radius=_fmt(res.delta),
                       certificate="inside" if res.certified else "outside certificate")
    lrat = res.log_ratios
    tail = [x for x in lrat[1:]]
    mono = all(b <= a for a, b in zip(tail, tail[1:]))
    metrics.update(terminal=_fmt(res.terminal), slices=len(res.slice_costs),
                   log_ratios=[_fmt(x) for x in lrat], monotone_points=len(tail))
    _check(checks, "terminal", res.terminal <= p.get("terminal_tol", 1e-8), f"{res.terminal:.3g}")
    _check(checks, "log-ratio-nonincreasing", mono and len(tail) >= 2, str([round(x, 3) for x in lrat]))
    files["ltt_slices.csv"] = res.to_csv()
    eps_list = p.get("gap_eps", [1e-1, 1e-2, 1e-3])
    if eps_list:
        Tg = float(p.get("gap_T", 0.05))
        base = _unit_vector(rng, model.N) / np.arange(1, model.N + 1)
        seg = sm.heat_low_mode_control(model.heat, base, 3, Tg)
        seg = seg.scaled(1.0 / seg.cost())
        ratios = []
        for e in eps_list:
            g, _ = sm.quadratic_gap(model, e * base, [seg.scaled(e)], Tg)
            ratios.append(g / e ** 2)
        spread = max(ratios) / min(ratios)
        metrics.update(gap_ratios=[_fmt(r) for r in ratios])
        _check(checks, "gap-scaling", spread <= 3.0, f"spread {spread:.4f}")
    return metrics, checks, files


def sc_tangent(p, seed):
    from . import ode_core as oc
    from . import tangent_method as tm

    checks, metrics, files = [], {}, {}
    mode = p.get("mode", "orders")
    if mode == "orders":
        J = oc.jakubczyk()
        e2 = tm.estimate_order(J, tm.make_variation("jakubczyk-e2"), substeps=p.get("substeps", 512))
        e3 = tm.estimate_order(J, tm.make_variation("jakubczyk-e3"), substeps=p.get("substeps", 512))
        c2, c3 = float(e2.xi_hat[1]), float(e3.xi_hat[2])
        metrics.update(e2_order=e2.k_hat, e2_coeff=_fmt(c2), e3_order=e3.k_hat, e3_coeff=_fmt(c3))
        _check(checks, "e2", e2.k_hat == 2 and abs(c2 * 3 - 1) <= 0.02, f"k={e2.k_hat} c={c2:.6g}")
        _check(checks, "e3", e3.k_hat == 4 and abs(c3 / tm.E3_COEFF - 1) <= 0.05, f"k={e3.k_hat} c={c3:.6g}")
        files["order_e2.csv"] = e2.to_csv()
        files["order_e3.csv"] = e3.to_csv()
    elif mode == "lift":
        Ji = oc.jakubczyk_int()
        fam = tm.lift_direction(Ji, tm.make_variation("jakubczyk-e3", 1, dim=4),
                                tm.make_variation("jakubczyk-e3", -1, dim=4))
        grid = np.geomspace(p.get("T_max", 0.25), p.get("T_min", 0.06), 8)
        est = tm.estimate_order(Ji, fam, grid, substeps=p.get("substeps", 1024))
        e4 = np.zeros(4)
        e4[3] = tm.E3_COEFF
        err = float(np.linalg.norm(est.xi_hat - e4) / np.linalg.norm(e4))
        metrics.update(order=est.k_hat, direction_error=_fmt(err))
        _check(checks, "order-9", est.k_hat == 9, f"k_fit={est.k_fit:.3f}")
        _check(checks, "direction-e4", err <= 0.1, f"rel err {err:.3g}")
        files["order_lift.csv"] = est.to_csv()
    elif mode == "drive":
        J = oc.jakubczyk()
        basis = tm.jakubczyk_basis()
        cal = tm.calibrate_move(J, basis, samples=p.get("cal_samples", 10), seed=seed)
        files["calibration.csv"] = cal.to_csv()
        rng = np.random.default_rng(seed)
        mag = float(p.get("y0_norm", 1e-3))
        tol = float(p.get("tol", 1e-9))
        k = basis.order
        ok = 0
        first_err = ""
        worst = 0.0
        for _ in range(int(p.get("trials", 50))):
            y0 = _unit_vector(rng, 3) * mag
            try:
                r = tm.stlnc_drive(J, basis, y0, tol)
            except NullCtrlError as exc:
                first_err = first_err or f"{type(exc).__name__}: {exc}"
                continue
            good = (r.terminal <= tol and r.total_time <= 2 * cal.C * mag ** (1 / k)
                    and max(r.contractions or [0]) <= 2.0 ** -k)
            ok += good
        metrics.update(successes=ok, C_cal=_fmt(cal.C), r_q=cal.r_q, basis_radius=_fmt(basis.r),
                       worst_contraction=[_fmt(w) for w in cal.worst_ratio])
        _check(checks, "drive", ok == int(p.get("trials", 50)), first_err or f"{ok} successes")
    else:
        raise ConfigError(f"unknown tangent mode {mode!r}")
    return metrics, checks, files


def sc_properties(p, seed):
    from . import lti_control as lc
    from . import ode_core as oc
    from . import spectral_models as sm

    rng = np.random.default_rng(seed)
    checks, metrics = [], {}
    trials = int(p.get("trials", 20))
    sysm = oc.random_quadratic_system(rng, 3, valid_radius=10.0, scale=0.5)
    comp = gron = lip = tay = True
    for _ in range(trials):
        y0 = 0.1 * rng.standard_normal(3)
        u = oc.ControlSignal.polynomial(0.3, 0.5 * rng.standard_normal(3))
        v = oc.ControlSignal.polynomial(0.2, 0.5 * rng.standard_normal(2))
        whole = oc.flow(sysm, y0, oc.concat(u, v, 0.3), substeps=256)
        split = oc.flow(sysm, oc.flow(sysm, y0, u, substeps=256), v, substeps=256)
        comp &= np.linalg.norm(whole - split) <= 1e-10
        gron &= np.linalg.norm(oc.flow(sysm, y0, u)) <= oc.gronwall_bound(sysm, y0, u, 0.3) * (1 + 1e-9)
        z0 = y0 + 1e-3 * rng.standard_normal(3)
        w = oc.ControlSignal.polynomial(0.3, 0.5 * rng.standard_normal(3))
        d = np.linalg.norm(oc.flow(sysm, y0, u) - oc.flow(sysm, z0, w))
        lip &= d <= oc.lipschitz_bound(sysm, y0, z0, u, w, 0.3) * (1 + 1e-9)
        res, bound = oc.taylor_residual(sysm, u.scaled(0.1))
        tay &= res <= bound * (1 + 1e-9)
    _check(checks, "composition", comp)
    _check(checks, "gronwall", gron)
    _check(checks, "lipschitz", lip)
    _check(checks, "taylor", tay)
    # Kalman rank is invariant under similarity
    kal = gram = True
    for _ in range(trials):
        n = int(rng.integers(2, 5))
        A = rng.standard_normal((n, n))
        B = rng.standard_normal((n, 1))
        S = rng.standard_normal((n, n)) + n * np.eye(n)
        s1, s2 = lc.LtiSystem(A, B), lc.LtiSystem(np.linalg.solve(S, A @ S), np.linalg.solve(S, B))
        kal &= lc.kalman_rank(s1) == lc.kalman_rank(s2)
    for n in (2, 3):
        y0 = rng.standard_normal(n)
        u, cost = lc.min_norm_null_control(lc.chain(n), y0, 0.5)
        gram &= np.linalg.norm(lc.lti_propagate(lc.chain(n), y0, u)) <= 1e-8 * np.linalg.norm(y0)
    _check(checks, "kalman-similarity", kal)
    _check(checks, "gramian-repropagation", gram)
    # control budgets
    from . import tangent_method as tm

    budget = True
    for kind in ("constant", "jakubczyk-e2", "jakubczyk-e3"):
        fam = tm.make_variation(kind)
        for T in (0.5, 0.1, 0.01):
            budget &= fam(T).norm_l1() <= T * (1 + 1e-12)
    basis = tm.jakubczyk_basis()
    for _ in range(trials):
        z = rng.standard_normal(3)
        z *= basis.r * rng.uniform(0, 1) / np.linalg.norm(z)
        Tz, u, _ = tm.single_move(oc.jakubczyk(), basis, z, substeps=16, check=False)
        budget &= u.norm_l1() <= Tz * (1 + 1e-9) + 1e-15
    _check(checks, "l1-budget", budget)
    hm = sm.HeatInteriorModel(16)
    y0 = rng.standard_normal(16)
    seg = sm.heat_low_mode_control(hm, y0, 3, 0.1)
    a = sm.heat_propagate(hm, y0, [seg, sm.ExpSegment(0.1)])
    b = sm.heat_propagate(hm, sm.heat_propagate(hm, y0, [seg]), [sm.ExpSegment(0.1)])
    _check(checks, "heat-composition", np.linalg.norm(a - b) <= 1e-10 * np.linalg.norm(y0))
    return metrics, checks, {}


SCENARIOS = {
    "lti-cost": (sc_lti_cost, "Cost of null control for finite-dimensional systems (chain fits, moment bound)"),
    "inequality-suite": (sc_inequality_suite, "Seeded Remez, Turan, Bernstein, Sobolev, Gautschi checks and thick-set scan"),
    "kolmogorov-decay": (sc_kolmogorov, "Fourier multiplier dissipation bound and ODE cross-check"),
    "lr-heat-interior": (sc_lr_interior, "Time-frequency iteration for interior-controlled heat"),
    "lr-heat-boundary": (sc_lr_boundary, "Time-frequency iteration with the boundary moment oracle"),
    "ltt-burgers": (sc_ltt_burgers, "Nonlinear slice iteration for viscous Burgers"),
    "tangent-jakubczyk": (sc_tangent, "Control variations: orders, lifting and the local drive"),
    "properties": (sc_properties, "A-priori bounds, composition, similarity and budget invariants"),
}


def list_scenarios():
    return [(k, SCENARIOS[k][1]) for k in sorted(SCENARIOS)]


# ---------------------------------------------------------------------------
# config and report


RANDOMIZED = {"inequality-suite", "lr-heat-interior", "ltt-burgers", "tangent-jakubczyk", "properties"}


@dataclass
class ScenarioConfig:
    kind: str
    name: str
    seed: int = 0
    params: dict = field(default_factory=dict)

    @classmethod
    def from_table(cls, i: int, table: dict) -> "ScenarioConfig":
        kind = table.get("kind")
        if kind not in SCENARIOS:
            cat = "\n".join(f"  {k}: {d}" for k, d in list_scenarios())
            raise ConfigError(f"scenario {i}: unknown kind {kind!r}; available:\n{cat}")
        if kind in RANDOMIZED and "seed" not in table:
            raise ConfigError(f"scenario {i} ({kind}): seed is mandatory for randomized kinds")
        params = {k: v for k, v in table.items() if k not in ("kind", "name", "seed")}
        return cls(kind, str(table.get("name", f"{kind}-{i}")), int(table.get("seed", 0)), params)


def load_config(path) -> list:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    scen = data.get("scenario", [])
    if not isinstance(scen, list):
        raise ConfigError("'scenario' must be an array of tables")
    out = [ScenarioConfig.from_table(i, s) for i, s in enumerate(scen)]
    names = [c.name for c in out]
    if len(set(names)) != len(names):
        raise ConfigError("duplicate scenario names")
    return out


def run_scenario(cfg: ScenarioConfig, seed_override=None):
    seed = int(seed_override if seed_override is not None else cfg.seed)
    t0 = time.perf_counter()
    try:
        metrics, checks, files = SCENARIOS[cfg.kind][0](dict(cfg.params), seed)
    except ConfigError:
        raise
    except NullCtrlError as exc:
        metrics, files = {}, {}
        checks = [{"name": "no-error", "passed": False, "detail": f"{type(exc).__name__}: {exc}"}]
    wall = time.perf_counter() - t0
    summary = {"name": cfg.name, "kind": cfg.kind, "seed": seed, "metrics": metrics, "checks": checks,
               "passed": all(c["passed"] for c in checks), "files": sorted(files)}
    return summary, files, wall


def _versions():
    import mpmath
    import scipy

    return {"nullctrl": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "mpmath": mpmath.__version__, "python": sys.version.split()[0]}


def _worker(args):
    return run_scenario(*args)


def run_config(scenarios: list, out: Path, seed=None, jobs: int = 1, stream=None):
    out.mkdir(parents=True, exist_ok=True)
    tasks = [(s, seed) for s in scenarios]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_worker, tasks))
    else:
        results = [_worker(t) for t in tasks]
    report = {"schema_version": SCHEMA_VERSION, "versions": _versions(), "scenarios": []}
    timing = {}
    for summary, files, wall in results:
        d = out / summary["name"]
        if files:
            d.mkdir(parents=True, exist_ok=True)
        for fname, text in files.items():
            (d / fname).write_text(text)
        report["scenarios"].append(summary)
        timing[summary["name"]] = wall
        if stream is not None:
            status = "PASS" if summary["passed"] else "FAIL"
            failing = next((c for c in summary["checks"] if not c["passed"]), None)
            extra = f"  first failing: {failing['name']} ({failing['detail']})" if failing else ""
            print(f"[{status}] {summary['name']} ({wall:.1f}s){extra}", file=stream)
    report["passed"] = all(s["passed"] for s in report["scenarios"])
    (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    (out / "timing.json").write_text(json.dumps(timing, indent=2, sort_keys=True) + "\n")
    return report


def packaged_config(name: str = "acceptance.toml") -> Path:
    return Path(str(resources.files("nullctrl") / "configs" / name))


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="nullctrl", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True)
    r = sub.add_parser("run", help="run the scenarios in a TOML config")
    r.add_argument("config")
    c = sub.add_parser("check", help="run the packaged acceptance scenarios")
    for q in (r, c):
        q.add_argument("--seed", type=int, default=None)
        q.add_argument("--out", default=os.environ.get("NULLCTRL_OUT", "nullctrl-out"))
        q.add_argument("--jobs", type=int, default=1)
    sub.add_parser("list", help="list scenario kinds")
    args = ap.parse_args(argv)
    if args.cmd == "list":
        for k, d in list_scenarios():
            print(f"{k:20s} {d}")
        return 0
    cfg_path = args.config if args.cmd == "run" else packaged_config()
    try:
        scenarios = load_config(cfg_path)
        report = run_config(scenarios, Path(args.out), args.seed, args.jobs, stream=sys.stdout)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return 0 if report["passed"] else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
