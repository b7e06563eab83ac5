"""Time-and-frequency iteration for linear systems with low-mode control and
high-mode dissipation.

A "system" is any object with ``N``, ``propagate(y, history, T=None)`` and
``low_mode_control(y, k, tau) -> ExpSegment``; the spectral heat models qualify.
Each step controls the lowest ``k_j`` modes on the first half of ``tau_j`` and
lets the system dissipate on the second half.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import mpmath as mp
import numpy as np
from scipy.optimize import brentq, curve_fit

from .errors import DegenerateFitError, InvalidConstantsError, NonContractionError
from .spectral_models import (ExpSegment, HeatInteriorModel, history_cost, history_duration,
                              linear_propagate)


@dataclass(frozen=True)
class RelaxedExponents:
    """Extra exponents: cost ``exp(c1 k^a + c1p T^-theta)``, dissipation ``exp(-c2 T^m k^b + c2p k^a + c2pp T^-theta)``."""

    c1p: float = 0.0
    theta: float = 1.0
    c2p: float = 0.0
    c2pp: float = 0.0


@dataclass(frozen=True)
class LrConstants:
    """Low-mode cost ``C1 tau^-h exp(c1 k^a)`` and dissipation ``C2 exp(-c2 tau^m k^b)``."""

    C1: float
    c1: float
    a: float
    C2: float
    c2: float
    b: float
    m: float
    cost_time_power: float = 0.0
    relaxed: RelaxedExponents | None = None

    def __post_init__(self):
        for name in ("C1", "c1", "a", "C2", "c2", "b", "m"):
            if not getattr(self, name) > 0:
                raise InvalidConstantsError(f"{name} must be positive")
        if not self.a < self.b:
            raise InvalidConstantsError("need a < b")

    @property
    def sigma(self) -> float:
        s = self.a * self.m / (self.b - self.a)
        if self.relaxed is not None:
            s = max(s, self.relaxed.theta)
        return s

    @property
    def c3(self) -> float:
        return self.c2 * 2.0 ** (-self.m)


@dataclass(frozen=True)
class LrSchedule:
    T: float
    q: float
    r: float
    alpha: float
    beta: float
    taus: np.ndarray
    ks: np.ndarray

    @property
    def J(self) -> int:
        return len(self.taus)

    def margins(self, consts: LrConstants) -> np.ndarray:
        """``gamma_j = c3 tau_j^m k_j^b - c1 k_j^a``."""
        k = self.ks.astype(float)
        return consts.c3 * self.taus ** consts.m * k ** consts.b - consts.c1 * k ** consts.a


def relaxed_rho(consts: LrConstants) -> float:
    """Smallest ``rho`` making the relaxed margin at least ``2 (c1 + c1p 2^-sigma rho^-a)``."""
    rx = consts.relaxed
    a, b, m = consts.a, consts.b, consts.m

    def excess(rho):
        lower = (consts.c2 / 2 ** (b + m) * rho ** (b - a) - (consts.c1 + rx.c2p)
                 - 2 * rx.theta * (rx.c1p + rx.c2pp) * rho ** (-a))
        return lower - 2 * (consts.c1 + rx.c1p * 2 ** (-consts.sigma) * rho ** (-a))

    hi = 1.0
    while excess(hi) < 0:
        hi *= 2
        if hi > 1e12:
            raise InvalidConstantsError("no admissible rho")
    return hi if hi == 1.0 else brentq(excess, hi / 2, hi)


def lr_schedule(consts: LrConstants, T: float, J_max: int = 40, margin: float = 3.0) -> LrSchedule:
    """Schedule with ``q = 2^(1/a)``, ``r = q^((b-a)/m)``, ``tau_j = alpha / r^j``, ``k_j = floor(beta q^j)``."""
    if not 0 < T <= 1:
        raise ValueError("T must be in (0, 1]")
    if J_max < 1:
        raise ValueError("J_max must be >= 1")
    a, b, m = consts.a, consts.b, consts.m
    q = 2.0 ** (1.0 / a)
    r = q ** ((b - a) / m)
    alpha = T * (1.0 - 1.0 / r)
    if consts.relaxed is None:
        beta = (2 ** b * margin * consts.c1 / (consts.c3 * alpha ** m)) ** (1.0 / (b - a))
    else:
        beta = relaxed_rho(consts) * alpha ** (-m / (b - a))
    j = np.arange(J_max)
    with np.errstate(over="ignore"):
        taus = alpha / r ** j
        kf = np.floor(beta * q ** j * (1 + 1e-12))
    # past 2^53 modes the schedule is meaningless (and overflows int64)
    keep = np.isfinite(kf) & (kf < 2.0 ** 53) & (taus > 0)
    n = int(np.argmin(keep)) if not keep.all() else J_max
    if n == 0:
        raise InvalidConstantsError(f"schedule starts at k = {kf[0]:.3g} modes")
    ks = np.maximum(kf[:n], 1).astype(np.int64)
    return LrSchedule(T, q, r, alpha, beta, taus[:n], ks)


def lean_k(consts: LrConstants, tau: float, kmax: int) -> int:
    """Smallest ``k`` whose predicted one-step factor ``C3 e^{c1 k^a - c3 tau^m k^b}`` is at most 1/2."""
    tp = tau / 2
    lnC3 = math.log(consts.C2) + math.log1p(consts.C1 * tp ** (0.5 - consts.cost_time_power))
    for k in range(1, kmax + 1):
        if consts.c3 * tau ** consts.m * k ** consts.b - consts.c1 * k ** consts.a >= lnC3 + math.log(2):
            return k
    return kmax


# ---------------------------------------------------------------------------
# stepping


def lr_contract_step(system, y0, k: int, tau: float):
    """Control the first ``k`` modes on ``[0, tau/2]`` then free decay: ``(segments, y1, y_mid)``."""
    y0 = np.asarray(y0, dtype=float)
    half = tau / 2
    if not np.any(y0):
        return [ExpSegment(half), ExpSegment(half)], np.zeros_like(y0), np.zeros_like(y0)
    seg = system.low_mode_control(y0, int(min(k, system.N)), half)
    y_mid = system.propagate(y0, [seg])
    y1 = system.propagate(y_mid, [ExpSegment(half)])
    return [seg, ExpSegment(half)], y1, y_mid


@dataclass
class LrResult:
    history: list
    norms: list
    step_costs: list
    ks: list
    taus: list
    margins: list
    terminal: float
    T: float

    @property
    def total_cost(self) -> float:
        """Sum of per-step control norms (bounds the norm of the concatenation)."""
        return float(sum(self.step_costs))

    @property
    def l2_cost(self) -> float:
        return history_cost(self.history)

    @property
    def steps(self) -> int:
        return len(self.step_costs)

    def to_csv(self) -> str:
        lines = ["j,tau_j,k_j,norm_y_j,norm_u_j,gamma_j"]
        for j in range(self.steps):
            lines.append(f"{j},{self.taus[j]!r},{self.ks[j]},{self.norms[j]!r},"
                         f"{self.step_costs[j]!r},{self.margins[j]!r}")
        return "\n".join(lines) + "\n"


def lr_null_control(system, y0, T: float, eps_stop: float, consts: LrConstants,
                    J_max: int = 40, rule: str = "ladder", margin: float = 3.0,
                    check_contraction: bool = True) -> LrResult:
    """Run the iteration until ``||y_j|| <= eps_stop ||y0||`` and verify by re-propagation.

    ``rule="ladder"`` uses ``k_j = floor(beta q^j)``; ``rule="lean"`` takes the
    smallest ``k`` with predicted one-step factor 1/2 (same ``tau_j``).
    """
    if eps_stop < 1e-13:
        raise ValueError("eps_stop must be at least 10x the propagation tolerance (1e-14)")
    y0 = np.asarray(y0, dtype=float)
    n0 = float(np.linalg.norm(y0))
    if n0 == 0:
        return LrResult([ExpSegment(T)], [0.0], [], [], [], [], 0.0, T)
    sched = lr_schedule(consts, T, J_max, margin)
    history, norms, costs, ks, taus, gams = [], [n0], [], [], [], []
    y = y0.copy()
    for j in range(sched.J):
        tau = float(sched.taus[j])
        if rule == "ladder":
            k = int(min(sched.ks[j], system.N))
        elif rule == "lean":
            k = lean_k(consts, tau, system.N)
        else:
            raise ValueError("rule must be 'ladder' or 'lean'")
        segs, y1, _ = lr_contract_step(system, y, k, tau)
        history.extend(segs)
        n1 = float(np.linalg.norm(y1))
        costs.append(history_cost(segs))
        ks.append(k)
        taus.append(tau)
        gams.append(consts.c3 * tau ** consts.m * k ** consts.b - consts.c1 * k ** consts.a)
        if check_contraction and n1 > norms[-1]:
            raise NonContractionError(f"step {j}: norm grew from {norms[-1]:.3g} to {n1:.3g}")
        norms.append(n1)
        y = y1
        if n1 <= eps_stop * n0:
            break
    rest = T - history_duration(history)
    if rest > 0:
        history.append(ExpSegment(rest))
    yT = system.propagate(y0, history)
    return LrResult(history, norms, costs, ks, taus, gams, float(np.linalg.norm(yT)), T)


# ---------------------------------------------------------------------------
# calibration and cost fits


def calibrate_heat_interior(model: HeatInteriorModel, kmax: int = 12) -> LrConstants:
    """Fit ``-1/2 ln lambda_min(G_k) <= ln C1 + c1 k`` on ``k = 1..kmax``.

    The smallest eigenvalue is computed in extended precision; ``C1`` is lifted so
    that every probe lies under the fitted line.
    """
    vals = []
    for k in range(1, kmax + 1):
        with mp.workdps(30 + 2 * k):
            G = mp.matrix(sine_mass_matrix_mp(k, model.omega))
            ev = mp.eigsy(G, eigvals_only=True)
            vals.append(-0.5 * float(mp.log(min(ev))))
    ks = np.arange(1, kmax + 1)
    c1, _ = np.polyfit(ks, vals, 1)
    lnC1 = float(np.max(np.array(vals) - c1 * ks))
    return LrConstants(C1=math.exp(lnC1), c1=float(c1), a=1.0, C2=1.0, c2=math.pi ** 2,
                       b=2.0, m=1.0, cost_time_power=0.5)


def sine_mass_matrix_mp(k: int, intervals):
    def ic(m):
        if m == 0:
            return mp.fsum(mp.mpf(b) - mp.mpf(a) for a, b in intervals)
        mm = m * mp.pi
        return mp.fsum((mp.sin(mm * b) - mp.sin(mm * a)) / mm for a, b in intervals)

    return [[ic(i - j) - ic(i + j) for j in range(1, k + 1)] for i in range(1, k + 1)]


def boundary_constants() -> LrConstants:
    """Relaxed constants for the boundary oracle: cost ``2 exp(4k + 4/T)``, dissipation ``exp(-T k^2)``."""
    return LrConstants(C1=2.0, c1=4.0, a=1.0, C2=1.0, c2=1.0, b=2.0, m=1.0,
                       relaxed=RelaxedExponents(c1p=4.0, theta=1.0))


def _log_cost_model(T, A, B, s):
    return A + B * T ** (-s)


def lr_cost_fit(costs_by_T: dict, min_points: int = 4):
    """Fit ``ln cost = A + B T^-s``: ``(sigma_hat, c0_hat, r2)``."""
    Ts = np.array(sorted(costs_by_T), dtype=float)
    if len(Ts) < min_points:
        raise DegenerateFitError(f"need at least {min_points} horizons")
    lc = np.log(np.array([costs_by_T[t] for t in Ts], dtype=float))
    if not np.all(np.isfinite(lc)):
        raise DegenerateFitError("non-finite cost")
    # start from the sigma=1 least-squares line
    X = np.column_stack([np.ones_like(Ts), 1.0 / Ts])
    (A0, B0), *_ = np.linalg.lstsq(X, lc, rcond=None)
    try:
        p, _ = curve_fit(_log_cost_model, Ts, lc, p0=[A0, max(B0, 1e-3), 1.0],
                         bounds=([-np.inf, 0.0, 0.05], [np.inf, np.inf, 5.0]), maxfev=20000)
    except RuntimeError as exc:
        raise DegenerateFitError("cost fit did not converge") from exc
    res = lc - _log_cost_model(Ts, *p)
    ss = float(np.sum((lc - lc.mean()) ** 2))
    r2 = 1.0 - float(res @ res) / ss if ss > 0 else 1.0
    return float(p[2]), float(p[1]), r2


def lr_cost_curve(system, T_list: Sequence[float], y0_sampler: Callable, consts: LrConstants,
                  eps_stop: float = 1e-6, rule: str = "ladder", samples: int = 1):
    """Worst total cost over ``samples`` draws of ``y0_sampler()`` per horizon."""
    out = {}
    for T in T_list:
        worst = 0.0
        for _ in range(samples):
            y0 = y0_sampler()
            res = lr_null_control(system, y0, T, eps_stop, consts, rule=rule)
            worst = max(worst, res.total_cost / np.linalg.norm(y0))
        out[float(T)] = worst
    return out


# ---------------------------------------------------------------------------
# synthetic diagonal system with prescribed constants


@dataclass(frozen=True, eq=False)
class SyntheticDiagonal:
    """Eigenvalues ``c2 j^b``; low modes are cancelled directly with declared cost ``e^{c1 k}``."""

    N: int = 200
    c1: float = 1.0
    c2: float = 1.0
    b: float = 3.0
    eigs: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        j = np.arange(1, self.N + 1, dtype=float)
        object.__setattr__(self, "eigs", self.c2 * j ** self.b)

    def propagate(self, y0, history, T=None):
        return linear_propagate(self.eigs, y0, history, T)

    def low_mode_control(self, y0, k: int, tau: float) -> ExpSegment:
        y0 = np.asarray(y0, dtype=float)
        H = np.zeros((self.N, k))
        H[:k, :k] = np.eye(k)
        amps = -y0[:k] / tau
        return ExpSegment(tau, H, self.eigs[:k].copy(), amps, math.exp(2 * self.c1 * k) * np.eye(k))

    def constants(self) -> LrConstants:
        return LrConstants(C1=1.0, c1=self.c1, a=1.0, C2=1.0, c2=self.c2, b=self.b, m=1.0,
                           cost_time_power=0.5)
