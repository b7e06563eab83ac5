"""Time iteration for locally null controlling a nonlinear system through its
linearization.

The horizon is split into geometric slices. On each slice the linear oracle
produces a control steering the linearized state to zero, and that control is
applied to the nonlinear system. Quadratic-type nonlinear errors then decay
doubly exponentially.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DivergenceError, InvalidConstantsError, OutOfBallError
from .lr_engine import LrConstants, lr_null_control
from .spectral_models import ExpSegment, history_cost, history_duration


@dataclass(frozen=True)
class LttConstants:
    """Linear cost ``C_L exp(c tau^-sigma)`` and nonlinear gap ``C_N (||y|| + ||u||)^gamma``."""

    C_L: float
    c: float
    sigma: float
    C_N: float
    gamma: float

    def __post_init__(self):
        if not self.gamma > 1:
            raise InvalidConstantsError("gamma must exceed 1")
        if self.sigma <= 0 or self.c < 0 or self.C_L < 0 or self.C_N <= 0:
            raise InvalidConstantsError("constants out of range")

    @property
    def rho(self) -> float:
        return self.gamma ** (-1.0 / (self.sigma + 1.0))

    def C_T(self, T: float) -> float:
        # the telescoping bound needs a nonnegative per-slice constant
        head = max(0.0, math.log(self.C_N) + self.gamma * math.log1p(self.C_L))
        return head / (self.gamma - 1) + self.c * T ** (-self.sigma) / (1 - self.rho) ** (self.sigma + 1)

    def M_T(self, T: float) -> float:
        tau0 = T * (1 - self.rho)
        g = self.gamma - 1
        return math.log(2) / g + self.c * (self.rho ** (-self.sigma) - 1) / g * tau0 ** (-self.sigma)


def ltt_schedule(gamma: float, sigma: float, T: float, J_max: int = 40) -> np.ndarray:
    """``tau_j = T (1 - rho) rho^j`` with ``rho = gamma^(-1/(sigma+1))``."""
    if not gamma > 1:
        raise InvalidConstantsError("gamma must exceed 1")
    if sigma <= 0 or T <= 0:
        raise ValueError("sigma and T must be positive")
    rho = gamma ** (-1.0 / (sigma + 1.0))
    return T * (1 - rho) * rho ** np.arange(J_max)


def smallness_threshold(consts: LttConstants, T: float) -> float:
    """Certified admissible radius ``exp(-M_T - C_T)``."""
    return math.exp(-consts.M_T(T) - consts.C_T(T))


@dataclass
class LttResult:
    history: list
    norms: list
    slice_costs: list
    taus: list
    gamma: float
    terminal: float
    certified: bool
    delta: float | None

    @property
    def log_ratios(self) -> list:
        """``ln ||y_j|| / gamma^j`` (``-inf`` once a state is exactly zero)."""
        return [math.log(n) / self.gamma ** j if n > 0 else -math.inf
                for j, n in enumerate(self.norms)]

    @property
    def total_cost(self) -> float:
        return float(sum(self.slice_costs))

    def to_csv(self) -> str:
        lines = ["j,tau_j,norm_y_j,norm_u_j,log_ratio"]
        lr = self.log_ratios
        for j in range(len(self.slice_costs)):
            lines.append(f"{j},{self.taus[j]!r},{self.norms[j]!r},{self.slice_costs[j]!r},{lr[j]!r}")
        return "\n".join(lines) + "\n"


def lr_linear_oracle(model, consts: LrConstants, eps: float = 1e-10, rule: str = "lean") -> Callable:
    """Linear oracle from the low-mode iteration on a heat-type model."""

    def oracle(y, tau):
        return lr_null_control(model, y, min(tau, 1.0), eps, consts, rule=rule).history

    return oracle


def ltt_null_control(nonlinear_system, linear_oracle: Callable, y0, T: float, eps_stop: float,
                     consts: LttConstants | None = None, gamma: float = 2.0, sigma: float = 1.0,
                     J_max: int = 40, override: bool = False, repropagate: bool = True) -> LttResult:
    """Slice-by-slice control of ``nonlinear_system.propagate``.

    Stops once ``||y_j|| <= eps_stop ||y0||``; the remaining horizon is left
    uncontrolled. Without ``consts`` the certificate is not evaluated.
    """
    y0 = np.asarray(y0, dtype=float)
    n0 = float(np.linalg.norm(y0))
    if consts is not None:
        gamma, sigma = consts.gamma, consts.sigma
    delta = smallness_threshold(consts, T) if consts is not None else None
    certified = delta is not None and n0 <= delta
    if delta is not None and not certified and not override:
        raise OutOfBallError(f"||y0|| = {n0:.3g} exceeds the certified radius {delta:.3g}")
    if n0 == 0:
        return LttResult([ExpSegment(T)], [0.0], [], [], gamma, 0.0, certified, delta)
    taus = ltt_schedule(gamma, sigma, T, J_max)
    history, norms, costs, used = [], [n0], [], []
    y = y0.copy()
    misses = 0
    for j, tau in enumerate(taus):
        u = linear_oracle(y, float(tau))
        y1 = nonlinear_system.propagate(y, u)
        n1 = float(np.linalg.norm(y1))
        if not np.isfinite(n1):
            raise DivergenceError(f"slice {j}: non-finite state")
        # expect roughly ||y||^gamma; tolerate one slow slice
        misses = misses + 1 if n1 > norms[-1] ** (gamma - 0.5) else 0
        if misses >= 2:
            raise DivergenceError(f"slice {j}: no superlinear decay ({norms[-1]:.3g} -> {n1:.3g})")
        history.extend(u)
        costs.append(history_cost(u))
        used.append(float(tau))
        norms.append(n1)
        y = y1
        if n1 <= eps_stop * n0:
            break
    rest = T - history_duration(history)
    if rest > 1e-15:
        history.append(ExpSegment(rest))
    if repropagate:
        terminal = float(np.linalg.norm(nonlinear_system.propagate(y0, history)))
    else:
        terminal = float(np.linalg.norm(nonlinear_system.propagate(y, history[-1:]))) \
            if rest > 1e-15 else norms[-1]
    return LttResult(history, norms, costs, used, gamma, terminal, certified, delta)


def calibrate_linear_cost(costs_by_T: dict, sigma: float):
    """``(C_L, c)`` with ``ln cost <= ln C_L + c T^-sigma`` at every probe (LSQ slope, lifted intercept)."""
    Ts = np.array(sorted(costs_by_T), dtype=float)
    lc = np.log(np.array([costs_by_T[t] for t in Ts]))
    x = Ts ** (-sigma)
    c, _ = np.polyfit(x, lc, 1) if len(Ts) > 1 else (0.0, lc[0])
    c = max(float(c), 0.0)
    lnCL = float(np.max(lc - c * x))
    return math.exp(lnCL), c


# ---------------------------------------------------------------------------
# scalar test system


@dataclass(frozen=True)
class ScalarQuadratic:
    """``y' = -y + u + y^2``; controls are a single constant-rate exponential segment."""

    N: int = 1

    def propagate(self, y0, history):
        from scipy.integrate import solve_ivp

        y = np.asarray(y0, dtype=float).copy()
        for seg in history:
            if seg.is_zero:
                f = lambda t, v: -v + v * v
            else:
                f = lambda t, v, s=seg: -v + s.modal_forcing(t) + v * v
            sol = solve_ivp(f, (0.0, seg.duration), y, method="DOP853", rtol=1e-12, atol=1e-300)
            y = sol.y[:, -1]
        return y

    def linear_oracle(self, y, tau):
        """Minimal-norm ``u(t) = A e^t`` with ``A = -2 y0 / (e^{2 tau} - 1)`` nulls ``y' = -y + u``."""
        y = float(np.asarray(y).ravel()[0])
        amp = -2.0 * y / math.expm1(2.0 * tau)
        # rate -1: forcing grows like e^{t}, matching the adjoint of y' = -y
        return [ExpSegment(tau, np.ones((1, 1)), np.array([-1.0]), np.array([amp]), np.ones((1, 1)))]
