"""Linear time-invariant controllability and null-control costs.

Covers the Kalman rank test, Gramian-based minimal-norm null controls, the
small-time cost exponent, and the moment/Gram machinery of the diagonal
system ``y_j' = -j^2 y_j + j u``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath as mp
import numpy as np
from numpy.polynomial import chebyshev as C
from scipy.linalg import expm, solve_triangular

from .errors import (DegenerateFitError, NotControllableError, PrecisionLossError,
                     SingularGramianError)
from .ode_core import ControlSignal, Segment


@dataclass(frozen=True, eq=False)
class LtiSystem:
    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.asarray(self.B, dtype=float)
        if B.ndim == 1:
            B = B.reshape(-1, 1)
        if A.shape[0] != A.shape[1] or B.shape[0] != A.shape[0]:
            raise ValueError("inconsistent (A, B) dimensions")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(B))):
            raise ValueError("nonfinite system matrices")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]


def chain(n: int) -> LtiSystem:
    """Integrator chain: subdiagonal shift and ``B = e1``."""
    A = np.diag(np.ones(n - 1), -1) if n > 1 else np.zeros((1, 1))
    B = np.zeros((n, 1))
    B[0, 0] = 1.0
    return LtiSystem(A, B)


def diagonal(n: int) -> LtiSystem:
    """``A = diag(-j^2)``, ``B = (1, ..., n)``."""
    j = np.arange(1, n + 1, dtype=float)
    return LtiSystem(np.diag(-j * j), j.reshape(-1, 1))


# ---------------------------------------------------------------------------
# rank


RANK_SAFETY = 100.0


def controllability_matrix(sys: LtiSystem, K: int | None = None) -> np.ndarray:
    K = sys.n - 1 if K is None else K
    blocks = [sys.B]
    for _ in range(K):
        blocks.append(sys.A @ blocks[-1])
    return np.hstack(blocks)


def _rank(M: np.ndarray, n: int) -> int:
    s = np.linalg.svd(M, compute_uv=False)
    if len(s) == 0 or s[0] == 0:
        return 0
    # headroom over n*smax*eps: a similarity transform alone costs ~10 eps cond(P)
    tol = RANK_SAFETY * n * s[0] * np.finfo(float).eps
    return int(np.sum(s > tol))


def kalman_rank(sys: LtiSystem) -> int:
    return _rank(controllability_matrix(sys), sys.n)


def rank_profile(sys: LtiSystem, kmax: int | None = None) -> list[int]:
    """Ranks of ``[B, ..., A^k B]`` for ``k = 0..kmax``."""
    kmax = sys.n if kmax is None else kmax
    return [_rank(controllability_matrix(sys, k), sys.n) for k in range(kmax + 1)]


def seidman_exponent(sys: LtiSystem) -> int:
    """Smallest ``K`` with ``rank [B, ..., A^K B] = n``."""
    for K, r in enumerate(rank_profile(sys, sys.n - 1)):
        if r == sys.n:
            return K
    raise NotControllableError("Kalman rank condition fails")


def seidman_constant(n: int) -> float:
    """Closed-form cost constant of the length-``n`` chain for ``p = 2``."""
    return math.sqrt(2 * n - 1) * math.factorial(2 * n - 2) / math.factorial(n - 1)


def cost_exponent(K: int, p=2) -> float:
    inv_p = 0.0 if p in (np.inf, "inf") else 1.0 / p
    return -K - 1 + inv_p


# ---------------------------------------------------------------------------
# Gramian and minimal-norm controls


def _gl_gramian(sys: LtiSystem, T: float, pieces: int, nodes: int = 64) -> np.ndarray:
    x, w = np.polynomial.legendre.leggauss(nodes)
    h = T / pieces
    W = np.zeros((sys.n, sys.n))
    for p in range(pieces):
        for xi, wi in zip(x, w):
            s = p * h + 0.5 * h * (xi + 1.0)
            EB = expm(s * sys.A) @ sys.B
            W += 0.5 * h * wi * (EB @ EB.T)
    return W


def gramian(sys: LtiSystem, T: float, nodes: int = 64, rtol: float = 1e-10,
            max_pieces: int = 64) -> np.ndarray:
    """``W_T = int_0^T e^{sA} B B^T e^{sA^T} ds`` by composite Gauss-Legendre.

    The number of panels doubles until the relative change drops below ``rtol``.
    """
    if T <= 0:
        raise ValueError("T must be positive")
    pieces = 1
    W = _gl_gramian(sys, T, pieces, nodes)
    while pieces < max_pieces:
        pieces *= 2
        W2 = _gl_gramian(sys, T, pieces, nodes)
        change = np.linalg.norm(W2 - W) / max(np.linalg.norm(W2), 1e-300)
        W = W2
        if change < rtol:
            break
    return 0.5 * (W + W.T)


def _check_gramian(W: np.ndarray) -> np.ndarray:
    c = np.linalg.cond(W)
    if not np.isfinite(c) or c > 1e14:
        raise SingularGramianError(f"Gramian condition number {c:.3g} exceeds 1e14")
    return np.linalg.cholesky(W)


def min_norm_eta(sys: LtiSystem, y0, T: float, W: np.ndarray | None = None) -> np.ndarray:
    W = gramian(sys, T) if W is None else W
    L = _check_gramian(W)
    rhs = -expm(T * sys.A) @ np.asarray(y0, dtype=float)
    z = solve_triangular(L, rhs, lower=True)
    return solve_triangular(L.T, z, lower=False)


def _fit_pieces(func, T: float, m: int, degree: int = 5, tol: float = 1e-13,
                max_pieces: int = 4096) -> ControlSignal:
    """Piecewise Chebyshev interpolation of ``func: t -> R^m`` on ``[0, T]``."""
    pieces = 1
    nodes = 0.5 * (1.0 - np.cos(np.pi * (np.arange(degree + 1) + 0.5) / (degree + 1)))
    check = np.linspace(0.0, 1.0, 17)
    while True:
        h = T / pieces
        segs = []
        err = 0.0
        scale = 0.0
        for p in range(pieces):
            vals = func(p * h + h * nodes)  # (k, m)
            coeffs = np.array([np.polynomial.polynomial.polyfit(nodes, vals[:, c], degree)
                               for c in range(m)])
            seg = Segment(h, coeffs)
            ref = func(p * h + h * check)
            err = max(err, float(np.max(np.abs(seg.value(check) - ref))))
            scale = max(scale, float(np.max(np.abs(ref))))
            segs.append(seg)
        if err <= tol * max(scale, 1e-300) or pieces >= max_pieces:
            return ControlSignal(tuple(segs), m)
        pieces *= 2


def min_norm_null_control(sys: LtiSystem, y0, T: float, W: np.ndarray | None = None):
    """L2-minimal control steering ``y0`` to 0 at time ``T``: ``(u, cost)``.

    ``u(t) = B^T e^{(T-t)A^T} eta`` with ``W_T eta = -e^{TA} y0``. The exponential
    control is stored as a piecewise quintic interpolant.
    """
    y0 = np.asarray(y0, dtype=float)
    if not np.any(y0):
        return ControlSignal.zero(T, sys.m), 0.0
    W = gramian(sys, T) if W is None else W
    eta = min_norm_eta(sys, y0, T, W)
    cost = math.sqrt(max(float(eta @ W @ eta), 0.0))
    At = sys.A.T

    def func(ts):
        return np.array([sys.B.T @ (expm((T - t) * At) @ eta) for t in ts])

    degree = 1 if np.allclose(sys.A @ sys.A, 0) else 5
    u = _fit_pieces(func, T, sys.m, degree=degree)
    return u, cost


def lti_propagate(sys: LtiSystem, y0, u: ControlSignal) -> np.ndarray:
    """Exact propagation of ``y' = Ay + Bu`` under a piecewise polynomial ``u``.

    Each segment is one matrix exponential of the system augmented with the
    monomials ``1, s, ..., s^D`` of the local time.
    """
    y = np.asarray(y0, dtype=float).copy()
    n = sys.n
    for seg in u.segments:
        D = seg.coeffs.shape[1] - 1
        d = seg.duration
        k = D + 1
        Mx = np.zeros((n + k, n + k))
        Mx[:n, :n] = sys.A * d
        Mx[:n, n:] = (sys.B @ seg.coeffs) * d
        for p in range(1, k):
            Mx[n + p, n + p - 1] = p  # d/ds s^p = p s^{p-1}
        z0 = np.zeros(n + k)
        z0[:n] = y
        z0[n] = 1.0
        y = (expm(Mx) @ z0)[:n]
    return y


def h_weights(n: int) -> np.ndarray:
    return 1.0 / np.arange(1, n + 1, dtype=float)


def null_cost(sys: LtiSystem, T: float, state_norm: str = "euclid",
              W: np.ndarray | None = None) -> float:
    """Worst-case minimal L2 cost over unit initial states.

    ``state_norm`` is ``"euclid"`` or ``"h"`` (weights ``1/j^2`` on ``y_j^2``).
    """
    W = gramian(sys, T) if W is None else W
    L = _check_gramian(W)
    E = expm(T * sys.A)
    if state_norm == "h":
        E = E @ np.diag(np.arange(1, sys.n + 1, dtype=float))
    elif state_norm != "euclid":
        raise ValueError(f"unknown state norm {state_norm!r}")
    X = solve_triangular(L, E, lower=True)
    return float(np.linalg.norm(X, 2))


def _panel_responses(sys: LtiSystem, T: float, pieces: int) -> np.ndarray:
    """Columns ``int_{t_i}^{t_{i+1}} e^{(T-s)A} B ds`` for piecewise constant controls."""
    n, m = sys.n, sys.m
    h = T / pieces
    Mx = np.zeros((n + m, n + m))
    Mx[:n, :n] = sys.A * h
    Mx[:n, n:] = sys.B * h
    F = expm(Mx)[:n, n:]  # int_0^h e^{sA} B ds
    E = expm(h * sys.A)
    cols = []
    Ep = np.eye(n)
    for _ in range(pieces):
        cols.append(Ep @ F)
        Ep = Ep @ E
    return np.hstack(cols[::-1])


def convex_null_cost(sys: LtiSystem, y0, T: float, p=1, pieces: int = 128) -> float:
    """Minimal ``L^p`` cost over piecewise-constant controls (``p`` in ``{1, 2, inf}``)."""
    import cvxpy as cp

    y0 = np.asarray(y0, dtype=float)
    G = _panel_responses(sys, T, pieces)  # (n, pieces*m)
    target = -expm(T * sys.A) @ y0
    h = T / pieces
    # scale rows so that the equality constraint is well conditioned
    rs = np.maximum(np.linalg.norm(G, axis=1), 1e-300)
    x = cp.Variable(G.shape[1])
    if p == 1:
        obj = h * cp.norm1(x)
    elif p == 2:
        obj = math.sqrt(h) * cp.norm2(x)
    elif p in (np.inf, "inf"):
        obj = cp.norm_inf(x)
    else:
        raise ValueError("p must be 1, 2 or inf")
    prob = cp.Problem(cp.Minimize(obj), [(G / rs[:, None]) @ x == target / rs])
    prob.solve()
    if prob.status not in ("optimal", "optimal_inaccurate"):
        raise SingularGramianError(f"convex program status {prob.status}")
    return float(prob.value)


def convex_worst_cost(sys: LtiSystem, T: float, p=1, pieces: int = 128, samples: int = 0,
                      seed: int = 0) -> float:
    """Lower estimate of the worst-case ``L^p`` cost: max over ``+-e_i`` and random unit states."""
    rng = np.random.default_rng(seed)
    dirs = [np.eye(sys.n)[i] * s for i in range(sys.n) for s in (1.0, -1.0)]
    for _ in range(samples):
        v = rng.standard_normal(sys.n)
        dirs.append(v / np.linalg.norm(v))
    return max(convex_null_cost(sys, d, T, p, pieces) for d in dirs)


# ---------------------------------------------------------------------------
# cost curves


@dataclass(frozen=True, eq=False)
class CostCurve:
    Ts: np.ndarray
    costs: np.ndarray
    p: object = 2
    state_norm: str = "euclid"
    bounds: np.ndarray | None = None

    def __post_init__(self):
        Ts = np.asarray(self.Ts, dtype=float)
        order = np.argsort(Ts)
        object.__setattr__(self, "Ts", Ts[order])
        object.__setattr__(self, "costs", np.asarray(self.costs, dtype=float)[order])
        if self.bounds is not None:
            object.__setattr__(self, "bounds", np.asarray(self.bounds, dtype=float)[order])
        if np.any(self.Ts <= 0) or np.any(np.diff(self.Ts) <= 0):
            raise ValueError("T values must be positive and distinct")

    def to_csv(self) -> str:
        lines = ["T,cost,bound"]
        for i, (t, c) in enumerate(zip(self.Ts, self.costs)):
            b = "" if self.bounds is None else repr(float(self.bounds[i]))
            lines.append(f"{float(t)!r},{float(c)!r},{b}")
        return "\n".join(lines) + "\n"


def cost_curve(sys: LtiSystem, Ts, state_norm: str = "euclid") -> CostCurve:
    return CostCurve(np.asarray(Ts, dtype=float), [null_cost(sys, T, state_norm) for T in Ts],
                     2, state_norm)


def fit_cost_asymptotics(curve: CostCurve, min_points: int = 5):
    """Least squares ``log cost = exponent * log T + log constant``: ``(exponent, constant, r2)``."""
    T, c = curve.Ts, curve.costs
    if len(T) < 2 or np.ptp(T) == 0:
        raise DegenerateFitError("need distinct T values")
    if len(T) < min_points:
        raise DegenerateFitError(f"need at least {min_points} points")
    if T.max() / T.min() < 10:
        raise DegenerateFitError("T values must span a decade")
    if np.any(c <= 0):
        raise DegenerateFitError("costs must be positive")
    x, y = np.log(T), np.log(c)
    slope, icpt = np.polyfit(x, y, 1)
    resid = y - (slope * x + icpt)
    ss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(resid @ resid) / ss if ss > 0 else 1.0
    return float(slope), float(math.exp(icpt)), r2


# ---------------------------------------------------------------------------
# diagonal system: moment matrix and Vandermonde bounds


def moment_bound(n: int, T: float) -> float:
    return math.sqrt(n * n / T) * math.exp(6.0 * math.sqrt(n / T))


def _moment_dps(n: int, T: float) -> int:
    # log10 cond(M) grows roughly like 0.87 * 2 n^2 T
    return 30 + 2 * n + int(math.ceil(0.9 * n * n * T))


def moment_matrix_mp(n: int, T: float, dps: int | None = None):
    dps = _moment_dps(n, T) if dps is None else dps
    with mp.workdps(dps):
        M = mp.matrix(n, n)
        Tm = mp.mpf(T)
        for i in range(1, n + 1):
            for j in range(1, n + 1):
                s = i * i + j * j
                M[i - 1, j - 1] = mp.expm1(s * Tm) / s
    return M


def moment_matrix(n: int, T: float) -> np.ndarray:
    i = np.arange(1, n + 1, dtype=float)
    S = i[:, None] ** 2 + i[None, :] ** 2
    with np.errstate(over="ignore"):
        return np.expm1(S * T) / S


def diag_moment_cost(n: int, T: float, extended: bool | None = None):
    """``(||M^{-1}||^{1/2}, sqrt(n^2/T) exp(6 sqrt(n/T)), M)`` for the diagonal system.

    Extended precision (mpmath) is used for ``n >= 6`` unless overridden.
    """
    if not 1 <= n <= 12:
        raise ValueError("n must be in 1..12")
    if T <= 0:
        raise ValueError("T must be positive")
    bound = moment_bound(n, T)
    M = moment_matrix(n, T)
    use_mp = (n >= 6) if extended is None else extended
    if not use_mp:
        try:
            L = np.linalg.cholesky(M)
        except np.linalg.LinAlgError as exc:
            raise PrecisionLossError("Cholesky of the moment matrix failed") from exc
        Linv = solve_triangular(L, np.eye(n), lower=True)
        cost = float(np.linalg.norm(Linv, 2))
        return cost, bound, M
    dps = _moment_dps(n, T)
    with mp.workdps(dps):
        Mm = moment_matrix_mp(n, T, dps)
        try:
            ev = mp.eigsy(Mm, eigvals_only=True)
        except Exception as exc:  # pragma: no cover - mpmath internal failure
            raise PrecisionLossError("extended-precision eigensolver failed") from exc
        lmin = min(ev)
        if lmin <= 0:
            raise PrecisionLossError("moment matrix not numerically positive definite")
        cost = float(1 / mp.sqrt(lmin))
    return cost, bound, M


def moment_solve(n: int, T: float, b, extended: bool | None = None) -> np.ndarray:
    """Solve ``M a = b``; the control ``u(t) = sum_j a_j e^{j^2 t}`` has ``||u||^2 = a^T M a``."""
    use_mp = (n >= 6) if extended is None else extended
    b = np.asarray(b, dtype=float)
    if not use_mp:
        M = moment_matrix(n, T)
        try:
            L = np.linalg.cholesky(M)
        except np.linalg.LinAlgError as exc:
            raise PrecisionLossError("Cholesky of the moment matrix failed") from exc
        return solve_triangular(L.T, solve_triangular(L, b, lower=True), lower=False)
    dps = _moment_dps(n, T)
    with mp.workdps(dps):
        Mm = moment_matrix_mp(n, T, dps)
        a = mp.cholesky_solve(Mm, mp.matrix([mp.mpf(float(x)) for x in b]))
        return np.array([float(x) for x in a])


def vandermonde_cost_chain(n: int, T: float):
    """``(||U^{-1}||, Gautschi bound, sqrt(n) e^{6 sqrt(n/T)})`` for nodes ``z_j = e^{j^2 T/n}``."""
    from .inequalities import gautschi_log_bound

    if not 1 <= n <= 10:
        raise ValueError("n must be in 1..10")
    logz = np.array([j * j * T / n for j in range(1, n + 1)])
    log_gb = gautschi_log_bound(logz_real=logz)
    dps = 30 + int(math.ceil(2 * n * n * T / 2.3)) + 2 * n
    with mp.workdps(dps):
        U = mp.matrix(n, n)
        for i in range(n):
            for j in range(n):
                U[i, j] = mp.exp(mp.mpf(logz[i]) * j)
        Uinv = mp.inverse(U)
        sv = mp.svd_r(Uinv, compute_uv=False)
        norm_inv = float(max(sv))
    riemann = math.sqrt(n) * math.exp(6.0 * math.sqrt(n / T))
    return norm_inv, float(math.exp(log_gb)), riemann
