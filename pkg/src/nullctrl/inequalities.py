"""Checkers for Remez, Turan, Bernstein, Logvinenko-Sereda, Sobolev and
Gautschi inequalities.

Every checker returns ``(lhs, rhs)`` and the contract is ``lhs <= rhs``.
Random suites take an explicit seed and return :class:`Row` lists that
serialize to CSV.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.optimize import minimize, minimize_scalar
from scipy.linalg import eigh

from .errors import BandLimitError, CoincidentNodesError, EmptySetError

REL_TOL = 1e-9


# ---------------------------------------------------------------------------
# sets


@dataclass(frozen=True, eq=False)
class MeasurableSet1D:
    """Finite union of disjoint closed intervals in ``[0, 1]``."""

    intervals: tuple

    def __post_init__(self):
        iv = sorted((float(a), float(b)) for a, b in self.intervals)
        for a, b in iv:
            if not (0.0 <= a < b <= 1.0):
                raise ValueError(f"interval ({a}, {b}) not inside [0, 1]")
        for (a0, b0), (a1, b1) in zip(iv, iv[1:]):
            if a1 < b0:
                raise ValueError("intervals overlap")
        object.__setattr__(self, "intervals", tuple(iv))

    @property
    def measure(self) -> float:
        return float(sum(b - a for a, b in self.intervals))

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        m = np.zeros(x.shape, dtype=bool)
        for a, b in self.intervals:
            m |= (x >= a) & (x <= b)
        return m


@dataclass(frozen=True, eq=False)
class BoxSet:
    """Finite union of disjoint axis-aligned boxes in ``[0,1]^d``; each box is ``((lo, hi), ...)``."""

    boxes: tuple

    @property
    def dim(self) -> int:
        return len(self.boxes[0])

    @property
    def measure(self) -> float:
        return float(sum(np.prod([hi - lo for lo, hi in b]) for b in self.boxes))


def as_boxset(omega, d: int) -> BoxSet:
    if isinstance(omega, BoxSet):
        return omega
    if isinstance(omega, MeasurableSet1D):
        if d != 1:
            raise ValueError("1D set given for a 2D check")
        return BoxSet(tuple(((a, b),) for a, b in omega.intervals))
    return BoxSet(tuple(tuple(tuple(map(float, iv)) for iv in box) for box in omega))


# ---------------------------------------------------------------------------
# smooth samples


@dataclass(frozen=True, eq=False)
class SmoothSample:
    """A function on ``[0,1]^d`` with its partial derivatives.

    ``deriv(alpha)`` returns a vectorized callable; points are arrays of shape
    ``(k,)`` for ``d = 1`` and ``(k, 2)`` for ``d = 2``.
    """

    dim: int
    deriv_fn: Callable

    def deriv(self, alpha) -> Callable:
        alpha = tuple(int(a) for a in np.atleast_1d(alpha))
        if len(alpha) != self.dim:
            raise ValueError("multi-index length must equal dim")
        return self.deriv_fn(alpha)

    def __call__(self, x):
        return self.deriv((0,) * self.dim)(x)


def poly_sample(coeffs) -> SmoothSample:
    """1D polynomial with ascending coefficients."""
    c = np.asarray(coeffs, dtype=float)

    def dfn(alpha):
        cc = P.polyder(c, alpha[0]) if alpha[0] else c
        return lambda x: P.polyval(np.asarray(x, dtype=float), cc)

    return SmoothSample(1, dfn)


def trig_sample(cos_coeffs, sin_coeffs, freq_scale: float = 2 * math.pi) -> SmoothSample:
    """``sum_k a_k cos(k w x) + b_k sin(k w x)`` for ``k = 0..K`` with ``w = freq_scale``."""
    a = np.asarray(cos_coeffs, dtype=float)
    b = np.asarray(sin_coeffs, dtype=float)
    k = np.arange(len(a)) * freq_scale

    def dfn(alpha):
        m = alpha[0]
        km = k ** m

        def f(x):
            x = np.asarray(x, dtype=float)[..., None]
            ph = k * x + m * math.pi / 2
            return np.sum(a * km * np.cos(ph) + b * km * np.sin(ph), axis=-1)

        return f

    return SmoothSample(1, dfn)


def tensor_sample(fx: SmoothSample, fy: SmoothSample) -> SmoothSample:
    def dfn(alpha):
        gx, gy = fx.deriv((alpha[0],)), fy.deriv((alpha[1],))
        return lambda X: gx(np.asarray(X)[:, 0]) * gy(np.asarray(X)[:, 1])

    return SmoothSample(2, dfn)


def sum_sample(parts: Sequence[SmoothSample]) -> SmoothSample:
    d = parts[0].dim

    def dfn(alpha):
        gs = [p.deriv(alpha) for p in parts]
        return lambda x: sum(g(x) for g in gs)

    return SmoothSample(d, dfn)


# ---------------------------------------------------------------------------
# sup norms and quadrature


def _golden_refine(g: Callable, a: float, b: float, x0: float) -> float:
    lo, hi = max(a, x0 - (b - a) / 2048.0), min(b, x0 + (b - a) / 2048.0)
    if hi <= lo:
        return float(abs(g(np.array([x0]))[0]))
    res = minimize_scalar(lambda t: -abs(float(g(np.array([t]))[0])), bounds=(lo, hi),
                          method="bounded", options={"xatol": 1e-12})
    return max(float(-res.fun), float(abs(g(np.array([x0]))[0])))


def sup_abs_1d(g: Callable, intervals, grid: int = 2048) -> float:
    """Sup of ``|g|`` over a union of intervals: dense grid, then bounded refinement."""
    total = sum(b - a for a, b in intervals)
    best = 0.0
    for a, b in intervals:
        n = max(17, int(math.ceil(grid * (b - a) / total)))
        x = np.linspace(a, b, n)
        v = np.abs(g(x))
        i = int(np.argmax(v))
        best = max(best, float(v[i]), _golden_refine(g, a, b, float(x[i])))
    return best


def sup_abs_2d(g: Callable, boxes, grid: int = 256) -> float:
    best = 0.0
    total = sum(np.prod([hi - lo for lo, hi in bx]) for bx in boxes)
    for (x0, x1), (y0, y1) in boxes:
        frac = math.sqrt((x1 - x0) * (y1 - y0) / total)
        n = max(17, int(math.ceil(grid * frac)))
        X, Y = np.meshgrid(np.linspace(x0, x1, n), np.linspace(y0, y1, n), indexing="ij")
        pts = np.column_stack([X.ravel(), Y.ravel()])
        v = np.abs(g(pts))
        i = int(np.argmax(v))
        best = max(best, float(v[i]))
        cons = [(x0, x1), (y0, y1)]
        res = minimize(lambda p: -abs(float(g(np.array([p]))[0])), pts[i], bounds=cons,
                       method="L-BFGS-B")
        best = max(best, float(-res.fun))
    return best


def sup_abs(g: Callable, omega: BoxSet) -> float:
    if omega.dim == 1:
        return sup_abs_1d(g, [b[0] for b in omega.boxes])
    return sup_abs_2d(g, omega.boxes)


def l2_norm(g: Callable, omega: BoxSet, nodes: int = 64) -> float:
    """``||g||_{L2(omega)}`` by tensor Gauss-Legendre on each box."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    tot = 0.0
    for box in omega.boxes:
        grids, weights = [], []
        for lo, hi in box:
            grids.append(lo + 0.5 * (hi - lo) * (x + 1.0))
            weights.append(0.5 * (hi - lo) * w)
        if len(box) == 1:
            tot += float(weights[0] @ g(grids[0]) ** 2)
        else:
            X, Y = np.meshgrid(grids[0], grids[1], indexing="ij")
            W = np.outer(weights[0], weights[1])
            vals = g(np.column_stack([X.ravel(), Y.ravel()])).reshape(X.shape)
            tot += float(np.sum(W * vals ** 2))
    return math.sqrt(tot)


def multi_indices(d: int, order: int):
    return [a for a in itertools.product(range(order + 1), repeat=d) if sum(a) == order]


def _unit_box(d: int) -> BoxSet:
    return BoxSet((((0.0, 1.0),) * d,))


# ---------------------------------------------------------------------------
# Remez


def remez_check(f: SmoothSample, omega: MeasurableSet1D, n: int):
    """``sup|f| <= (8e/|w|)^n sup_w|f| + sup|f^(n+1)|/(n+1)!`` on ``[0, 1]``."""
    if omega.measure <= 0:
        raise EmptySetError("omega has zero measure")
    lhs = sup_abs_1d(f, [(0.0, 1.0)])
    tail = sup_abs_1d(f.deriv((n + 1,)), [(0.0, 1.0)]) / math.factorial(n + 1)
    rhs = (8 * math.e / omega.measure) ** n * sup_abs_1d(f, omega.intervals) + tail
    return lhs, rhs


def remez_check_multi(f: SmoothSample, omega, n: int, d: int, form: str = "sup"):
    """Multi-dimensional Remez bound; ``form="l2"`` uses ``||f||_{L2(omega)}`` with order ``n``."""
    box = as_boxset(omega, d)
    if box.measure <= 0:
        raise EmptySetError("omega has zero measure")
    lhs = sup_abs(f, _unit_box(d))
    if form == "sup":
        order, base, power = n + 1, 8 * math.e * d / box.measure, (n + 1) / 2
        observed = sup_abs(f, box)
    elif form == "l2":
        if n < 1:
            raise ValueError("the L2 form needs n >= 1")
        order, base, power = n, 16 * math.e * d / box.measure, n / 2
        observed = l2_norm(f, box)
    else:
        raise ValueError("form must be 'sup' or 'l2'")
    tail = 0.0
    for a in multi_indices(d, order):
        fact = math.prod(math.factorial(k) for k in a)
        tail += sup_abs(f.deriv(a), _unit_box(d)) / fact
    rhs = base ** n * observed + d ** power * tail
    return lhs, rhs


# ---------------------------------------------------------------------------
# Turan


def sine_mass_matrix(n: int, intervals) -> np.ndarray:
    """``G_ij = int_w 2 sin(i pi x) sin(j pi x) dx`` in closed form."""
    j = np.arange(1, n + 1)
    I, J = np.meshgrid(j, j, indexing="ij")

    def icos(m):
        out = np.zeros(m.shape)
        for a, b in intervals:
            mm = m * np.pi
            with np.errstate(divide="ignore", invalid="ignore"):
                r = (np.sin(mm * b) - np.sin(mm * a)) / mm
            out += np.where(m == 0, b - a, r)
        return out

    G = icos(I - J) - icos(I + J)
    return 0.5 * (G + G.T)


def turan_constant(measure: float) -> tuple[float, float]:
    """``(C_w, chain)`` from the cosine-substitution proof with ``delta = |w|/3``.

    ``chain(n) = (16e/(pi delta^2))^(n-1) / (delta sqrt(sin(pi delta)))``; Remez is
    rescaled to the length-2 interval ``[-1, 1]``. ``C_w`` is the larger of the
    two factors, so ``chain(n) <= C_w^n``.
    """
    delta = measure / 3.0
    geo = 16 * math.e / (math.pi * delta * delta)
    pre = 1.0 / (delta * math.sqrt(math.sin(math.pi * delta)))
    return max(geo, pre), (geo, pre)


def turan_ratio(a, omega: MeasurableSet1D):
    """``(||f||_{L2(0,1)} / ||f||_{L2(w)}, C_w^n)`` for ``f = sum a_j sin(j pi x)``."""
    a = np.asarray(a, dtype=float)
    if not np.any(a):
        raise ValueError("coefficients are all zero")
    if omega.measure <= 0:
        raise EmptySetError("omega has zero measure")
    n = len(a)
    G = sine_mass_matrix(n, omega.intervals)
    den = float(a @ G @ a)
    if den <= 0:
        raise ZeroDivisionError("observed norm underflowed")
    ratio = math.sqrt(float(a @ a) / den)
    C, _ = turan_constant(omega.measure)
    return ratio, C ** n


def turan_chain_bound(n: int, measure: float) -> float:
    _, (geo, pre) = turan_constant(measure)
    return geo ** (n - 1) * pre


# ---------------------------------------------------------------------------
# Bernstein


def bernstein_check(freqs, coeffs, N: float, alpha):
    """``||D^alpha f|| <= N^|alpha| ||f||`` for ``f = sum c_k exp(i xi_k . x)`` (Parseval)."""
    xi = np.atleast_2d(np.asarray(freqs, dtype=float))
    if xi.shape[0] == 1 and np.ndim(freqs) == 1:
        xi = xi.T
    c = np.asarray(coeffs, dtype=complex)
    alpha = np.atleast_1d(alpha)
    if xi.shape[1] != len(alpha):
        raise ValueError("multi-index dimension mismatch")
    if np.any(np.linalg.norm(xi, axis=1) > N * (1 + 1e-12)):
        raise BandLimitError("a frequency exceeds the band limit")
    mult = np.prod(xi ** alpha, axis=1)
    lhs = math.sqrt(float(np.sum(np.abs(mult * c) ** 2)))
    rhs = N ** int(alpha.sum()) * math.sqrt(float(np.sum(np.abs(c) ** 2)))
    return lhs, rhs


# ---------------------------------------------------------------------------
# Logvinenko-Sereda


@dataclass(frozen=True, eq=False)
class ThickSet1D:
    """Periodic set: in each cell ``[ja, (j+1)a]`` the fractional pattern is kept."""

    a: float
    pattern: tuple = ((0.0, 0.5),)

    @property
    def gamma(self) -> float:
        """Worst fraction of any length-``a`` window covered (window sweep)."""
        s = np.linspace(0.0, 1.0, 1025)
        best = np.inf
        pts = np.linspace(0.0, 2.0, 4097)
        inside = np.zeros_like(pts, dtype=bool)
        for lo, hi in self.pattern:
            frac = pts % 1.0
            inside |= (frac >= lo) & (frac <= hi)
        dx = pts[1] - pts[0]
        cum = np.concatenate([[0.0], np.cumsum(inside[:-1] * dx)])
        for x0 in s:
            i0 = int(round(x0 / dx))
            i1 = i0 + int(round(1.0 / dx))
            best = min(best, cum[i1] - cum[i0])
        return float(best)

    def box_measure(self, cells: int) -> float:
        return cells * self.a * sum(hi - lo for lo, hi in self.pattern)


def _exp_gram(freqs: np.ndarray, omega: ThickSet1D, cells: int) -> np.ndarray:
    """``(1/L) int_{w cap box} exp(i (xi_m - xi_n) x) dx`` for the periodized box."""
    L = cells * omega.a
    D = freqs[:, None] - freqs[None, :]
    G = np.zeros(D.shape, dtype=complex)
    for j in range(cells):
        for lo, hi in omega.pattern:
            x0, x1 = (j + lo) * omega.a, (j + hi) * omega.a
            with np.errstate(divide="ignore", invalid="ignore"):
                val = (np.exp(1j * D * x1) - np.exp(1j * D * x0)) / (1j * D)
            G += np.where(np.abs(D) < 1e-14, x1 - x0, val)
    return G / L


def ls_ratio_scan(N_list, omega: ThickSet1D, trials: int = 200, cells: int = 64, seed: int = 0):
    """Worst ``||f||_{L2(box)} / ||f||_{L2(w cap box)}`` for band-limited ``f``.

    Test functions are trigonometric sums with frequencies ``2 pi m / L`` of modulus
    at most ``N``. The worst case is the max over random draws and the extremal
    eigenvector of the restricted Gram matrix.
    """
    if cells < 64:
        raise ValueError("box must contain at least 64 cells")
    rng = np.random.default_rng(seed)
    L = cells * omega.a
    rows = []
    for N in N_list:
        mmax = int(math.floor(N * L / (2 * math.pi) + 1e-12))
        freqs = 2 * math.pi * np.arange(-mmax, mmax + 1) / L
        G = _exp_gram(freqs, omega, cells)
        G = 0.5 * (G + G.conj().T)
        worst = 0.0
        for _ in range(trials):
            c = rng.standard_normal(len(freqs)) + 1j * rng.standard_normal(len(freqs))
            worst = max(worst, math.sqrt(float(np.vdot(c, c).real) / float(np.vdot(c, G @ c).real)))
        lam = eigh(G, eigvals_only=True)
        worst = max(worst, 1.0 / math.sqrt(max(float(lam[0]), 1e-300)))
        rows.append((float(N), worst))
    return rows


def log_affine_fit(xs, ys):
    """Fit ``log y = s x + c``; returns ``(slope, intercept, r2)``."""
    x = np.asarray(xs, dtype=float)
    y = np.log(np.asarray(ys, dtype=float))
    s, c = np.polyfit(x, y, 1)
    res = y - (s * x + c)
    ss = float(np.sum((y - y.mean()) ** 2))
    return float(s), float(c), (1.0 - float(res @ res) / ss) if ss > 0 else 1.0


# ---------------------------------------------------------------------------
# Sobolev


def sobolev_check(f: SmoothSample, d: int):
    """``(||f||_inf^2, 2^d sum_{|alpha|<=d} ||D^alpha f||_2^2)`` on ``[0,1]^d``."""
    if d != f.dim:
        raise ValueError("dimension mismatch")
    box = _unit_box(d)
    lhs = sup_abs(f, box) ** 2
    tot = 0.0
    for order in range(d + 1):
        for a in multi_indices(d, order):
            tot += l2_norm(f.deriv(a), box) ** 2
    return lhs, 2 ** d * tot


# ---------------------------------------------------------------------------
# Gautschi


def _log_abs_diff_positive(la: float, lb: float) -> float:
    """``log|e^la - e^lb|`` without overflow."""
    hi, lo = max(la, lb), min(la, lb)
    return hi + math.log(-math.expm1(lo - hi))


def gautschi_log_bound(nodes=None, logz_real=None) -> float:
    """Log of ``sqrt(n) max_j prod_{k!=j} (1+|z_k|)/|z_j - z_k|``.

    ``logz_real`` gives positive real nodes by their logarithms (log-domain products).
    """
    if logz_real is not None:
        lz = np.asarray(logz_real, dtype=float)
        n = len(lz)
        best = -np.inf
        for j in range(n):
            s = 0.0
            for k in range(n):
                if k == j:
                    continue
                if lz[k] == lz[j]:
                    raise CoincidentNodesError("coincident nodes")
                s += np.logaddexp(0.0, lz[k]) - _log_abs_diff_positive(lz[j], lz[k])
            best = max(best, s)
        return 0.5 * math.log(n) + best
    z = np.asarray(nodes, dtype=complex)
    n = len(z)
    scale = max(1.0, float(np.max(np.abs(z))))
    best = -np.inf
    for j in range(n):
        s = 0.0
        for k in range(n):
            if k == j:
                continue
            gap = abs(z[j] - z[k])
            if gap <= 1e-12 * scale:
                raise CoincidentNodesError("coincident nodes")
            s += math.log1p(abs(z[k])) - math.log(gap)
        best = max(best, s)
    return 0.5 * math.log(n) + best


def gautschi_bound(nodes):
    """``(||V^{-1}||_2, Gautschi bound)`` for ``V = (z_j^{k-1})``."""
    z = np.asarray(nodes, dtype=complex)
    n = len(z)
    lb = gautschi_log_bound(z)
    V = np.vander(z, n, increasing=True)
    norm_inv = float(np.linalg.norm(np.linalg.inv(V), 2))
    return norm_inv, math.exp(lb)


# ---------------------------------------------------------------------------
# random suites


@dataclass(frozen=True)
class Row:
    check: str
    parameter: str
    lhs: float
    rhs: float

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def ok(self) -> bool:
        return self.lhs <= self.rhs * (1 + REL_TOL)


def rows_to_csv(rows: Sequence[Row], seed: int) -> str:
    lines = [f"# seed={seed}", "check,parameter,lhs,rhs,margin"]
    for r in rows:
        lines.append(f"{r.check},{r.parameter},{r.lhs!r},{r.rhs!r},{r.margin!r}")
    return "\n".join(lines) + "\n"


def random_intervals(rng, total: float, pieces: int = 2) -> MeasurableSet1D:
    """Random union of ``pieces`` disjoint intervals of total length ``total``."""
    lengths = rng.dirichlet(np.ones(pieces)) * total
    gaps = rng.dirichlet(np.ones(pieces + 1)) * (1.0 - total)
    iv, x = [], gaps[0]
    for L, g in zip(lengths, gaps[1:]):
        iv.append((x, min(x + L, 1.0)))
        x += L + g
    return MeasurableSet1D(tuple(iv))


def remez_suite(seed: int, trials: int = 100):
    rng = np.random.default_rng(seed)
    rows = []
    for t in range(trials):
        omega = random_intervals(rng, 0.3, pieces=int(rng.integers(1, 4)))
        # degree-5 polynomial built from Chebyshev-like coefficients on [0,1]
        cheb = np.polynomial.chebyshev.Chebyshev(rng.standard_normal(6), domain=[0, 1])
        f = poly_sample(cheb.convert(kind=np.polynomial.Polynomial).coef)
        lhs, rhs = remez_check(f, omega, 5)
        rows.append(Row("remez1d", f"trial={t}", lhs, rhs))
    return rows


def remez2d_suite(seed: int, trials: int = 20):
    rng = np.random.default_rng(seed)
    rows = []
    for t in range(trials):
        fx = trig_sample(rng.standard_normal(3), rng.standard_normal(3), freq_scale=math.pi)
        fy = trig_sample(rng.standard_normal(3), rng.standard_normal(3), freq_scale=math.pi)
        f = tensor_sample(fx, fy)
        lo = rng.uniform(0, 0.5, size=2)
        omega = [((lo[0], lo[0] + 0.5), (lo[1], lo[1] + 0.5))]
        n = int(rng.integers(1, 4))
        lhs, rhs = remez_check_multi(f, omega, n, 2)
        rows.append(Row("remez2d", f"trial={t};n={n}", lhs, rhs))
        lhs, rhs = remez_check_multi(f, omega, n, 2, form="l2")
        rows.append(Row("remez2d-l2", f"trial={t};n={n}", lhs, rhs))
    return rows


def turan_suite(seed: int, trials: int = 24, nmax: int = 12):
    rng = np.random.default_rng(seed)
    rows = []
    omega = MeasurableSet1D(((0.1, 0.4),))
    for t in range(trials):
        n = 1 + t % nmax
        a = rng.standard_normal(n)
        ratio, bound = turan_ratio(a, omega)
        rows.append(Row("turan", f"n={n}", ratio, bound))
    return rows


def bernstein_suite(seed: int, trials: int = 100):
    rng = np.random.default_rng(seed)
    rows = []
    for t in range(trials):
        N = float(rng.integers(1, 9))
        K = int(rng.integers(1, 8))
        freqs = rng.uniform(-N, N, size=K)
        c = rng.standard_normal(K) + 1j * rng.standard_normal(K)
        for order in (0, 1, 2):
            lhs, rhs = bernstein_check(freqs, c, N, (order,))
            rows.append(Row("bernstein", f"trial={t};alpha={order}", lhs, rhs))
    return rows


def sobolev_suite(seed: int, trials: int = 50):
    rng = np.random.default_rng(seed)
    rows = []
    for t in range(trials):
        f1 = trig_sample(rng.standard_normal(4), rng.standard_normal(4))
        lhs, rhs = sobolev_check(f1, 1)
        rows.append(Row("sobolev1d", f"trial={t}", lhs, rhs))
        g = tensor_sample(trig_sample(rng.standard_normal(3), rng.standard_normal(3)),
                          trig_sample(rng.standard_normal(3), rng.standard_normal(3)))
        lhs, rhs = sobolev_check(g, 2)
        rows.append(Row("sobolev2d", f"trial={t}", lhs, rhs))
    return rows


def gautschi_suite(seed: int, trials: int = 500, nmax: int = 8):
    rng = np.random.default_rng(seed)
    rows = []
    for t in range(trials):
        n = int(rng.integers(1, nmax + 1))
        r = np.sqrt(rng.uniform(0, 1, n))
        z = r * np.exp(2j * np.pi * rng.uniform(0, 1, n))
        ni, b = gautschi_bound(z)
        rows.append(Row("gautschi", f"trial={t};n={n}", ni, b))
    return rows
