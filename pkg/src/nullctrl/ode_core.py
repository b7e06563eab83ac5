"""Control-affine ODEs driven by piecewise-polynomial controls.

The system is ``y' = f0(y) + u(t) f1(y)`` with a scalar control. Controls are
lists of polynomial segments; each segment stores its coefficients in the
local variable ``s = (t - t_start) / duration`` so that short and long
segments are equally well conditioned.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import NonfiniteStateError, StateEscapeError

MAX_DEGREE = 5

VectorField = Callable[[np.ndarray], np.ndarray]


# ---------------------------------------------------------------------------
# systems


@dataclass(frozen=True, eq=False)
class AffineSystem:
    """``y' = drift(y) + u * control_field(y)`` with constants valid on a ball."""

    dim: int
    drift: VectorField
    control_field: VectorField
    lipschitz_drift: float
    lipschitz_ctrl: float
    bound_ctrl: float
    valid_radius: float = np.inf
    name: str = "affine"

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be positive")
        f00 = np.asarray(self.drift(np.zeros(self.dim)), dtype=float)
        if f00.shape != (self.dim,):
            raise ValueError("drift must map R^n to R^n")
        if np.max(np.abs(f00)) > 1e-12:
            raise ValueError("0 must be an equilibrium of the drift")

    def rhs(self, y: np.ndarray, u: float) -> np.ndarray:
        return self.drift(y) + u * self.control_field(y)

    @classmethod
    def from_linear(cls, A, b, name="linear") -> "AffineSystem":
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.asarray(b, dtype=float).reshape(-1)
        nb = float(np.linalg.norm(b))
        return cls(A.shape[0], lambda y: A @ y, lambda y: b, float(np.linalg.norm(A, 2)),
                   0.0, nb, np.inf, name)


def scalar_integrator() -> AffineSystem:
    """``y' = u`` in dimension one."""
    return AffineSystem(1, lambda y: np.zeros(1), lambda y: np.ones(1), 0.0, 0.0, 1.0,
                        np.inf, "scalar-integrator")


def integrator_chain(n: int) -> AffineSystem:
    """``y1' = u, y2' = y1, ..., yn' = y_{n-1}``."""
    e1 = np.zeros(n)
    e1[0] = 1.0

    def drift(y):
        out = np.zeros(n)
        out[1:] = y[:-1]
        return out

    return AffineSystem(n, drift, lambda y: e1, 1.0 if n > 1 else 0.0, 0.0, 1.0, np.inf,
                        f"chain-{n}")


def jakubczyk(valid_radius: float = 1.0) -> AffineSystem:
    """``y1' = u, y2' = y1, y3' = y2**2 + y1**3``."""
    R = valid_radius
    e1 = np.array([1.0, 0.0, 0.0])

    def drift(y):
        return np.array([0.0, y[0], y[1] * y[1] + y[0] ** 3])

    L0 = math.sqrt(1.0 + 9.0 * R ** 4 + 4.0 * R ** 2)
    return AffineSystem(3, drift, lambda y: e1, L0, 0.0, 1.0, R, "jakubczyk")


def jakubczyk_int(valid_radius: float = 1.0) -> AffineSystem:
    """Jakubczyk system augmented with an integrator ``y4' = y3``."""
    R = valid_radius
    e1 = np.array([1.0, 0.0, 0.0, 0.0])

    def drift(y):
        return np.array([0.0, y[0], y[1] * y[1] + y[0] ** 3, y[2]])

    L0 = math.sqrt(2.0 + 9.0 * R ** 4 + 4.0 * R ** 2)
    return AffineSystem(4, drift, lambda y: e1, L0, 0.0, 1.0, R, "jakubczyk-int")


def random_quadratic_system(rng: np.random.Generator, n: int, valid_radius: float = 1.0,
                            scale: float = 1.0) -> AffineSystem:
    """Random ``f0 = Ay + Q(y,y)`` and ``f1 = b + Cy`` with certified constants."""
    A = scale * rng.standard_normal((n, n)) / math.sqrt(n)
    Q = scale * rng.standard_normal((n, n, n)) / n
    b = rng.standard_normal(n)
    C = scale * rng.standard_normal((n, n)) / math.sqrt(n)
    R = valid_radius
    # |DQ(y)h| <= 2 |Q|_F |y| |h|
    qf = float(np.linalg.norm(Q))
    L0 = float(np.linalg.norm(A, 2)) + 2.0 * qf * R
    L1 = float(np.linalg.norm(C, 2))
    M1 = float(np.linalg.norm(b)) + L1 * R

    def drift(y):
        return A @ y + np.einsum("ijk,j,k->i", Q, y, y)

    def ctrl(y):
        return b + C @ y

    return AffineSystem(n, drift, ctrl, L0, L1, M1, R, f"quadratic-{n}")


# ---------------------------------------------------------------------------
# controls


def _trim(c: np.ndarray) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    nz = np.nonzero(c)[0]
    if len(nz) == 0:
        return np.zeros(1)
    return c[: nz[-1] + 1]


def _affine_compose(c: np.ndarray, a0: float, a1: float) -> np.ndarray:
    """Coefficients of ``p(a0 + a1 s)`` given ascending coefficients ``c`` of ``p``."""
    out = np.zeros(1)
    lin = np.array([a0, a1])
    for ck in c[::-1]:
        out = P.polymul(out, lin)
        out[0] += ck
    return out[: len(c)] if len(out) > len(c) else out


def _real_roots_open(c: np.ndarray, lo=0.0, hi=1.0) -> np.ndarray:
    c = _trim(c)
    # negligible leading terms only move roots towards infinity (and overflow the companion matrix)
    big = np.abs(c) > 1e-14 * np.max(np.abs(c))
    c = c[: np.nonzero(big)[0][-1] + 1] if big.any() else c[:1]
    if len(c) < 2:
        return np.zeros(0)
    r = P.polyroots(c)
    r = r[np.abs(r.imag) < 1e-9 * (1 + np.abs(r.real))].real
    return np.sort(r[(r > lo) & (r < hi)])


def _abs_integral_unit(c: np.ndarray) -> float:
    """Exact ``int_0^1 |p(s)| ds`` using the real roots of ``p``."""
    c = _trim(c)
    pts = np.concatenate([[0.0], _real_roots_open(c), [1.0]])
    F = P.polyint(c)
    vals = P.polyval(pts, F)
    return float(np.sum(np.abs(np.diff(vals))))


@dataclass(frozen=True, eq=False)
class Segment:
    duration: float
    coeffs: np.ndarray  # shape (channels, degree + 1), ascending powers of s

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.coeffs, dtype=float))
        object.__setattr__(self, "coeffs", c)
        if not self.duration > 0:
            raise ValueError("segment durations must be positive")
        if c.shape[1] - 1 > MAX_DEGREE:
            raise ValueError(f"polynomial degree above {MAX_DEGREE}")
        if not np.all(np.isfinite(c)):
            raise ValueError("nonfinite control coefficients")

    def value(self, s):
        return np.stack([P.polyval(s, ch) for ch in self.coeffs], axis=-1)

    def sub(self, a: float, b: float) -> "Segment":
        """Piece on local times ``[a, b]`` (seconds), reparametrized to ``[0, 1]``."""
        d = self.duration
        a0, a1 = a / d, (b - a) / d
        return Segment(b - a, np.array([_affine_compose(ch, a0, a1) for ch in self.coeffs]))

    @property
    def is_zero(self) -> bool:
        return not np.any(self.coeffs)


@dataclass(frozen=True, eq=False)
class ControlSignal:
    """Piecewise-polynomial control on ``[0, duration]``."""

    segments: tuple = ()
    channels: int = 1

    def __post_init__(self):
        segs = tuple(self.segments)
        for s in segs:
            if s.coeffs.shape[0] != self.channels:
                raise ValueError("channel count mismatch")
        object.__setattr__(self, "segments", segs)

    # construction -------------------------------------------------------
    @classmethod
    def zero(cls, duration: float, channels: int = 1) -> "ControlSignal":
        if duration <= 0:
            return cls((), channels)
        return cls((Segment(duration, np.zeros((channels, 1))),), channels)

    @classmethod
    def constant(cls, value, duration: float) -> "ControlSignal":
        v = np.atleast_1d(np.asarray(value, dtype=float))
        if duration <= 0:
            return cls((), len(v))
        return cls((Segment(duration, v.reshape(-1, 1)),), len(v))

    @classmethod
    def polynomial(cls, duration: float, coeffs) -> "ControlSignal":
        """One segment; ``coeffs`` are ascending powers of ``s = t/duration``."""
        c = np.atleast_2d(np.asarray(coeffs, dtype=float))
        return cls((Segment(duration, c),), c.shape[0])

    @classmethod
    def from_time_polynomial(cls, duration: float, coeffs_t) -> "ControlSignal":
        """One segment from ascending coefficients in the physical time ``t``."""
        c = np.atleast_2d(np.asarray(coeffs_t, dtype=float))
        scale = duration ** np.arange(c.shape[1])
        return cls.polynomial(duration, c * scale)

    # queries ------------------------------------------------------------
    @property
    def duration(self) -> float:
        return float(sum(s.duration for s in self.segments))

    @property
    def breakpoints(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum([s.duration for s in self.segments])])

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        tt = np.atleast_1d(t)
        out = np.zeros((len(tt), self.channels))
        if self.segments:
            bp = self.breakpoints
            idx = np.clip(np.searchsorted(bp, tt, side="right") - 1, 0, len(self.segments) - 1)
            for i, seg in enumerate(self.segments):
                m = (idx == i) & (tt >= 0) & (tt <= bp[-1])
                if np.any(m):
                    out[m] = seg.value((tt[m] - bp[i]) / seg.duration)
        return out[0] if scalar else out

    def integral(self) -> np.ndarray:
        """``int u`` per channel."""
        tot = np.zeros(self.channels)
        for s in self.segments:
            tot += s.duration * np.array([P.polyval(1.0, P.polyint(ch)) for ch in s.coeffs])
        return tot

    def norm_l1(self) -> float:
        tot = 0.0
        for s in self.segments:
            if s.is_zero:
                continue
            if self.channels == 1:
                tot += s.duration * _abs_integral_unit(s.coeffs[0])
            else:
                x, w = np.polynomial.legendre.leggauss(48)
                x = 0.5 * (x + 1.0)
                tot += 0.5 * s.duration * float(w @ np.linalg.norm(s.value(x), axis=1))
        return float(tot)

    def norm_l2(self) -> float:
        tot = 0.0
        for s in self.segments:
            for ch in s.coeffs:
                tot += s.duration * P.polyval(1.0, P.polyint(P.polymul(ch, ch)))
        return math.sqrt(max(tot, 0.0))

    def norm_linf(self) -> float:
        best = 0.0
        for s in self.segments:
            for ch in s.coeffs:
                pts = np.concatenate([[0.0, 1.0], _real_roots_open(P.polyder(ch))])
                best = max(best, float(np.max(np.abs(P.polyval(pts, ch)))))
        return best

    def norm(self, p) -> float:
        if p == 1:
            return self.norm_l1()
        if p == 2:
            return self.norm_l2()
        if p in (np.inf, "inf"):
            return self.norm_linf()
        raise ValueError(f"unsupported norm p={p}")

    # transformations ----------------------------------------------------
    def scaled(self, c: float) -> "ControlSignal":
        return ControlSignal(tuple(Segment(s.duration, c * s.coeffs) for s in self.segments),
                             self.channels)

    def __neg__(self):
        return self.scaled(-1.0)

    def restrict(self, a: float, b: float) -> "ControlSignal":
        """Control on ``[a, b]`` shifted to start at 0; zero beyond the end."""
        if b < a:
            raise ValueError("empty restriction")
        out = []
        bp = self.breakpoints
        for i, s in enumerate(self.segments):
            lo, hi = max(a, bp[i]), min(b, bp[i + 1])
            if hi - lo > 0:
                if lo == bp[i] and hi == bp[i + 1]:
                    out.append(s)
                else:
                    out.append(s.sub(lo - bp[i], hi - bp[i]))
        end = bp[-1]
        if b > end and b - max(a, end) > 0:
            out.append(Segment(b - max(a, end), np.zeros((self.channels, 1))))
        return ControlSignal(tuple(out), self.channels)

    # serialization ------------------------------------------------------
    def to_json(self) -> str:
        return json.dumps([{"duration": s.duration, "coeffs": s.coeffs.tolist()}
                           for s in self.segments])

    @classmethod
    def from_json(cls, text: str) -> "ControlSignal":
        data = json.loads(text)
        segs = tuple(Segment(float(d["duration"]), np.array(d["coeffs"], dtype=float))
                     for d in data)
        ch = segs[0].coeffs.shape[0] if segs else 1
        return cls(segs, ch)


def concat(u: ControlSignal, v: ControlSignal, tau: float) -> ControlSignal:
    """``u`` on ``[0, tau)`` followed by ``v``; ``u`` is truncated (or zero-padded) at ``tau``."""
    if tau < 0:
        raise ValueError("negative concatenation time")
    if u.channels != v.channels:
        raise ValueError("channel count mismatch")
    head = u.restrict(0.0, tau).segments if tau > 0 else ()
    return ControlSignal(tuple(head) + tuple(v.segments), u.channels)


def concat_all(parts: Sequence[ControlSignal]) -> ControlSignal:
    ch = parts[0].channels if parts else 1
    segs = []
    for p in parts:
        segs.extend(p.segments)
    return ControlSignal(tuple(segs), ch)


def l1_distance(u: ControlSignal, v: ControlSignal) -> float:
    """``||u - v||_{L1}`` on the union of both supports (missing parts count as zero)."""
    T = max(u.duration, v.duration)
    if T == 0:
        return 0.0
    cuts = np.unique(np.concatenate([u.breakpoints, v.breakpoints, [T]]))
    tot = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        if b - a <= 1e-15 * T:
            continue
        su = u.restrict(a, b).segments
        sv = v.restrict(a, b).segments
        cu = su[0].coeffs if su else np.zeros((u.channels, 1))
        cv = sv[0].coeffs if sv else np.zeros((v.channels, 1))
        w = max(cu.shape[1], cv.shape[1])
        diff = np.pad(cu, ((0, 0), (0, w - cu.shape[1]))) - np.pad(cv, ((0, 0), (0, w - cv.shape[1])))
        tot += (b - a) * _abs_integral_unit(diff[0])
    return float(tot)


# ---------------------------------------------------------------------------
# integration


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    order: str = "rk4"

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def to_csv(self) -> str:
        n = self.states.shape[1]
        lines = ["t," + ",".join(f"y{i + 1}" for i in range(n))]
        for t, y in zip(self.times, self.states):
            lines.append(repr(float(t)) + "," + ",".join(repr(float(v)) for v in y))
        return "\n".join(lines) + "\n"


def _check(y, R):
    if not np.all(np.isfinite(y)):
        raise NonfiniteStateError("state became nonfinite")
    nrm = math.sqrt(float(y @ y))
    if nrm > R:
        raise StateEscapeError(f"|y| = {nrm:.3g} left the validity ball of radius {R:.3g}")


def integrate(system: AffineSystem, y0, u: ControlSignal, T: float | None = None,
              step: float | None = None, substeps: int = 64, record: bool = True):
    """RK4 on every control segment.

    Each segment gets ``max(substeps, ceil(duration/step))`` equal steps so
    that the polynomial control is smooth inside every step. Returns a
    :class:`Trajectory` (or only the final state when ``record`` is false).
    """
    if u.channels != 1:
        raise ValueError("affine systems take a scalar control")
    y = np.array(y0, dtype=float).reshape(system.dim)
    if T is None:
        T = u.duration
    if T < 0:
        raise ValueError("negative horizon")
    w = u.restrict(0.0, T) if T > 0 else ControlSignal()
    f0, f1, R = system.drift, system.control_field, system.valid_radius
    _check(y, R)
    times = [0.0]
    states = [y.copy()]
    t0 = 0.0
    for seg in w.segments:
        d = seg.duration
        n = substeps if step is None else max(substeps, int(math.ceil(d / step)))
        h = d / n
        c = seg.coeffs[0]
        zero = seg.is_zero
        for i in range(n):
            s0 = i / n
            if zero:
                k1 = f0(y)
                k2 = f0(y + 0.5 * h * k1)
                k3 = f0(y + 0.5 * h * k2)
                k4 = f0(y + h * k3)
            else:
                ua = P.polyval(s0, c)
                um = P.polyval(s0 + 0.5 / n, c)
                ub = P.polyval(s0 + 1.0 / n, c)
                k1 = f0(y) + ua * f1(y)
                z = y + 0.5 * h * k1
                k2 = f0(z) + um * f1(z)
                z = y + 0.5 * h * k2
                k3 = f0(z) + um * f1(z)
                z = y + h * k3
                k4 = f0(z) + ub * f1(z)
            y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            _check(y, R)
            if record:
                times.append(t0 + (i + 1) * h)
                states.append(y.copy())
        t0 += d
    if not record:
        return y
    return Trajectory(np.array(times), np.array(states))


def flow(system: AffineSystem, y0, u: ControlSignal, T: float | None = None, **kw) -> np.ndarray:
    """Final state ``y(T; u, y0)``."""
    return integrate(system, y0, u, T, record=False, **kw)


def linearize(system: AffineSystem, h: float | None = None):
    """``(A, B)`` with ``A = Df0(0)`` by Richardson-extrapolated central differences."""
    n = system.dim
    x0 = np.zeros(n)
    if h is None:
        h = 1e-5 * max(1.0, float(np.linalg.norm(x0)))
    A = np.zeros((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0

        def d(hh):
            return (system.drift(x0 + hh * e) - system.drift(x0 - hh * e)) / (2.0 * hh)

        A[:, j] = (4.0 * d(h / 2) - d(h)) / 3.0
    B = np.asarray(system.control_field(x0), dtype=float).reshape(n, 1)
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(B))):
        raise NonfiniteStateError("nonfinite vector field evaluation")
    return A, B


# ---------------------------------------------------------------------------
# a-priori estimates as checkable predicates


def gronwall_bound(system: AffineSystem, y0, u: ControlSignal, t: float) -> float:
    """Right side of ``|y(t)| <= e^{L0 t}(|y0| + M1 ||u||_{L1(0,t)})``."""
    l1 = u.restrict(0.0, t).norm_l1() if t > 0 else 0.0
    return math.exp(system.lipschitz_drift * t) * (float(np.linalg.norm(y0)) + system.bound_ctrl * l1)


def lipschitz_bound(system: AffineSystem, y0, z0, u: ControlSignal, v: ControlSignal,
                    T: float) -> float:
    ur, vr = u.restrict(0.0, T), v.restrict(0.0, T)
    expo = system.lipschitz_drift * T + system.lipschitz_ctrl * ur.norm_l1()
    dist = float(np.linalg.norm(np.asarray(y0) - np.asarray(z0)))
    return math.exp(expo) * (dist + system.bound_ctrl * l1_distance(ur, vr))


def taylor_residual(system: AffineSystem, u: ControlSignal, T: float | None = None, **kw):
    """``(|y(T;u,0) - (int u) f1(0)|, (L0 T + L1 |u|) e^{L0 T} M1 |u|)``."""
    T = u.duration if T is None else T
    ur = u.restrict(0.0, T)
    yT = flow(system, np.zeros(system.dim), ur, T, **kw)
    lin = ur.integral()[0] * np.asarray(system.control_field(np.zeros(system.dim)))
    l1 = ur.norm_l1()
    L0, L1, M1 = system.lipschitz_drift, system.lipschitz_ctrl, system.bound_ctrl
    bound = (L0 * T + L1 * l1) * math.exp(L0 * T) * M1 * l1
    return float(np.linalg.norm(yT - lin)), float(bound)


def drift_expansion_residual(system: AffineSystem, y0, t: float, A=None, **kw) -> float:
    """``|y(t;0,y0) - y0 - tAy0|``; expected to be ``O(t^2|y0| + t|y0|^2)``."""
    if A is None:
        A, _ = linearize(system)
    y0 = np.asarray(y0, dtype=float)
    yt = flow(system, y0, ControlSignal.zero(t), t, **kw)
    return float(np.linalg.norm(yt - y0 - t * (A @ y0)))
