"""Control variations with prescribed asymptotic displacement, and the
iterative local null-control drive built from them.

A variation family of order ``k`` and direction ``xi`` maps a duration ``T`` to
a control ``u_T`` with ``||u_T||_L1 <= T`` whose endpoint from rest is
``T^k xi + O(T^(k+1))``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (BasinEscapeError, ContractionFailureError, InconclusiveOrderError,
                     OutOfBallError)
from .ode_core import AffineSystem, ControlSignal, concat_all, flow, linearize

E3_COEFF = 29.0 / 120120.0


@dataclass(frozen=True, eq=False)
class ControlVariationFamily:
    order: int
    direction: np.ndarray
    generator: Callable[[float], ControlSignal]
    name: str = ""
    continuous: bool = True
    degenerate: bool = False

    def __call__(self, T: float) -> ControlSignal:
        if T <= 0:
            return ControlSignal()
        return self.generator(float(T))


def _unit(dim: int, i: int, scale: float = 1.0) -> np.ndarray:
    e = np.zeros(dim)
    e[i] = scale
    return e


def make_variation(kind: str, sign: float = 1.0, dim: int = 3, system: AffineSystem | None = None,
                   base: ControlVariationFamily | None = None, target_order: int | None = None,
                   time_scale: float = 1.0) -> ControlVariationFamily:
    """Build a family.

    kinds: ``constant`` (``u = sign``), ``jakubczyk-e2``, ``jakubczyk-e3``,
    ``order-lift`` (``0_{T - T^a} then base(T^a)`` with ``a = target/base order``),
    ``time-scale`` (``base(time_scale * T)``, direction times ``time_scale^k``).
    """
    s = float(np.sign(sign)) if sign else 1.0
    if kind == "constant":
        if system is not None:
            xi = s * np.asarray(system.control_field(np.zeros(system.dim)), dtype=float)
        else:
            xi = _unit(dim, 0, s)
        return ControlVariationFamily(1, xi, lambda T: ControlSignal.constant(s, T),
                                      f"constant{'+' if s > 0 else '-'}")
    if kind == "jakubczyk-e2":
        return ControlVariationFamily(2, _unit(dim, 1, s / 3.0),
                                      lambda T: ControlSignal.polynomial(T, [2 * s, -4 * s]),
                                      f"e2{'+' if s > 0 else '-'}")
    if kind == "jakubczyk-e3":
        return ControlVariationFamily(4, _unit(dim, 2, s * E3_COEFF),
                                      lambda T: ControlSignal.polynomial(T, [-s, 3 * s, 6 * s, -10 * s]),
                                      f"e3{'+' if s > 0 else '-'}")
    if kind == "order-lift":
        if base is None or target_order is None or target_order < base.order:
            raise ValueError("order-lift needs a base family and target_order >= base order")
        if target_order == base.order:
            return base
        a = target_order / base.order

        def gen(T, base=base, a=a):
            tp = T ** a
            return concat_all([ControlSignal.zero(T - tp), base(tp)])

        return ControlVariationFamily(target_order, base.direction.copy(), gen,
                                      f"{base.name}^{target_order}", base.continuous, base.degenerate)
    if kind == "time-scale":
        if base is None or not 0 < time_scale <= 1:
            raise ValueError("time-scale needs a base family and 0 < time_scale <= 1")
        mu = float(time_scale)

        def gen(T, base=base, mu=mu):
            tp = mu * T
            return concat_all([ControlSignal.zero(T - tp), base(tp)]) if mu < 1 else base(T)

        return ControlVariationFamily(base.order, base.direction * mu ** base.order, gen,
                                      f"{base.name}*{mu:.4g}", base.continuous, base.degenerate)
    raise ValueError(f"unknown variation kind {kind!r}")


# ---------------------------------------------------------------------------
# order estimation


@dataclass
class OrderEstimate:
    k_hat: int
    xi_hat: np.ndarray
    residual_slope: float
    k_fit: float
    slopes: np.ndarray
    Ts: np.ndarray
    endpoints: np.ndarray

    def to_csv(self) -> str:
        n = self.endpoints.shape[1]
        lines = ["T," + ",".join(f"abs_y{i + 1}" for i in range(n)) + ",local_slope"]
        sl = np.concatenate([[math.nan], self.slopes])
        for T, y, s in zip(self.Ts, self.endpoints, sl):
            lines.append(repr(float(T)) + "," + ",".join(repr(float(abs(v))) for v in y) + f",{s!r}")
        lines.append(f"# k_hat={self.k_hat} k_fit={self.k_fit!r} residual_slope={self.residual_slope!r}")
        return "\n".join(lines) + "\n"


def default_T_grid(T0: float = 1.0) -> np.ndarray:
    return T0 * 2.0 ** -np.arange(3, 11, dtype=float)


def endpoint(system: AffineSystem, family: ControlVariationFamily, T: float, substeps: int = 1024):
    return flow(system, np.zeros(system.dim), family(T), substeps=substeps)


def estimate_order(system: AffineSystem, family: ControlVariationFamily, T_grid=None,
                   substeps: int = 1024, max_spread: float = 0.3) -> OrderEstimate:
    """Measure the order and leading coefficient of a family.

    ``log|y(T)| = k log T + c + d T`` is fit by least squares (the ``d T`` term
    absorbs the next-order contribution); ``k_hat`` is the rounded ``k``. The
    coefficient is the quadratic-in-``T`` extrapolation of ``y(T) / T^k_hat``.
    """
    Ts = np.sort(np.asarray(default_T_grid() if T_grid is None else T_grid, dtype=float))[::-1]
    if len(Ts) < 4:
        raise ValueError("need at least four durations")
    Y = np.array([endpoint(system, family, T, substeps) for T in Ts])
    nrm = np.linalg.norm(Y, axis=1)
    if np.any(nrm == 0):
        raise InconclusiveOrderError("endpoint vanished on the grid")
    lT, lY = np.log(Ts), np.log(nrm)
    slopes = np.diff(lY) / np.diff(lT)
    X = np.column_stack([lT, np.ones_like(lT), Ts])
    coef, *_ = np.linalg.lstsq(X, lY, rcond=None)
    k_fit = float(coef[0])
    k_hat = int(round(k_fit))
    tail = slopes[-3:]
    if abs(k_fit - k_hat) > max_spread or float(np.ptp(tail)) > max_spread or k_hat < 1:
        raise InconclusiveOrderError(f"order fit {k_fit:.3f} with small-T slopes {np.round(tail, 3)}")
    ratio = Y / Ts[:, None] ** k_hat
    V = np.vander(Ts, 3, increasing=True)
    xi_hat = np.linalg.lstsq(V, ratio, rcond=None)[0][0]
    resid = np.linalg.norm(Y - np.outer(Ts ** k_hat, xi_hat), axis=1)
    good = resid > 0
    rslope = float(np.polyfit(lT[good], np.log(resid[good]), 1)[0]) if good.sum() >= 2 else math.inf
    return OrderEstimate(k_hat, xi_hat, rslope, k_fit, slopes, Ts, Y)


# ---------------------------------------------------------------------------
# direction lifting


def lift_direction(system: AffineSystem, plus: ControlVariationFamily,
                   minus: ControlVariationFamily) -> ControlVariationFamily:
    """``plus_{T^2}``, zero for ``T - 2 T^2``, then ``minus_{T^2}``: order ``2k+1``, direction ``A xi``."""
    if plus.order != minus.order or not np.allclose(plus.direction, -minus.direction):
        raise ValueError("lift needs opposite directions at a common order")
    A, _ = linearize(system)
    xi = A @ plus.direction
    degenerate = bool(np.linalg.norm(xi) <= 1e-12 * max(np.linalg.norm(plus.direction), 1e-300))

    def gen(T, plus=plus, minus=minus):
        p = T * T
        return concat_all([plus(p), ControlSignal.zero(T - 2 * p), minus(p)])

    return ControlVariationFamily(2 * plus.order + 1, xi, gen, f"lift({plus.name})", True, degenerate)


# ---------------------------------------------------------------------------
# basis, decomposition and the drive


@dataclass
class TangentBasis:
    """``2n`` families for ``+r e_i`` (slot ``i``) and ``-r e_i`` (slot ``n + i``) at a common order."""

    families: list
    r: float
    order: int

    @property
    def dim(self) -> int:
        return len(self.families) // 2


def common_basis(pairs: Sequence[tuple], dim: int) -> TangentBasis:
    """Lift ``(plus, minus)`` family pairs (one per axis) to their max order and equalize magnitudes."""
    k = max(p.order for pair in pairs for p in pair)
    lifted = [[make_variation("order-lift", base=p, target_order=k) for p in pair] for pair in pairs]
    mags = [abs(float(p.direction[i])) for i, pair in enumerate(lifted) for p in pair]
    r = min(mags)
    plus, minus = [], []
    for i, (p, m) in enumerate(lifted):
        for fam, out, sgn in ((p, plus, 1), (m, minus, -1)):
            if np.sign(fam.direction[i]) != sgn or np.count_nonzero(fam.direction) != 1:
                raise ValueError(f"family {fam.name} does not point along {'+' if sgn > 0 else '-'}e{i + 1}")
            mu = (r / abs(float(fam.direction[i]))) ** (1.0 / k)
            out.append(make_variation("time-scale", base=fam, time_scale=mu))
    return TangentBasis(plus + minus, r, k)


def jakubczyk_basis(dim: int = 3) -> TangentBasis:
    pairs = [(make_variation("constant", s, dim), make_variation("constant", -s, dim)) for s in (1,)]
    pairs.append((make_variation("jakubczyk-e2", 1, dim), make_variation("jakubczyk-e2", -1, dim)))
    pairs.append((make_variation("jakubczyk-e3", 1, dim), make_variation("jakubczyk-e3", -1, dim)))
    return common_basis(pairs, dim)


def convex_decompose(basis: TangentBasis, z, enforce_ball: bool = True) -> np.ndarray:
    """Weights ``lam`` with ``sum_i lam_i^k (r e_i) = -z`` using positive/negative parts."""
    z = np.asarray(z, dtype=float)
    nz = float(np.linalg.norm(z))
    if enforce_ball and nz > basis.r * (1 + 1e-12):
        raise OutOfBallError(f"|z| = {nz:.3g} exceeds r = {basis.r:.3g}")
    w = np.concatenate([np.maximum(-z, 0.0), np.maximum(z, 0.0)]) / basis.r
    return w ** (1.0 / basis.order)


def single_move(system: AffineSystem, basis: TangentBasis, z, substeps: int = 256,
                check: bool = True, enforce_ball: bool = True):
    """Concatenate the basis controls with durations ``lam_i``: ``(T_z, u_z, y_end)``."""
    z = np.asarray(z, dtype=float)
    lam = convex_decompose(basis, z, enforce_ball)
    parts = [basis.families[i](float(l)) for i, l in enumerate(lam) if l > 0]
    u = concat_all(parts) if parts else ControlSignal()
    Tz = float(sum(lam))
    y_end = flow(system, z, u, substeps=substeps) if parts else z.copy()
    if check and np.linalg.norm(y_end) > np.linalg.norm(z):
        raise ContractionFailureError(
            f"|y_end| = {np.linalg.norm(y_end):.3g} > |z| = {np.linalg.norm(z):.3g}")
    return Tz, u, y_end


@dataclass
class MoveCalibration:
    C: float
    r_cal: float | None
    r_q: float | None
    radii: np.ndarray
    worst_ratio: np.ndarray

    def to_csv(self) -> str:
        lines = ["radius,worst_contraction"]
        lines += [f"{r!r},{w!r}" for r, w in zip(self.radii, self.worst_ratio)]
        return "\n".join(lines) + "\n"


def calibrate_move(system: AffineSystem, basis: TangentBasis, radii=None, samples: int = 20,
                   seed: int = 0, substeps: int = 256) -> MoveCalibration:
    """``C = 2 max |y_end| / |z|^(1+1/k)``; ``r_cal`` (``r_q``) is the largest radius with worst contraction below 1/2 (``2^-k``)."""
    radii = np.asarray(radii if radii is not None else 10.0 ** -np.arange(3, 12, 2, dtype=float))
    rng = np.random.default_rng(seed)
    k = basis.order
    C = 0.0
    worst = []
    for rad in radii:
        wr = 0.0
        for _ in range(samples):
            z = rng.standard_normal(basis.dim)
            z *= rad / np.linalg.norm(z)
            _, _, ye = single_move(system, basis, z, substeps, check=False, enforce_ball=False)
            ny = float(np.linalg.norm(ye))
            wr = max(wr, ny / rad)
            C = max(C, ny / rad ** (1 + 1.0 / k))
        worst.append(wr)
    worst = np.array(worst)
    ok_half = radii[worst < 0.5]
    ok_q = radii[worst <= 2.0 ** -k]
    return MoveCalibration(2 * C, float(ok_half.max()) if ok_half.size else None,
                           float(ok_q.max()) if ok_q.size else None, radii, worst)


@dataclass
class DriveResult:
    control: ControlSignal
    total_time: float
    norms: list
    contractions: list
    terminal: float

    @property
    def steps(self) -> int:
        return len(self.contractions)


def stlnc_drive(system: AffineSystem, basis: TangentBasis, y0, tol: float,
                basin: float | None = None, max_steps: int = 60, substeps: int = 256,
                require_factor: bool = True, enforce_ball: bool = True) -> DriveResult:
    """Repeat :func:`single_move` until ``|y| <= tol``; each step must contract by ``2^-k``.

    The concatenated control is re-propagated from ``y0`` for the terminal value.
    """
    y0 = np.asarray(y0, dtype=float)
    n0 = float(np.linalg.norm(y0))
    if basin is not None and n0 > basin:
        raise BasinEscapeError(f"|y0| = {n0:.3g} outside the calibrated basin {basin:.3g}")
    q = 2.0 ** -basis.order
    y = y0.copy()
    parts, norms, factors = [], [n0], []
    total = 0.0
    for _ in range(max_steps):
        if norms[-1] <= tol:
            break
        Tz, u, y1 = single_move(system, basis, y, substeps, check=require_factor,
                                enforce_ball=enforce_ball)
        n1 = float(np.linalg.norm(y1))
        factors.append(n1 / norms[-1])
        if require_factor and n1 > q * norms[-1]:
            raise ContractionFailureError(
                f"step {len(factors) - 1}: contraction {factors[-1]:.3g} exceeds 2^-{basis.order}")
        parts.append(u)
        total += Tz
        norms.append(n1)
        y = y1
    else:
        if norms[-1] > tol:
            raise BasinEscapeError("step budget exhausted before reaching tol")
    u = concat_all(parts) if parts else ControlSignal()
    yT = flow(system, y0, u, substeps=substeps) if parts else y0
    return DriveResult(u, total, norms, factors, float(np.linalg.norm(yT)))
