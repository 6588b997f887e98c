"""Fundamental forms, curvature integrals and the standing hypotheses."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .quadrature import (QuadResult, integrate_1d, integrate_surface, integrate_tail,
                         surface_breakpoints)
from .surfaces import GraphProfile, SurfaceModel

_GOLDEN = 0.5 * (math.sqrt(5.0) - 1.0)


class HypothesisError(ValueError):
    """A surface violates a standing hypothesis (flatness, boundedness, ...)."""


@dataclass(frozen=True)
class FundamentalData:
    g: np.ndarray        # first fundamental form in the native (u, theta) chart
    shape: np.ndarray    # diag(k1, k2) in the principal frame
    H: np.ndarray
    kappa: np.ndarray
    normB: np.ndarray


def eval_fundamental_forms(surface: SurfaceModel, param) -> FundamentalData:
    """Fundamental forms at native parameter(s): ``rho`` for graphs, ``s`` otherwise."""
    u = np.asarray(param, dtype=float)
    if np.any(u < 0):
        raise ValueError("parameter outside the model's range [0, inf)")
    fr = surface.frame_native(u)
    g = np.zeros(u.shape + (2, 2))
    if isinstance(surface.profile, GraphProfile):
        g[..., 0, 0] = surface.profile.sigma(u) ** 2
    else:
        g[..., 0, 0] = 1.0
    g[..., 1, 1] = fr.r**2
    shape = np.zeros(u.shape + (2, 2))
    shape[..., 0, 0] = fr.k1
    shape[..., 1, 1] = fr.k2
    return FundamentalData(g=g, shape=shape, H=fr.H, kappa=fr.kappa, normB=fr.normB)


def sample_radii(surface: SurfaceModel, n: int = 4000) -> np.ndarray:
    s_max = surface.s_max
    lin = np.linspace(0.0, min(s_max, 20.0), n // 2)
    geo = np.geomspace(1e-3, s_max, n // 2)
    pts = np.concatenate([lin, geo, surface.profile.kinks])
    return np.unique(pts[pts <= s_max])


def _golden_max(f, lo, hi, tol=1e-12):
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol * max(1.0, abs(a) + abs(b)):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


@dataclass(frozen=True)
class SupNorm:
    value: float
    s_at: float
    param_at: float


def sup_norm_B(surface: SurfaceModel) -> SupNorm:
    """Supremum of the second fundamental form's norm, with its location."""
    s = sample_radii(surface)
    nb = surface.frame(s).normB
    i = int(np.argmax(nb))
    if nb[i] == 0.0:
        return SupNorm(0.0, 0.0, 0.0)
    if i == len(s) - 1 and nb[-1] > nb[-2] * (1 + 1e-9):
        raise HypothesisError(f"|B| still increasing at the truncation radius {s[-1]:g}; "
                              "supremum appears unbounded")
    lo, hi = s[max(i - 1, 0)], s[min(i + 1, len(s) - 1)]

    def f(x):
        return float(surface.frame(np.array([x])).normB[0])

    x, v = _golden_max(f, lo, hi)
    if v < nb[i]:
        x, v = float(s[i]), float(nb[i])
    return SupNorm(float(v), float(x), float(surface.s_to_native(np.array([x]))[0]))


@dataclass(frozen=True)
class FlatnessReport:
    flat: bool
    inconclusive: bool
    radius: float | None         # beyond this sampled radius |B| < threshold
    decay_rate: float | None     # p in |B| ~ s^{-p}, intrinsic radius
    decay_rate_param: float | None   # same against the native parameter
    tail_value: float


def check_asymptotic_flatness(surface: SurfaceModel, tail_threshold: float) -> FlatnessReport:
    if tail_threshold <= 0:
        raise ValueError("tail_threshold must be positive")
    s = sample_radii(surface)
    fr = surface.frame(s)
    nb = fr.normB
    if np.all(nb == 0.0):
        return FlatnessReport(True, False, 0.0, None, None, 0.0)
    # decay fit over the last decade of the sampled range
    sel = (s >= s[-1] / 10.0) & (nb > 0)
    p = pp = None
    if sel.sum() >= 5:
        p = -float(np.polyfit(np.log(s[sel]), np.log(nb[sel]), 1)[0])
        u = fr.u[sel]
        if np.all(u > 0):
            pp = -float(np.polyfit(np.log(u), np.log(nb[sel]), 1)[0])
    above = np.nonzero(nb >= tail_threshold)[0]
    decaying = p is not None and p > 1e-3
    if above.size == 0:
        return FlatnessReport(decaying or p is None, False, 0.0, p, pp, float(nb[-1]))
    last = above[-1]
    if last == len(s) - 1:
        # still above threshold at the truncation radius
        return FlatnessReport(False, decaying, None, p, pp, float(nb[-1]))
    return FlatnessReport(decaying, False, float(s[last + 1]), p, pp, float(nb[-1]))


@dataclass(frozen=True)
class CurvatureTotal:
    total: float          # integral of kappa
    total_abs: float      # integral of |kappa|
    tail: float           # contribution of kappa beyond s_max (closed-form model)
    tail_abs: float
    error: float
    quadrature_ok: bool   # the improper integrals were evaluated to tolerance
    converged: bool       # quadrature_ok and tail of |kappa| <= 1% of the total


def _sign_changes(surface: SurfaceModel) -> list[float]:
    """Zeros of kappa on [0, s_max]; kinks of |kappa| there slow the panel rule."""
    s = sample_radii(surface)
    k = surface.frame(s).kappa
    roots = []
    for i in np.nonzero(k[:-1] * k[1:] < 0)[0]:
        roots.append(optimize.brentq(lambda x: float(surface.frame(np.array([x])).kappa[0]),
                                     s[i], s[i + 1], xtol=1e-14))
    return roots


def _curvature_integral(surface: SurfaceModel, fn) -> tuple[QuadResult, QuadResult]:
    bps = np.unique(np.concatenate([surface_breakpoints(surface, 0.0, surface.s_max),
                                    _sign_changes(surface)]))
    body = integrate_surface(surface, fn, breakpoints=bps, rtol=1e-11)

    def dens(s):
        fr = surface.frame(s)
        return fn(fr) * 2.0 * np.pi * surface.sheets * fr.r

    tail = integrate_tail(dens, surface.s_max, rtol=1e-10, atol=1e-15)
    return body, tail


def total_gauss_curvature(surface: SurfaceModel) -> CurvatureTotal:
    b, t = _curvature_integral(surface, lambda fr: fr.kappa)
    ba, ta = _curvature_integral(surface, lambda fr: np.abs(fr.kappa))
    total_abs = ba.value + ta.value
    ok = b.converged and t.converged and ba.converged and ta.converged
    small_tail = abs(ta.value) <= 0.01 * max(abs(total_abs), 1e-300) or total_abs == 0.0
    return CurvatureTotal(
        total=b.value + t.value, total_abs=total_abs, tail=t.value, tail_abs=ta.value,
        error=b.error + t.error, quadrature_ok=ok, converged=ok and small_tail)


@dataclass(frozen=True)
class KappaSplit:
    positive: float
    negative: float
    converged_positive: bool
    converged_negative: bool


def kappa_split(surface: SurfaceModel) -> KappaSplit:
    bp, tp = _curvature_integral(surface, lambda fr: np.maximum(fr.kappa, 0.0))
    bn, tn = _curvature_integral(surface, lambda fr: np.maximum(-fr.kappa, 0.0))
    return KappaSplit(bp.value + tp.value, bn.value + tn.value,
                      bp.converged and tp.converged, bn.converged and tn.converged)


@dataclass(frozen=True)
class LambdaEstimate:
    value: float
    radii: np.ndarray
    ratios: np.ndarray
    converged: bool


def _area_ratio(surface: SurfaceModel, log_R: float) -> float:
    """vol(B(R)) / (pi R^2) at ``R = exp(log_R)`` without forming R."""
    s0 = 1.0
    inner = integrate_1d(lambda s: surface.frame(s).r, [0.0, 0.25, 0.5, s0], rtol=1e-13).value
    if log_R <= 0.0:
        R = math.exp(log_R)
        val = integrate_1d(lambda s: surface.frame(s).r, [0.0, R], rtol=1e-13).value
        return 2.0 * surface.sheets * val / R**2
    edges = np.linspace(0.0, log_R, max(2, int(4 * log_R) + 1))

    def f(y):
        return surface.r_over_s(y) * np.exp(2.0 * (y - log_R))

    outer = integrate_1d(f, edges, rtol=1e-13).value
    return 2.0 * surface.sheets * (inner * math.exp(-2.0 * log_R) + outer)


def volume_growth_lambda(surface: SurfaceModel, n_radii: int = 14) -> LambdaEstimate:
    """Isoperimetric constant (summed over ends) by Aitken extrapolation of
    ``vol(B(R)) / (pi R^2)`` along ``R = s_max * 4^k``."""
    logs = math.log(surface.s_max) + np.arange(n_radii) * math.log(4.0)
    q = np.array([_area_ratio(surface, y) for y in logs])
    acc = _aitken(q)
    if acc.size >= 2:
        value = float(acc[-1])
        converged = abs(acc[-1] - acc[-2]) <= 1e-4 * max(1.0, abs(acc[-1]))
    else:
        value, converged = float(q[-1]), False
    return LambdaEstimate(value, np.exp(logs), q, converged)


def _aitken(q: np.ndarray) -> np.ndarray:
    out = []
    for k in range(2, len(q)):
        d1, d2 = q[k - 1] - q[k - 2], q[k] - q[k - 1]
        den = d2 - d1
        if den == 0.0 or abs(d2) < 1e-15 * max(1.0, abs(q[k])):
            out.append(q[k])
        else:
            out.append(q[k] - d2 * d2 / den)
    return np.asarray(out)


@dataclass(frozen=True)
class HartmanCheck:
    residual: float
    total_curvature: float
    isoperimetric_sum: float
    euler_characteristic: int


def hartman_identity_residual(surface: SurfaceModel) -> HartmanCheck:
    tot = total_gauss_curvature(surface)
    if not tot.quadrature_ok:
        raise HypothesisError("total |kappa| did not converge; Hartman identity undefined")
    lam = volume_growth_lambda(surface)
    chi_e = surface.profile.euler_characteristic
    rhs = 2.0 * math.pi * (chi_e - lam.value)
    return HartmanCheck(abs(tot.total - rhs), tot.total, lam.value, chi_e)


@dataclass
class HypothesisReport:
    items: dict[str, bool]
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(self.items.values())

    def failures(self) -> list[str]:
        return [k for k, v in self.items.items() if not v]


def check_hypotheses(surface: SurfaceModel) -> HypothesisReport:
    s = sample_radii(surface)
    nb = surface.frame(s).normB
    bmax = float(nb.max())
    notes = ["layer embeddedness (no self-overlap) is not checked; only immersion is"]
    items = {
        "c2_smooth": bool(surface.profile.c2_smooth),
        # every model is defined for all s >= 0 with r unbounded
        "complete_noncompact": True,
        "not_totally_geodesic": bmax > 1e-12,
    }
    if bmax > 0:
        flat = check_asymptotic_flatness(surface, 0.1 * bmax)
        items["asymptotically_flat"] = flat.flat
        if flat.inconclusive:
            notes.append("asymptotic flatness inconclusive: s_max too small")
    else:
        items["asymptotically_flat"] = True
    if not surface.profile.c2_smooth:
        notes.append("profile is only C^{1,1}")
    return HypothesisReport(items, notes)


def is_minimal(surface: SurfaceModel, tol: float = 1e-10) -> bool:
    s = sample_radii(surface)
    fr = surface.frame(s)
    scale = max(float(fr.normB.max()), 1e-300)
    return bool(np.all(np.abs(fr.H) <= tol * scale))
