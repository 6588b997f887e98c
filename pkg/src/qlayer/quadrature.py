"""Transverse moments in closed form and composite Gauss-Legendre quadrature.

Surface integrals of radial integrands reduce to one-dimensional integrals in
the intrinsic radius, ``dSigma = 2 pi r(s) ds`` per sheet.  Layer integrals use
``dOmega = (1 - H t + kappa t^2) dSigma dt``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .surfaces import SurfaceModel

PI2 = math.pi**2


@lru_cache(maxsize=64)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


# --------------------------------------------------------------------------
# transverse profile moments
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ChiIntegrals:
    """Moments of ``chi(t) = cos(pi t / 2a)`` over ``[-a, a]``.

    Naming: ``chi2_t2`` is the integral of chi^2 t^2, ``dchi2_t4`` of chi'^2 t^4,
    ``dchi_chi_t3`` of chi' chi t^3.
    """

    a: float
    chi2: float
    chi2_t2: float
    dchi2_t2: float
    chi2_t4: float
    dchi2_t4: float
    dchi_chi_t: float
    dchi_chi_t3: float
    dchi2: float

    @property
    def threshold(self) -> float:
        return PI2 / (4.0 * self.a**2)

    def moment(self, kind: str, n: int) -> float:
        """Integral of ``chi^2 t^n`` (kind "cc"), ``chi'^2 t^n`` ("dd") or
        ``chi chi' t^n`` ("cd") for ``0 <= n <= 4``; parity zeros included."""
        if kind in ("cc", "dd") and n % 2:
            return 0.0
        if kind == "cd" and n % 2 == 0:
            return 0.0
        table = {
            ("cc", 0): self.chi2, ("cc", 2): self.chi2_t2, ("cc", 4): self.chi2_t4,
            ("dd", 0): self.dchi2, ("dd", 2): self.dchi2_t2, ("dd", 4): self.dchi2_t4,
            ("cd", 1): self.dchi_chi_t, ("cd", 3): self.dchi_chi_t3,
        }
        try:
            return table[(kind, n)]
        except KeyError:
            raise ValueError(f"moment ({kind}, {n}) not tabulated") from None


def chi_integrals_closed_form(a: float) -> ChiIntegrals:
    if a <= 0:
        raise ValueError("half-width must be positive")
    chi2_t2 = a**3 * (PI2 - 6.0) / (3.0 * PI2)
    return ChiIntegrals(
        a=a,
        chi2=a,
        chi2_t2=chi2_t2,
        dchi2_t2=a * (6.0 + PI2) / 12.0,
        chi2_t4=a**5 * (120.0 - 20.0 * PI2 + PI2**2) / (5.0 * PI2**2),
        dchi2_t4=a**3 * (20.0 * PI2 - 120.0 + PI2**2) / (20.0 * PI2),
        dchi_chi_t=-0.5 * a,
        dchi_chi_t3=-1.5 * chi2_t2,
        dchi2=PI2 / (4.0 * a),
    )


def chi(t, a):
    return np.cos(0.5 * np.pi * np.asarray(t) / a)


def dchi(t, a):
    return -0.5 * np.pi / a * np.sin(0.5 * np.pi * np.asarray(t) / a)


# --------------------------------------------------------------------------
# composite Gauss-Legendre with panel doubling
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RadialGrid:
    """Composite Gauss-Legendre rule on a union of panels."""

    nodes: np.ndarray
    weights: np.ndarray
    edges: np.ndarray
    order: int

    @property
    def n_panels(self) -> int:
        return len(self.edges) - 1


def make_grid(breakpoints, panels_per_segment: int = 1, order: int = 12) -> RadialGrid:
    bp = np.unique(np.asarray(breakpoints, dtype=float))
    if bp.size < 2:
        raise ValueError("need at least two distinct breakpoints")
    k = panels_per_segment
    frac = np.arange(k) / k
    edges = np.concatenate([(bp[:-1, None] + np.diff(bp)[:, None] * frac[None, :]).ravel(),
                            bp[-1:]])
    x, w = gauss_legendre(order)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * np.diff(edges)
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return RadialGrid(nodes, weights, edges, order)


@dataclass(frozen=True)
class QuadResult:
    value: float | np.ndarray
    error: float | np.ndarray
    converged: bool
    n_panels: int


def adaptive(rule: Callable[[RadialGrid], np.ndarray], breakpoints, *, rtol=1e-9,
             atol=1e-14, order=12, start_panels=1, max_doublings=12, joint=False,
             max_nodes=400_000) -> QuadResult:
    """Double the panel count until successive estimates agree.

    ``rule`` maps a grid to a scalar or vector estimate; the error reported is
    the change between the last two levels, which over-estimates the error of
    the finer one for smooth integrands.  With ``joint`` the relative tolerance
    of a vector estimate is taken against its largest component, so entries
    that vanish by cancellation do not stall the refinement.
    """
    k = start_panels
    grid = make_grid(breakpoints, k, order)
    prev = np.asarray(rule(grid), dtype=float)
    err = np.full_like(prev, np.inf)
    n_panels = grid.n_panels
    for _ in range(max_doublings):
        k *= 2
        grid = make_grid(breakpoints, k, order)
        if grid.nodes.size > max_nodes:
            break
        cur = np.asarray(rule(grid), dtype=float)
        err = np.abs(cur - prev)
        scale = np.maximum(np.abs(cur), np.abs(prev))
        if joint:
            scale = np.full_like(scale, scale.max())
        prev, n_panels = cur, grid.n_panels
        if np.all(err <= np.maximum(rtol * scale, atol)):
            return QuadResult(_scalar(cur), _scalar(err), True, n_panels)
    return QuadResult(_scalar(prev), _scalar(err), False, n_panels)


def _scalar(x):
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x


def integrate_1d(f: Callable, breakpoints, **kw) -> QuadResult:
    return adaptive(lambda g: np.dot(g.weights, f(g.nodes)), breakpoints, **kw)


def integrate_tail(f: Callable, s0: float, **kw) -> QuadResult:
    """Integral of ``f`` over ``[s0, inf)`` via ``s = s0 / v^2``.

    Finite (and quickly convergent) for integrands decaying at least like
    ``s^{-3/2}``; slower decay shows up as non-convergence.
    """
    if s0 <= 0:
        raise ValueError("tail start must be positive")

    def mapped(v):
        s = s0 / (v * v)
        return f(s) * 2.0 * s0 / v**3

    kw.setdefault("start_panels", 4)
    return integrate_1d(mapped, [0.0, 1.0], **kw)


# --------------------------------------------------------------------------
# surface and layer integrals
# --------------------------------------------------------------------------

def surface_breakpoints(surface: SurfaceModel, s_lo: float, s_hi: float, extra=()) -> np.ndarray:
    """Panel breakpoints: geometric spacing from the pole outwards plus ``extra``."""
    pts = [s_lo, s_hi, *extra, *surface.profile.kinks]
    if s_hi > 1.0:
        pts.extend(np.geomspace(max(s_lo, 0.25), s_hi, max(2, int(4 * math.log2(s_hi / max(s_lo, 0.25))) + 1)))
    pts = np.asarray(pts, dtype=float)
    pts = pts[(pts >= s_lo) & (pts <= s_hi)]
    return np.unique(pts)


def integrate_surface(surface: SurfaceModel, integrand: Callable, *, s_range=None,
                      breakpoints=None, to_infinity=False, rtol=1e-9, atol=1e-14,
                      order=12) -> QuadResult:
    """Integral of a radial integrand over ``{s_lo <= dist <= s_hi}``.

    ``integrand`` receives a :class:`~qlayer.surfaces.Frame` and returns an array
    of the same shape.  The angular direction is integrated exactly.  With
    ``to_infinity`` the closed-form model is integrated past ``s_hi`` as well.
    """
    lo, hi = s_range if s_range is not None else (0.0, surface.s_max)
    if breakpoints is None:
        breakpoints = surface_breakpoints(surface, lo, hi)

    def f(s):
        fr = surface.frame(s)
        return integrand(fr) * 2.0 * np.pi * surface.sheets * fr.r

    body = integrate_1d(f, breakpoints, rtol=rtol, atol=atol, order=order)
    if not to_infinity:
        return body
    tail = integrate_tail(f, hi, rtol=rtol, atol=atol, order=order)
    return QuadResult(body.value + tail.value, body.error + tail.error,
                      body.converged and tail.converged, body.n_panels + tail.n_panels)


def integrate_layer(metric, integrand: Callable, *, s_range=None, breakpoints=None,
                    rtol=1e-9, atol=1e-14, order=12, t_order=24) -> QuadResult:
    """Integral over the layer region above ``{s_lo <= dist <= s_hi}``.

    ``metric`` is a :class:`~qlayer.layer.LayerMetric`; ``integrand(frame, t)``
    is evaluated on the tensor grid (frame arrays have shape ``(n, 1)``, ``t``
    shape ``(1, m)``).  The t-direction rule is doubled together with the
    s-panels.
    """
    surface = metric.surface
    a = metric.a
    lo, hi = s_range if s_range is not None else (0.0, surface.s_max)
    if breakpoints is None:
        breakpoints = surface_breakpoints(surface, lo, hi)
    state = {"t_order": t_order}

    def rule(grid):
        tx, tw = gauss_legendre(state["t_order"])
        t = a * tx[None, :]
        fr = surface.frame(grid.nodes)
        fr2 = _column(fr)
        vol = metric.volume_factor_frame(fr2, t)
        vals = integrand(fr2, t) * vol
        inner = (vals * (a * tw)[None, :]).sum(axis=1)
        state["t_order"] = min(2 * state["t_order"], 256)
        return np.dot(grid.weights, inner * 2.0 * np.pi * surface.sheets * fr.r)

    return adaptive(rule, breakpoints, rtol=rtol, atol=atol, order=order)


def _column(fr):
    from .surfaces import Frame

    return Frame(**{k: getattr(fr, k)[:, None] for k in
                    ("s", "u", "r", "dr", "k1", "k2", "dk1", "dk2")})
