"""Rotationally symmetric surface models.

Every model is a surface of revolution about the z-axis, described either by an
arclength-parametrized meridian ``(r(s), z(s))`` or by a radial height function
``z = f(rho)``.  Downstream code works in the intrinsic radius ``s`` (meridian
arclength from the pole, or from the neck circle for two-ended models) and asks
a model for a :class:`Frame` of geometric quantities at an array of radii.

Sign convention: the unit normal is ``N = (-z', r')`` in the meridian plane, so a
principal curvature is positive when ``N`` points towards its centre of
curvature and the layer metric carries factors ``(1 - k t)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Callable

import numpy as np
from scipy.interpolate import CubicHermiteSpline

# Radius up to which geometry is evaluated directly; beyond it only the
# asymptotic ratio r(s)/s is used (log-space integrals of huge cutoffs).
S_DIRECT = 1.0e12
_POLE_EPS = 1.0e-6


class SurfaceKind(str, Enum):
    ROTATIONAL = "rotational"
    RADIAL_GRAPH = "radial_graph"
    PLANE = "plane"


@dataclass(frozen=True)
class Frame:
    """Pointwise geometry at intrinsic radii ``s`` (all arrays share a shape)."""

    s: np.ndarray
    u: np.ndarray        # native parameter: s for meridians, rho for graphs
    r: np.ndarray        # distance to the axis
    dr: np.ndarray       # dr/ds
    k1: np.ndarray       # meridian principal curvature
    k2: np.ndarray       # parallel principal curvature
    dk1: np.ndarray      # d k1 / ds
    dk2: np.ndarray      # d k2 / ds

    @property
    def H(self) -> np.ndarray:
        return self.k1 + self.k2

    @property
    def kappa(self) -> np.ndarray:
        return self.k1 * self.k2

    @property
    def normB(self) -> np.ndarray:
        return np.hypot(self.k1, self.k2)

    @property
    def dH(self) -> np.ndarray:
        return self.dk1 + self.dk2


# --------------------------------------------------------------------------
# profiles
# --------------------------------------------------------------------------

class Profile:
    """Base class: subclasses implement :meth:`_frame` and the tail ratio."""

    mirrored = False          # two congruent sheets glued at s = 0 (catenoid)
    euler_characteristic = 1
    n_ends = 1
    c2_smooth = True
    pole = True               # r(0) == 0
    kinks: tuple = ()         # radii where the profile is only C^1

    def frame(self, s) -> Frame:
        s = np.asarray(s, dtype=float)
        if np.any(s < 0):
            raise ValueError("intrinsic radius must be non-negative")
        return self._frame(s)

    def _frame(self, s: np.ndarray) -> Frame:
        raise NotImplementedError

    def native_to_s(self, u):
        raise NotImplementedError

    def r_over_s_asymptotic(self, y: np.ndarray) -> np.ndarray:
        """r(s)/s at ``s = exp(y)`` for ``s`` beyond :data:`S_DIRECT`."""
        raise NotImplementedError

    def r_over_s(self, y) -> np.ndarray:
        """r(s)/s at ``s = exp(y)``, finite for arbitrarily large ``y``."""
        y = np.asarray(y, dtype=float)
        out = np.empty_like(y)
        near = y <= math.log(S_DIRECT)
        if np.any(near):
            s = np.exp(y[near])
            out[near] = self.frame(s).r / s
        if np.any(~near):
            out[~near] = self.r_over_s_asymptotic(y[~near])
        return out

    @property
    def sheets(self) -> int:
        return 2 if self.mirrored else 1


class MeridianProfile(Profile):
    """Arclength-parametrized meridian given by closed-form derivatives.

    ``derivs(s)`` returns ``(r, r1, r2, r3, z1, z2, z3)`` where the digit is the
    order of the s-derivative.
    """

    def __init__(self, derivs: Callable, tail_ratio: Callable | None = None, *,
                 mirrored=False, euler_characteristic=1, n_ends=1, c2_smooth=True):
        self._derivs = derivs
        self._tail_ratio = tail_ratio
        self.mirrored = mirrored
        self.euler_characteristic = euler_characteristic
        self.n_ends = n_ends
        self.c2_smooth = c2_smooth
        r0 = float(np.asarray(derivs(np.array([0.0]))[0])[0])
        self.pole = r0 == 0.0
        self._tail_frozen = None

    def derivatives(self, s):
        return tuple(np.broadcast_to(np.asarray(v, dtype=float), np.shape(s))
                     for v in self._derivs(s))

    def _frame(self, s):
        r, r1, r2, r3, z1, z2, z3 = self.derivatives(s)
        k1 = r1 * z2 - z1 * r2
        dk1 = r1 * z3 - z1 * r3
        at_pole = r < _POLE_EPS
        rsafe = np.where(at_pole, 1.0, r)
        # at the pole z'/r -> z''(0)/r'(0) and k2 is even in s
        k2 = np.where(at_pole, z2 / np.where(r1 == 0, 1.0, r1), z1 / rsafe)
        dk2 = np.where(at_pole, 0.0, (z2 - k2 * r1) / rsafe)
        return Frame(s=s, u=s, r=r, dr=r1, k1=k1, k2=k2, dk1=dk1, dk2=dk2)

    def native_to_s(self, u):
        return np.asarray(u, dtype=float)

    def s_to_native(self, s):
        return np.asarray(s, dtype=float)

    def r_over_s_asymptotic(self, y):
        if self._tail_ratio is not None:
            return np.asarray(self._tail_ratio(y), dtype=float) * np.ones_like(y)
        if self._tail_frozen is None:
            self._tail_frozen = float(self.frame(np.array([S_DIRECT])).r[0] / S_DIRECT)
        return np.full_like(y, self._tail_frozen)


class GraphProfile(Profile):
    """Radial graph ``z = f(rho)`` with closed-form derivatives.

    ``fprimes(rho)`` returns ``(f', f'', f''')``.  If ``arclength`` is not given
    the map ``rho -> s`` is tabulated once with composite Gauss-Legendre and
    interpolated by cubic Hermite splines (exact slopes).
    """

    _TABLE_RHO_MAX = 1.0e13

    def __init__(self, fprimes: Callable, *, arclength: Callable | None = None,
                 tail_ratio: Callable | None = None, rho_guess: Callable | None = None):
        self._fprimes = fprimes
        self._arclength = arclength
        self._tail_ratio = tail_ratio
        self._rho_guess = rho_guess
        self.pole = True
        self._tail_frozen = None

    def sigma(self, rho):
        f1 = np.asarray(self._fprimes(rho)[0], dtype=float)
        return np.sqrt(1.0 + f1 * f1)

    @cached_property
    def _table(self):
        # nodes: uniform on [0, 2], geometric above; Gauss-Legendre per cell
        uni = np.linspace(0.0, 2.0, 401)
        geo = np.geomspace(2.0, self._TABLE_RHO_MAX, 4000)[1:]
        nodes = np.concatenate([uni, geo])
        x, w = np.polynomial.legendre.leggauss(16)
        a, b = nodes[:-1], nodes[1:]
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        pts = mid[:, None] + half[:, None] * x[None, :]
        cell = (self.sigma(pts) * w[None, :]).sum(axis=1) * half
        svals = np.concatenate([[0.0], np.cumsum(cell)])
        spline = CubicHermiteSpline(nodes, svals, self.sigma(nodes))
        return nodes, svals, spline

    def native_to_s(self, rho):
        rho = np.asarray(rho, dtype=float)
        if self._arclength is not None:
            return np.asarray(self._arclength(rho), dtype=float) * np.ones_like(rho)
        nodes, svals, spline = self._table
        inside = rho <= nodes[-1]
        out = np.empty_like(rho)
        out[inside] = spline(rho[inside])
        if np.any(~inside):
            out[~inside] = svals[-1] + self.sigma(nodes[-1]) * (rho[~inside] - nodes[-1])
        return out

    def _dsdrho(self, rho):
        if self._arclength is not None:
            return self.sigma(rho)
        nodes, _, spline = self._table
        inside = rho <= nodes[-1]
        return np.where(inside, spline(np.minimum(rho, nodes[-1]), 1),
                        self.sigma(nodes[-1]))

    def s_to_native(self, s):
        s = np.asarray(s, dtype=float)
        if self._rho_guess is not None:
            rho = np.asarray(self._rho_guess(s), dtype=float) * np.ones_like(s)
        elif self._arclength is None:
            nodes, svals, _ = self._table
            rho = np.interp(s, svals, nodes)
        else:
            rho = s.copy()
        for _ in range(60):
            step = (self.native_to_s(rho) - s) / self._dsdrho(rho)
            rho = np.maximum(rho - step, 0.5 * rho)
            if np.all(np.abs(step) <= 1e-15 * np.maximum(1.0, rho)):
                break
        return rho

    def frame_native(self, rho):
        rho = np.asarray(rho, dtype=float)
        f1, f2, f3 = (np.asarray(v, dtype=float) * np.ones_like(rho)
                      for v in self._fprimes(rho))
        sig = np.sqrt(1.0 + f1 * f1)
        k1 = f2 / sig**3
        dk1 = (f3 / sig**3 - 3.0 * f2 * f2 * f1 / sig**5) / sig
        at_pole = rho < _POLE_EPS
        rs = np.where(at_pole, 1.0, rho)
        k2 = np.where(at_pole, f2, f1 / (rs * sig))
        dk2_drho = f2 / (rs * sig) - f1 / (rs * rs * sig) - f1 * f1 * f2 / (rs * sig**3)
        dk2 = np.where(at_pole, 0.0, dk2_drho / sig)
        return Frame(s=self.native_to_s(rho), u=rho, r=rho, dr=1.0 / sig,
                     k1=k1, k2=k2, dk1=dk1, dk2=dk2)

    def _frame(self, s):
        fr = self.frame_native(self.s_to_native(s))
        return Frame(s=s, u=fr.u, r=fr.r, dr=fr.dr, k1=fr.k1, k2=fr.k2,
                     dk1=fr.dk1, dk2=fr.dk2)

    def r_over_s_asymptotic(self, y):
        if self._tail_ratio is not None:
            return np.asarray(self._tail_ratio(y), dtype=float) * np.ones_like(y)
        if self._tail_frozen is None:
            self._tail_frozen = float(self.frame(np.array([S_DIRECT])).r[0] / S_DIRECT)
        return np.full_like(y, self._tail_frozen)


class AxisGraphProfile(GraphProfile):
    """Two-ended meridian ``r = g(z)``, ``z >= 0``, mirrored in ``z -> -z``.

    ``gprimes(z)`` returns the first three derivatives of ``g`` and ``g0(z)``
    returns ``g``; the native parameter is the height ``z`` and ``s`` is the
    arclength from the neck circle ``z = 0`` (``g'(0) = 0`` is required).
    """

    def __init__(self, g0: Callable, gprimes: Callable, *, tail_ratio: Callable | None = None):
        super().__init__(gprimes, tail_ratio=tail_ratio)
        self._g0 = g0
        self.pole = False
        self.mirrored = True
        self.euler_characteristic = 0
        self.n_ends = 2

    def frame_native(self, z):
        z = np.asarray(z, dtype=float)
        g = np.asarray(self._g0(z), dtype=float) * np.ones_like(z)
        g1, g2, g3 = (np.asarray(v, dtype=float) * np.ones_like(z) for v in self._fprimes(z))
        sig = np.sqrt(1.0 + g1 * g1)
        # meridian (g(z), z) with normal (-z_s, r_s) = (-1, g') / sigma
        k1 = -g2 / sig**3
        dk1 = (-g3 / sig**3 + 3.0 * g1 * g2 * g2 / sig**5) / sig
        k2 = 1.0 / (sig * g)
        dk2 = (-g1 * g2 / (sig**3 * g) - g1 / (sig * g * g)) / sig
        return Frame(s=self.native_to_s(z), u=z, r=g, dr=g1 / sig,
                     k1=k1, k2=k2, dk1=dk1, dk2=dk2)


# --------------------------------------------------------------------------
# the model record
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SurfaceModel:
    """A complete, non-compact surface of revolution.

    ``orientation`` is +1 or -1 and multiplies both principal curvatures; the
    registry picks it so that the mean curvature integrates to a non-negative
    value over ``[0, s_max]``.
    """

    kind: SurfaceKind
    profile: Profile = field(repr=False, compare=False)
    s_max: float
    label: str
    params: dict = field(default_factory=dict, compare=False)
    orientation: int = 1

    def frame(self, s) -> Frame:
        fr = self.profile.frame(s)
        if self.orientation == 1:
            return fr
        o = float(self.orientation)
        return Frame(s=fr.s, u=fr.u, r=fr.r, dr=fr.dr, k1=o * fr.k1, k2=o * fr.k2,
                     dk1=o * fr.dk1, dk2=o * fr.dk2)

    def frame_native(self, u) -> Frame:
        if isinstance(self.profile, GraphProfile):
            fr = self.profile.frame_native(u)
            o = float(self.orientation)
            return Frame(s=fr.s, u=fr.u, r=fr.r, dr=fr.dr, k1=o * fr.k1, k2=o * fr.k2,
                         dk1=o * fr.dk1, dk2=o * fr.dk2)
        return self.frame(u)

    def native_to_s(self, u):
        return self.profile.native_to_s(u)

    def s_to_native(self, s):
        return self.profile.s_to_native(s)

    @property
    def sheets(self) -> int:
        return self.profile.sheets

    @property
    def mirrored(self) -> bool:
        return self.profile.mirrored

    def area_density(self, s) -> np.ndarray:
        """dSigma/ds, the area of the level set {dist = s} (both sheets)."""
        return 2.0 * np.pi * self.sheets * self.frame(s).r

    def r_over_s(self, y) -> np.ndarray:
        return self.profile.r_over_s(y)


def _orient(model: SurfaceModel) -> SurfaceModel:
    s = np.linspace(0.0, model.s_max, 2001)
    fr = model.profile.frame(s)
    dens = fr.r * fr.H
    total = float(np.sum(0.5 * (dens[1:] + dens[:-1]) * np.diff(s)))
    if total < 0:
        return SurfaceModel(model.kind, model.profile, model.s_max, model.label,
                            model.params, orientation=-1)
    return model


# --------------------------------------------------------------------------
# built-in registry
# --------------------------------------------------------------------------

def plane(s_max: float = 100.0) -> SurfaceModel:
    def derivs(s):
        z = np.zeros_like(s)
        return s, np.ones_like(s), z, z, z, z, z

    prof = MeridianProfile(derivs, tail_ratio=lambda y: np.ones_like(y))
    return SurfaceModel(SurfaceKind.PLANE, prof, s_max, "plane", {})


def paraboloid(c: float = 1.0, s_max: float = 1.0e4) -> SurfaceModel:
    """The graph ``z = c rho^2``."""
    if c <= 0:
        raise ValueError("paraboloid needs c > 0")

    def fprimes(rho):
        return 2.0 * c * rho, 2.0 * c * np.ones_like(rho), np.zeros_like(rho)

    def arclength(rho):
        q = 2.0 * c * rho
        return 0.5 * rho * np.sqrt(1.0 + q * q) + np.arcsinh(q) / (4.0 * c)

    def rho_guess(s):
        # s ~ rho for small rho, s ~ c rho^2 for large
        return np.where(s < 1.0 / c, s, np.sqrt(s / c))

    prof = GraphProfile(fprimes, arclength=arclength, rho_guess=rho_guess,
                        tail_ratio=lambda y: np.exp(-0.5 * y) / math.sqrt(c))
    return _orient(SurfaceModel(SurfaceKind.RADIAL_GRAPH, prof, s_max,
                                f"paraboloid(c={c:g})", {"c": c}))


def gaussian_bump(h: float = 1.0, w: float = 1.0, s_max: float = 50.0) -> SurfaceModel:
    """The graph ``z = h exp(-rho^2 / w^2)``."""
    if w <= 0:
        raise ValueError("gaussian_bump needs w > 0")

    def fprimes(rho):
        x = rho / w
        e = h * np.exp(-x * x)
        f1 = -2.0 * x / w * e
        f2 = (4.0 * x * x - 2.0) / w**2 * e
        f3 = (12.0 * x - 8.0 * x**3) / w**3 * e
        return f1, f2, f3

    prof = GraphProfile(fprimes, tail_ratio=lambda y: np.ones_like(y))
    return _orient(SurfaceModel(SurfaceKind.RADIAL_GRAPH, prof, s_max,
                                f"gaussian_bump(h={h:g},w={w:g})", {"h": h, "w": w}))


def smoothed_cone(slope: float = 1.0, delta: float = 1.0, s_max: float = 1.0e4) -> SurfaceModel:
    """The graph ``z = slope (sqrt(rho^2 + delta^2) - delta)``, a cone rounded at the tip."""
    if delta <= 0:
        raise ValueError("smoothed_cone needs delta > 0")

    def fprimes(rho):
        q = np.sqrt(rho * rho + delta * delta)
        f1 = slope * rho / q
        f2 = slope * delta**2 / q**3
        f3 = -3.0 * slope * delta**2 * rho / q**5
        return f1, f2, f3

    ratio = 1.0 / math.sqrt(1.0 + slope * slope)
    prof = GraphProfile(fprimes, tail_ratio=lambda y: np.full_like(y, ratio))
    return _orient(SurfaceModel(SurfaceKind.RADIAL_GRAPH, prof, s_max,
                                f"smoothed_cone(slope={slope:g},delta={delta:g})",
                                {"slope": slope, "delta": delta}))


def catenoid(c: float = 1.0, s_max: float = 1.0e3) -> SurfaceModel:
    """Catenoid with neck radius ``c``; ``s`` is the distance from the neck circle.

    Both halves are congruent, so the model stores one half and doubles areas.
    """
    if c <= 0:
        raise ValueError("catenoid needs c > 0")

    def derivs(s):
        r = np.sqrt(c * c + s * s)
        r1 = s / r
        r2 = c * c / r**3
        r3 = -3.0 * c * c * s / r**5
        z1 = c / r
        z2 = -c * s / r**3
        z3 = -c * (r * r - 3.0 * s * s) / r**5
        return r, r1, r2, r3, z1, z2, z3

    prof = MeridianProfile(derivs, tail_ratio=lambda y: np.sqrt(1.0 + (c * np.exp(-y))**2),
                           mirrored=True, euler_characteristic=0, n_ends=2)
    return SurfaceModel(SurfaceKind.ROTATIONAL, prof, s_max, f"catenoid(c={c:g})", {"c": c})


def capped_cylinder(radius: float = 1.0, s_max: float = 100.0) -> SurfaceModel:
    """Half-sphere cap glued to a cylinder (not asymptotically flat; only C^{1,1})."""
    R0 = radius
    s_cap = 0.5 * math.pi * R0

    def derivs(s):
        cap = s <= s_cap
        th = np.minimum(s, s_cap) / R0
        r = np.where(cap, R0 * np.sin(th), R0)
        r1 = np.where(cap, np.cos(th), 0.0)
        r2 = np.where(cap, -np.sin(th) / R0, 0.0)
        r3 = np.where(cap, -np.cos(th) / R0**2, 0.0)
        z1 = np.where(cap, np.sin(th), 1.0)
        z2 = np.where(cap, np.cos(th) / R0, 0.0)
        z3 = np.where(cap, -np.sin(th) / R0**2, 0.0)
        return r, r1, r2, r3, z1, z2, z3

    prof = MeridianProfile(derivs, tail_ratio=lambda y: R0 * np.exp(-y), c2_smooth=False)
    prof.kinks = (s_cap,)
    return SurfaceModel(SurfaceKind.ROTATIONAL, prof, s_max,
                        f"capped_cylinder(radius={radius:g})", {"radius": radius})


def hyperboloid(c: float = 1.0, m: float = 1.0, s_max: float = 1.0e3) -> SurfaceModel:
    """One-sheeted hyperboloid ``r^2 - m^2 z^2 = c^2``: two conical ends, not minimal."""
    if c <= 0 or m <= 0:
        raise ValueError("hyperboloid needs c > 0 and m > 0")

    def g0(z):
        return np.sqrt(c * c + (m * z) ** 2)

    def gprimes(z):
        g = g0(z)
        return m * m * z / g, (m * c) ** 2 / g**3, -3.0 * m**4 * c * c * z / g**5

    ratio = m / math.sqrt(1.0 + m * m)
    prof = AxisGraphProfile(g0, gprimes, tail_ratio=lambda y: np.full_like(y, ratio))
    return _orient(SurfaceModel(SurfaceKind.ROTATIONAL, prof, s_max,
                                f"hyperboloid(c={c:g},m={m:g})", {"c": c, "m": m}))


REGISTRY: dict[str, Callable[..., SurfaceModel]] = {
    "plane": plane,
    "paraboloid": paraboloid,
    "gaussian_bump": gaussian_bump,
    "smoothed_cone": smoothed_cone,
    "catenoid": catenoid,
    "capped_cylinder": capped_cylinder,
    "hyperboloid": hyperboloid,
}


def _sympy_graph(expr: str, s_max: float, label: str) -> SurfaceModel:
    import sympy as sp

    rho = sp.Symbol("rho", nonnegative=True)
    f = sp.sympify(expr, locals={"rho": rho})
    ders = [sp.diff(f, rho, k) for k in (1, 2, 3)]
    fns = [sp.lambdify(rho, d, "numpy") for d in ders]
    f1_0 = float(ders[0].subs(rho, 0))
    if abs(f1_0) > 1e-12:
        raise ValueError(f"inline graph needs f'(0) = 0 for smoothness at the pole, got {f1_0}")

    def fprimes(r):
        return tuple(np.asarray(fn(r), dtype=float) * np.ones_like(r) for fn in fns)

    return _orient(SurfaceModel(SurfaceKind.RADIAL_GRAPH, GraphProfile(fprimes), s_max,
                                label, {"f": expr}))


def _sympy_meridian(r_expr: str, z_expr: str, s_max: float, label: str) -> SurfaceModel:
    import sympy as sp

    s = sp.Symbol("s", nonnegative=True)
    r = sp.sympify(r_expr, locals={"s": s})
    z = sp.sympify(z_expr, locals={"s": s})
    exprs = [r, sp.diff(r, s), sp.diff(r, s, 2), sp.diff(r, s, 3),
             sp.diff(z, s), sp.diff(z, s, 2), sp.diff(z, s, 3)]
    fns = [sp.lambdify(s, e, "numpy") for e in exprs]

    def derivs(x):
        return tuple(np.asarray(fn(x), dtype=float) * np.ones_like(x) for fn in fns)

    prof = MeridianProfile(derivs)
    grid = np.linspace(0.0, s_max, 4001)
    r_, r1, _, _, z1, _, _ = prof.derivatives(grid)
    if abs(r_[0]) > 1e-12:
        raise ValueError("inline meridian needs r(0) = 0")
    err = np.max(np.abs(r1 * r1 + z1 * z1 - 1.0))
    if err > 1e-10:
        raise ValueError(f"inline meridian is not arclength-parametrized (|r'^2+z'^2-1| = {err:.3g})")
    if np.any(r_[1:] <= 0):
        raise ValueError("inline meridian needs r(s) > 0 for s > 0")
    return _orient(SurfaceModel(SurfaceKind.ROTATIONAL, prof, s_max, label,
                                {"r": r_expr, "z": z_expr}))


def make_surface(spec: dict) -> SurfaceModel:
    """Build a surface from a config mapping.

    Either ``{"name": <registry key>, "params": {...}, "s_max": ...}`` or an
    inline profile ``{"kind": "radial_graph", "f": "<expr in rho>"}`` /
    ``{"kind": "rotational", "r": "<expr in s>", "z": "<expr in s>"}``.
    """
    spec = dict(spec)
    label = spec.get("label")
    if "name" in spec:
        name = spec["name"]
        if name not in REGISTRY:
            raise KeyError(f"unknown surface {name!r}; known: {sorted(REGISTRY)}")
        kwargs = dict(spec.get("params", {}))
        if "s_max" in spec:
            kwargs["s_max"] = float(spec["s_max"])
        model = REGISTRY[name](**kwargs)
    else:
        kind = spec.get("kind")
        s_max = float(spec.get("s_max", 100.0))
        if kind == SurfaceKind.RADIAL_GRAPH.value:
            model = _sympy_graph(spec["f"], s_max, label or f"graph({spec['f']})")
        elif kind == SurfaceKind.ROTATIONAL.value:
            model = _sympy_meridian(spec["r"], spec["z"], s_max, label or "meridian")
        else:
            raise ValueError(f"surface spec needs 'name' or kind in "
                             f"{{radial_graph, rotational}}, got {kind!r}")
    if label:
        model = SurfaceModel(model.kind, model.profile, model.s_max, label,
                             model.params, model.orientation)
    return model
