"""Trial functions ``j(s) tau(t)`` and the quadratic form of the layer.

For ``f = phi(s) tau(t)`` on a surface of revolution

    Q(f, g) = int_Omega grad f . grad g dOmega - sigma int_Omega f g dOmega
            = Q1 + Q2,
    Q1 = int_Sigma phi_f' phi_g' int tau_f tau_g (1 - k2 t)/(1 - k1 t) dt dSigma,
    Q2 = int_Sigma phi_f phi_g int (tau_f' tau_g' - sigma tau_f tau_g)(1 - H t + kappa t^2) dt dSigma,

with ``sigma = pi^2 / 4a^2``.  The t-integral of Q2 is a combination of
closed-form moments of ``chi``; the one of Q1 is not polynomial in t and is
done by Gauss-Legendre (its integrand is analytic on a neighbourhood of
``[-a, a]`` whenever ``a B_inf < 1``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .geometry import is_minimal, sample_radii, volume_growth_lambda
from .layer import LayerMetric
from .quadrature import (adaptive, chi, chi_integrals_closed_form, dchi, gauss_legendre,
                         integrate_1d, integrate_surface, surface_breakpoints)
from .surfaces import S_DIRECT, SurfaceModel

SMOOTHSTEP_ENERGY = 10.0 / 7.0     # int_0^1 S'(x)^2 dx
SMOOTHSTEP_MAX_SLOPE = 15.0 / 8.0
PLATEAU_FACTOR = 4.0 / 3.0 - 8.0 / math.pi**2


def smoothstep(x):
    """Quintic ``S(x) = 10x^3 - 15x^4 + 6x^5`` clipped to [0, 1] and its derivative."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    S = x**3 * (10.0 + x * (-15.0 + 6.0 * x))
    dS = 30.0 * x * x * (1.0 - x) ** 2
    return S, dS


# --------------------------------------------------------------------------
# radial profiles
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Ramp:
    """Transition between ``lo`` and ``hi`` in ``s`` ("lin") or in ``log s`` ("log")."""

    lo: float
    hi: float
    kind: str = "lin"

    def __post_init__(self):
        if not self.hi > self.lo >= 0.0:
            raise ValueError(f"ramp needs 0 <= lo < hi, got [{self.lo}, {self.hi}]")
        if self.kind not in ("lin", "log"):
            raise ValueError("ramp kind must be 'lin' or 'log'")
        if self.kind == "log" and self.lo <= 0.0:
            raise ValueError("log ramp needs lo > 0")

    def rising(self, s):
        """Value rising from 0 at ``lo`` to 1 at ``hi`` and its s-derivative."""
        s = np.asarray(s, dtype=float)
        if self.kind == "lin":
            w = self.hi - self.lo
            S, dS = smoothstep((s - self.lo) / w)
            return S, dS / w
        L = math.log(self.hi / self.lo)
        ss = np.clip(s, self.lo, self.hi)
        S, dS = smoothstep(np.log(ss / self.lo) / L)
        return S, dS / (L * ss)

    def breakpoints(self) -> list[float]:
        if self.kind == "lin":
            return [self.lo, self.hi]
        return list(np.geomspace(self.lo, self.hi, max(2, int(2 * math.log2(self.hi / self.lo)) + 1)))


@dataclass(frozen=True)
class Cutoff:
    """``0`` below ``up.lo``, rising to ``1``, plateau, falling to ``0`` at ``down.hi``.

    ``up = None`` gives a function equal to 1 from ``s = 0``.
    """

    up: Ramp | None
    down: Ramp
    name: str = "cutoff"

    def __post_init__(self):
        if self.up is not None and self.up.hi > self.down.lo:
            raise ValueError("rising ramp must end before the falling ramp starts")

    @property
    def support(self) -> tuple[float, float]:
        return (0.0 if self.up is None else self.up.lo, self.down.hi)

    @property
    def plateau(self) -> tuple[float, float]:
        return (0.0 if self.up is None else self.up.hi, self.down.lo)

    def __call__(self, s):
        return self.eval(s)[0]

    def eval(self, s):
        s = np.asarray(s, dtype=float)
        fd, dfd = self.down.rising(s)
        val, der = 1.0 - fd, -dfd
        if self.up is not None:
            fu, dfu = self.up.rising(s)
            val, der = fu * val, dfu * val + fu * der
        return val, der

    def breakpoints(self) -> list[float]:
        pts = self.down.breakpoints()
        if self.up is not None:
            pts = self.up.breakpoints() + pts
        return pts

    def describe(self) -> dict:
        d = {"name": self.name, "down": [self.down.lo, self.down.hi, self.down.kind]}
        if self.up is not None:
            d["up"] = [self.up.lo, self.up.hi, self.up.kind]
        return d


def build_log_cutoff(R: float, R_out: float) -> Cutoff:
    """``phi = 1`` on ``[0, R]``, ``S(log(R_out/s) / log(R_out/R))`` on ``[R, R_out]``."""
    if not R_out > R > 0:
        raise ValueError("log cutoff needs R_out > R > 0")
    return Cutoff(None, Ramp(R, R_out, "log"), name="log_cutoff")


def build_annulus_cutoff(R: float, R_out: float | None = None,
                         R_in: float | None = None) -> Cutoff:
    """Cutoff supported in ``[R/2, 5R/2]`` and equal to 1 on ``[R, 2R]``.

    ``R_out`` / ``R_in`` replace the outer / inner linear ramps by logarithmic
    ones on ``[2R, R_out]`` / ``[R_in, R]``; on ends of quadratic area growth
    the linear ramps keep a Dirichlet energy of order one.
    """
    if R <= 0:
        raise ValueError("annulus cutoff needs R > 0")
    up = Ramp(0.5 * R, R) if R_in is None else Ramp(R_in, R, "log")
    down = Ramp(2.0 * R, 2.5 * R) if R_out is None else Ramp(2.0 * R, R_out, "log")
    return Cutoff(up, down, name="annulus_cutoff")


class GradientBoundError(ValueError):
    """The bump's slope bound ``|grad j| < 2`` fails at this radius."""


def annulus_bump_threshold() -> float:
    return 12.0 * SMOOTHSTEP_MAX_SLOPE / 2.0


def build_annulus_bump(R: float) -> Cutoff:
    """Bump supported in ``[4R/3, 5R/3]``, equal to 1 on ``[17R/12, 19R/12]``."""
    max_slope = 12.0 * SMOOTHSTEP_MAX_SLOPE / R
    if not max_slope < 2.0:
        raise GradientBoundError(f"max |j'| = {max_slope:.4g} >= 2 at R = {R:g}; "
                                 f"need R > {annulus_bump_threshold():g}")
    return Cutoff(Ramp(4.0 * R / 3.0, 17.0 * R / 12.0), Ramp(19.0 * R / 12.0, 5.0 * R / 3.0),
                  name="annulus_bump")


def build_ring_bump(center: float, width: float) -> Cutoff:
    """Bump equal to 1 on ``[center - width, center + width]`` with ramps of length ``width``.

    Near ``s = 0`` the plateau is clipped to start at the pole (or neck).
    """
    if width <= 0:
        raise ValueError("ring bump needs width > 0")
    lo = center - width
    down = Ramp(center + width, center + 2.0 * width)
    if lo - width <= 0.0:
        return Cutoff(None, down, name="ring_bump")
    return Cutoff(Ramp(lo - width, lo), down, name="ring_bump")


# --------------------------------------------------------------------------
# mollified mean curvature
# --------------------------------------------------------------------------

@dataclass
class MollifiedH:
    """Average of ``H`` over ``[s - h, s + h]``.

    Reflected evenly through ``s = 0`` on two-ended models and clipped to
    ``[0, s + h]`` at a pole.
    """

    surface: SurfaceModel
    scale: float
    n: int = 24

    def __post_init__(self):
        if self.scale <= 0:
            raise ValueError("mollification scale must be positive")
        self._x, self._w = gauss_legendre(self.n)

    def _mean(self, lo, hi):
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        pts = mid[:, None] + half[:, None] * self._x[None, :]
        Hv = self.surface.frame(np.abs(pts).ravel()).H.reshape(pts.shape)
        return (Hv * self._w[None, :]).sum(axis=1) * 0.5

    def eval(self, s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        h = self.scale
        if self.surface.mirrored:
            lo = s - h
        else:
            lo = np.maximum(s - h, 0.0)
        hi = s + h
        val = self._mean(lo, hi)
        H_hi = self.surface.frame(hi).H
        H_lo = self.surface.frame(np.abs(lo)).H
        der = (H_hi - H_lo) / (hi - lo)
        if not self.surface.mirrored:
            clipped = (s - h) < 0.0
            # d/ds of the mean over [0, s+h]
            der = np.where(clipped, (H_hi - val) / (hi - lo), der)
        return val, der

    def __call__(self, s):
        return self.eval(s)[0]


def mollify_H(surface: SurfaceModel, scale: float) -> tuple[MollifiedH, float]:
    """Mollified mean curvature and its L^2(Sigma) distance to ``H`` on ``[0, s_max]``."""
    Hm = MollifiedH(surface, scale)

    def integrand(fr):
        return (Hm(fr.s) - fr.H) ** 2

    dist = integrate_surface(surface, integrand, rtol=1e-8, atol=1e-16).value
    return Hm, math.sqrt(max(dist, 0.0))


@dataclass(frozen=True)
class MeanHFactor:
    """Spatial factor ``phi * H`` (or ``phi * H_eps``)."""

    phi: Cutoff
    surface: SurfaceModel = field(repr=False)
    mollifier: MollifiedH | None = field(default=None, repr=False)

    @property
    def support(self):
        return self.phi.support

    def eval(self, s):
        s = np.asarray(s, dtype=float)
        p, dp = self.phi.eval(s)
        if self.mollifier is None:
            fr = self.surface.frame(s)
            h, dh = fr.H, fr.dH
        else:
            h, dh = self.mollifier.eval(s)
            h, dh = h.reshape(s.shape), dh.reshape(s.shape)
        return p * h, dp * h + p * dh

    def __call__(self, s):
        return self.eval(s)[0]

    def breakpoints(self):
        return self.phi.breakpoints()

    def describe(self):
        d = {"name": "phi_H", "phi": self.phi.describe()}
        if self.mollifier is not None:
            d["scale"] = self.mollifier.scale
        return d


# --------------------------------------------------------------------------
# trial functions and the quadratic form
# --------------------------------------------------------------------------

_TAGS = {"chi": 0, "chi_t": 1}


@dataclass(frozen=True)
class TrialFunction:
    """Separable ``spatial(s) * tau(t)`` with ``tau = chi`` or ``chi * t``."""

    spatial: object          # Cutoff or MeanHFactor
    tag: str = "chi"

    def __post_init__(self):
        if self.tag not in _TAGS:
            raise ValueError(f"transverse tag must be one of {sorted(_TAGS)}")

    @property
    def power(self) -> int:
        return _TAGS[self.tag]

    @property
    def support(self):
        return self.spatial.support

    def describe(self) -> dict:
        return {"tag": self.tag, **self.spatial.describe()}


def build_meanH_trial(surface: SurfaceModel, phi: Cutoff, scale: float = 0.0) -> TrialFunction:
    moll = MollifiedH(surface, scale) if scale > 0 else None
    return TrialFunction(MeanHFactor(phi, surface, moll), "chi_t")


def transverse_coefficients(a: float, p: int, q: int) -> tuple[np.ndarray, np.ndarray]:
    """Coefficients ``T_k`` and ``C_k`` (k = 0, 1, 2) for ``tau = chi t^p``, ``chi t^q``.

    ``T_k = int (tau_p' tau_q' - sigma tau_p tau_q) t^k dt`` and
    ``C_k = int tau_p tau_q t^k dt``, from the closed-form moments of ``chi``.
    """
    m = chi_integrals_closed_form(a)
    sigma = m.threshold
    T = np.zeros(3)
    C = np.zeros(3)
    for k in range(3):
        n = p + q + k
        # (chi' t^p + p chi t^(p-1)) (chi' t^q + q chi t^(q-1)) t^k
        val = m.moment("dd", n)
        if p + q:
            val += (p + q) * m.moment("cd", n - 1)
        if p * q:
            val += p * q * m.moment("cc", n - 2)
        C[k] = m.moment("cc", n)
        T[k] = val - sigma * C[k]
    return T, C


@dataclass(frozen=True)
class QuadFormReport:
    Q1: float
    Q2: float
    Q: float
    Q_direct: float          # full (s, t) quadrature of the same form
    mass: float              # int_Omega f g dOmega
    error: float             # quadrature error bar on Q
    mass_error: float
    converged: bool

    @property
    def decomposition_residual(self) -> float:
        return abs(self.Q - self.Q1 - self.Q2)

    @property
    def direct_residual(self) -> float:
        return abs(self.Q - self.Q_direct)

    def to_dict(self) -> dict:
        return {"Q1": self.Q1, "Q2": self.Q2, "Q": self.Q, "Q_direct": self.Q_direct,
                "mass": self.mass, "error": self.error, "converged": self.converged}


def _overlap(u: TrialFunction, v: TrialFunction):
    lo = max(u.support[0], v.support[0])
    hi = min(u.support[1], v.support[1])
    return lo, hi


def eval_Q(u: TrialFunction, v: TrialFunction, layer: LayerMetric, *, rtol: float = 1e-11,
           n_t: int = 64) -> QuadFormReport:
    """Bilinear form ``Q(u, v)``, its split ``Q1 + Q2`` and the mass ``<u, v>``."""
    surface, a = layer.surface, layer.a
    lo, hi = _overlap(u, v)
    if hi <= lo:
        return QuadFormReport(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, True)
    if hi > S_DIRECT:
        raise ValueError(f"trial support reaches s = {hi:g} beyond the direct range {S_DIRECT:g}")
    p, q = u.power, v.power
    T, C = transverse_coefficients(a, p, q)
    sigma = layer.threshold

    tx, tw = gauss_legendre(n_t)
    t = a * tx
    wt = a * tw
    tx2, tw2 = gauss_legendre(n_t // 2 + 8)
    t2, wt2 = a * tx2, a * tw2
    chi_t, dchi_t = chi(t, a), dchi(t, a)
    tau_u = chi_t * t**p
    tau_v = chi_t * t**q
    dtau_u = dchi_t * t**p + (p * chi_t * t ** (p - 1) if p else 0.0)
    dtau_v = dchi_t * t**q + (q * chi_t * t ** (q - 1) if q else 0.0)
    tt_uv = tau_u * tau_v
    t2_uv = chi(t2, a) ** 2 * t2 ** (p + q)

    def rule(grid):
        s = grid.nodes
        fr = surface.frame(s)
        fu, dfu = u.spatial.eval(s)
        fv, dfv = v.spatial.eval(s)
        A = 1.0 - fr.k1[:, None] * t[None, :]
        Cc = 1.0 - fr.k2[:, None] * t[None, :]
        ratio = (Cc / A * tt_uv[None, :]) @ wt
        A2 = 1.0 - fr.k1[:, None] * t2[None, :]
        C2 = 1.0 - fr.k2[:, None] * t2[None, :]
        ratio2 = (C2 / A2 * t2_uv[None, :]) @ wt2
        q1 = dfu * dfv * ratio
        q1_low = dfu * dfv * ratio2
        H, K = fr.H, fr.kappa
        q2 = fu * fv * (T[0] - H * T[1] + K * T[2])
        direct = (dfu * dfv * ratio
                  + fu * fv * (((dtau_u * dtau_v - sigma * tt_uv)[None, :] * A * Cc) @ wt))
        mass = fu * fv * (C[0] - H * C[1] + K * C[2])
        dens = 2.0 * np.pi * surface.sheets * fr.r * grid.weights
        return np.array([dens @ q1, dens @ q2, dens @ direct, dens @ mass, dens @ q1_low])

    bps = set(surface_breakpoints(surface, lo, hi))
    for f in (u.spatial, v.spatial):
        bps.update(x for x in f.breakpoints() if lo <= x <= hi)
    res = adaptive(rule, sorted(bps), rtol=rtol, atol=1e-300, order=12, joint=True)
    Q1, Q2, Qd, mass, Q1_low = (float(x) for x in res.value)
    err_vec = np.atleast_1d(res.error)
    t_err = abs(Q1 - Q1_low)
    error = float(err_vec[0] + err_vec[1] + t_err) + 1e-15 * (abs(Q1) + abs(Q2))
    return QuadFormReport(Q1=Q1, Q2=Q2, Q=Q1 + Q2, Q_direct=Qd, mass=mass, error=error,
                          mass_error=float(err_vec[3]), converged=res.converged)


# --------------------------------------------------------------------------
# surface functionals of a radial factor
# --------------------------------------------------------------------------

def _surface_integral(surface: SurfaceModel, f, weight: Callable, extra_bps=(), rtol=1e-10):
    lo, hi = f.support
    bps = set(surface_breakpoints(surface, lo, hi))
    bps.update(x for x in extra_bps if lo <= x <= hi)

    def rule(grid):
        fr = surface.frame(grid.nodes)
        val, der = f.eval(grid.nodes)
        return (2.0 * np.pi * surface.sheets * fr.r * grid.weights) @ weight(fr, val, der)

    return adaptive(rule, sorted(bps), rtol=rtol, atol=1e-300)


def dirichlet_energy(surface: SurfaceModel, f) -> float:
    """``int |grad f|^2 dSigma``; a log cutoff is integrated in ``log s``."""
    if isinstance(f, Cutoff) and f.up is None and f.down.kind == "log":
        return log_ramp_energy(surface, f.down.lo, f.down.hi)
    return _surface_integral(surface, f, lambda fr, v, d: d * d, f.breakpoints()).value


def log_ramp_energy(surface: SurfaceModel, R: float, R_out: float) -> float:
    """Energy of a logarithmic ramp from ``R`` to ``R_out`` computed in ``y = log s``.

    ``int |grad phi|^2 = (2 pi sheets / L^2) int S'(x)^2 (r/s)(y) dy`` with
    ``x = (log R_out - y) / L`` and ``L = log(R_out / R)``; valid for ``R_out``
    far beyond floating-point range of ``s`` when given as ``exp`` of a log.
    """
    return log_ramp_energy_logspace(surface, math.log(R), math.log(R_out))


def log_ramp_energy_logspace(surface: SurfaceModel, y_in: float, y_out: float) -> float:
    L = y_out - y_in
    if L <= 0:
        raise ValueError("need y_out > y_in")

    def f(x):
        _, dS = smoothstep(x)
        return dS * dS * surface.r_over_s(y_out - x * L)

    n_panels = max(8, int(4 * L))
    edges = np.linspace(0.0, 1.0, min(n_panels, 4096) + 1)
    val = integrate_1d(f, edges, rtol=1e-12, atol=1e-300).value
    return 2.0 * math.pi * surface.sheets * val / L


@dataclass
class CutoffEnergyTrace:
    R: float
    log_ratios: list[float]
    energies: list[float]

    @property
    def monotone(self) -> bool:
        e = self.energies
        return all(e[i + 1] < e[i] for i in range(len(e) - 1))


def log_cutoff_energy_sequence(surface: SurfaceModel, R: float, *, target: float = 1e-2,
                               max_doublings: int = 8192) -> CutoffEnergyTrace:
    """Energies of the log cutoff along ``R_out = R 2^k`` until below ``target``."""
    yR = math.log(R)
    trace = CutoffEnergyTrace(R, [], [])
    for k in range(1, max_doublings + 1):
        e = log_ramp_energy_logspace(surface, yR, yR + k * math.log(2.0))
        trace.log_ratios.append(k * math.log(2.0))
        trace.energies.append(e)
        if e < target:
            break
    return trace


# --------------------------------------------------------------------------
# capacities
# --------------------------------------------------------------------------

@dataclass
class CapacityResult:
    value: float
    R: float
    R_out: float
    kind: str                          # "kappa" or "dirichlet"
    trace: list[tuple[float, float, float]] = field(default_factory=list)  # (R, R_out, best)

    def to_dict(self):
        return {"value": self.value, "R": self.R, "R_out": self.R_out, "kind": self.kind,
                "trace": [list(x) for x in self.trace]}


def kappa_energy(surface: SurfaceModel, phi: Cutoff) -> float:
    """``int (2 |grad phi|^2 + kappa phi^2) dSigma``."""
    return _surface_integral(surface, phi, lambda fr, v, d: 2.0 * d * d + fr.kappa * v * v,
                             phi.breakpoints()).value


def kappa_capacity(surface: SurfaceModel, neighborhood_radius: float, *,
                   R_max: float | None = None, ratios=(4.0, 16.0, 256.0, 65536.0, 1e8, 1e11),
                   kind: str = "kappa") -> CapacityResult:
    """Best (smallest) energy over log cutoffs with ``phi = 1`` on ``B(neighborhood_radius)``.

    Searches ``R`` on a doubling grid from ``neighborhood_radius`` to ``R_max``
    and ``R_out = R * ratio``; the value is an upper bound on the capacity.
    """
    if neighborhood_radius <= 0:
        raise ValueError("neighborhood radius must be positive")
    R_max = R_max or max(8.0 * neighborhood_radius, neighborhood_radius)
    best = None
    trace = []
    R = neighborhood_radius
    while R <= R_max * (1 + 1e-12):
        for ratio in ratios:
            if R * ratio > S_DIRECT:
                continue
            phi = build_log_cutoff(R, R * ratio)
            val = kappa_energy(surface, phi) if kind == "kappa" else dirichlet_energy(surface, phi)
            if best is None or val < best[0]:
                best = (val, R, R * ratio)
            trace.append((R, R * ratio, best[0]))
        R *= 2.0
    return CapacityResult(best[0], best[1], best[2], kind, trace)


@dataclass
class ParabolicityVerdict:
    verdict: str                       # "minimal+parabolic", "capacity witness", "not established"
    witness: CapacityResult | None = None
    point: float | None = None         # radius of the point with H != 0
    notes: list[str] = field(default_factory=list)

    def to_dict(self):
        return {"verdict": self.verdict, "point": self.point, "notes": self.notes,
                "witness": None if self.witness is None else self.witness.to_dict()}


def check_weak_kappa_parabolic(surface: SurfaceModel) -> ParabolicityVerdict:
    lam = volume_growth_lambda(surface)
    parabolic = lam.converged and math.isfinite(lam.value)
    if is_minimal(surface):
        if parabolic:
            return ParabolicityVerdict("minimal+parabolic",
                                       notes=[f"H vanishes on all samples; lambda = {lam.value:.6g}"])
        return ParabolicityVerdict("not established", notes=["minimal but area growth unresolved"])
    s = sample_radii(surface)
    fr = surface.frame(s)
    i = int(np.argmax(np.abs(fr.H)))
    point = float(s[i])
    R0 = max(point + 1.0, 1.0)
    cap = kappa_capacity(surface, R0, R_max=16.0 * R0)
    if cap.value < 0.0:
        return ParabolicityVerdict("capacity witness", cap, point,
                                   [f"kappa-capacity upper bound {cap.value:.6g} < 0 around s = {point:.4g}"])
    return ParabolicityVerdict("not established", cap, point,
                               [f"best kappa energy found {cap.value:.6g} > 0"])


# --------------------------------------------------------------------------
# sufficient conditions and White's estimate
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class AssuTerms:
    lhs: float       # (int H j)^2 or (int |H| j)^2
    rhs_energy: float  # int (|grad j|^2 + j^2)

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs_energy if self.rhs_energy > 0 else math.inf


def check_condition_assu(surface: SurfaceModel, j, use_absH: bool = False) -> AssuTerms:
    if not math.isfinite(j.support[1]):
        raise ValueError("j must have compact support")
    if use_absH:
        wH = lambda fr, v, d: np.abs(fr.H) * v  # noqa: E731
    else:
        wH = lambda fr, v, d: fr.H * v  # noqa: E731
    Hj = _surface_integral(surface, j, wH, j.breakpoints()).value
    energy = _surface_integral(surface, j, lambda fr, v, d: d * d + v * v, j.breakpoints()).value
    return AssuTerms(Hj * Hj, energy)


@dataclass(frozen=True)
class WhiteIntegrals:
    annulus_H: float         # int_{B(R2) \ B(R1)} H dSigma
    circle_B: float          # int_{dB(R2)} |B|
    R1: float
    R2: float


def white_boundary_integral(surface: SurfaceModel, R1: float, R2: float) -> WhiteIntegrals:
    if not R2 > R1 >= 0:
        raise ValueError("need R2 > R1 >= 0")
    ann = integrate_surface(surface, lambda fr: fr.H, s_range=(R1, R2), rtol=1e-11).value
    fr = surface.frame(np.array([R2]))
    circle = float(2.0 * np.pi * surface.sheets * fr.r[0] * fr.normB[0])
    return WhiteIntegrals(ann, circle, R1, R2)


# --------------------------------------------------------------------------
# upper bounds for trials supported on a plateau
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PlateauBounds:
    Q_chi_t: float
    bound_chi_t: float
    Q_chi: float
    bound_chi: float
    C0: float
    C2: float
    C3: float

    @property
    def holds(self) -> bool:
        tol = 1e-9 * (abs(self.bound_chi_t) + abs(self.bound_chi) + 1e-300)
        return self.Q_chi_t <= self.bound_chi_t + tol and self.Q_chi <= self.bound_chi + tol


def check_plateau_bounds(j: Cutoff, layer: LayerMetric, B_inf: float) -> PlateauBounds:
    """Exact ``Q(j chi t, j chi t)`` and ``Q(j chi, j chi)`` against their upper bounds.

    ``C0 = (1 + a B_inf) / (1 - a B_inf)`` bounds ``(1 - k2 t)/(1 - k1 t)``
    pointwise; ``C2`` uses it in the printed formula, ``C3 = 4/3 - 8/pi^2``.
    """
    a = layer.a
    surface = layer.surface
    pi2 = math.pi**2
    C0 = (1.0 + a * B_inf) / (1.0 - a * B_inf)
    C2 = C0 * ((pi2 - 6.0) / (3.0 * pi2) + a * a * (120.0 - 20.0 * pi2 + pi2**2) / (5.0 * pi2**2) * B_inf)
    C3 = PLATEAU_FACTOR
    grad2 = _surface_integral(surface, j, lambda fr, v, d: d * d, j.breakpoints()).value
    j2 = _surface_integral(surface, j, lambda fr, v, d: v * v, j.breakpoints()).value
    j2k = _surface_integral(surface, j, lambda fr, v, d: v * v * fr.kappa, j.breakpoints()).value
    qt = eval_Q(TrialFunction(j, "chi_t"), TrialFunction(j, "chi_t"), layer).Q
    qc = eval_Q(TrialFunction(j, "chi"), TrialFunction(j, "chi"), layer).Q
    bt = a * j2 + C2 * a**3 * grad2 + C3 * a**3 * j2k
    bc = a * j2k + (a + a * a * B_inf + a**3 * B_inf) * grad2
    return PlateauBounds(qt, bt, qc, bc, C0, C2, C3)
