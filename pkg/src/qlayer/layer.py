"""Fermi-coordinate metric of the layer ``Omega = Sigma x [-a, a]``.

In intrinsic coordinates ``(s, theta, t)`` of a surface of revolution the metric
is diagonal, ``G = diag((1 - k1 t)^2, r^2 (1 - k2 t)^2, 1)``.  The module also
assembles ``G`` from the embedding, ``G_ij = g_ij + t (p_i . N_j + p_j . N_i) +
t^2 N_i . N_j``, which serves as an independent check of the closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import HypothesisError, SupNorm, check_asymptotic_flatness, sample_radii, sup_norm_B
from .surfaces import AxisGraphProfile, Frame, GraphProfile, MeridianProfile, SurfaceModel

_SUP_CACHE: dict = {}


class WidthError(ValueError):
    """The half-width violates ``a < 1 / B_inf``."""


def cached_sup_norm(surface: SurfaceModel) -> SupNorm:
    key = (id(surface.profile), surface.orientation, surface.s_max)
    hit = _SUP_CACHE.get(key)
    if hit is None or hit[0] is not surface.profile:
        hit = (surface.profile, sup_norm_B(surface))
        _SUP_CACHE[key] = hit
    return hit[1]


@dataclass(frozen=True)
class WidthVerdict:
    ok: bool
    a: float
    B_inf: float
    margin: float        # 1 - a B_inf
    s_at: float          # where |B| peaks

    def message(self) -> str:
        rel = "<" if self.ok else ">="
        return (f"a = {self.a:g}: a*B_inf = {self.a * self.B_inf:.6g} {rel} 1 "
                f"(B_inf = {self.B_inf:.6g} at s = {self.s_at:.6g}, margin {self.margin:.4g})")


def validate_width(surface_or_config, a: float | None = None) -> WidthVerdict:
    """Check ``a B_inf < 1``; accepts a :class:`LayerConfig` or ``(surface, a)``."""
    if isinstance(surface_or_config, LayerConfig):
        surface, a = surface_or_config.surface, surface_or_config.a
    else:
        surface = surface_or_config
    if a is None or a <= 0:
        raise ValueError("half-width must be positive")
    sup = cached_sup_norm(surface)
    margin = 1.0 - a * sup.value
    return WidthVerdict(margin > 0.0, float(a), sup.value, margin, sup.s_at)


@dataclass(frozen=True)
class LayerConfig:
    surface: SurfaceModel
    a: float

    def __post_init__(self):
        v = validate_width(self.surface, self.a)
        if not v.ok:
            raise WidthError("layer is not immersed: " + v.message())


class LayerMetric:
    """Lazy evaluator of the layer metric over a fixed surface and width."""

    def __init__(self, config: LayerConfig):
        self.config = config
        self.surface = config.surface
        self.a = float(config.a)

    @property
    def threshold(self) -> float:
        return math.pi**2 / (4.0 * self.a**2)

    def G(self, s, t) -> np.ndarray:
        """3x3 metric in ``(s, theta, t)``; ``s`` and ``t`` broadcast."""
        s, t = np.broadcast_arrays(np.asarray(s, float), np.asarray(t, float))
        fr = self.surface.frame(s.ravel())
        tt = t.ravel()
        out = np.zeros((tt.size, 3, 3))
        out[:, 0, 0] = (1.0 - fr.k1 * tt) ** 2
        out[:, 1, 1] = fr.r**2 * (1.0 - fr.k2 * tt) ** 2
        out[:, 2, 2] = 1.0
        return out.reshape(s.shape + (3, 3))

    def det_horizontal(self, s, t) -> np.ndarray:
        G = self.G(s, t)
        return G[..., 0, 0] * G[..., 1, 1] - G[..., 0, 1] * G[..., 1, 0]

    def volume_factor(self, s, t) -> np.ndarray:
        """``1 - H t + kappa t^2``, the density of dOmega against dSigma dt."""
        fr = self.surface.frame(np.asarray(s, float))
        return self.volume_factor_frame(fr, np.asarray(t, float))

    @staticmethod
    def volume_factor_frame(fr: Frame, t) -> np.ndarray:
        return 1.0 - fr.H * t + fr.kappa * t * t

    def min_volume_factor(self, n_t: int = 41) -> float:
        s = sample_radii(self.surface)
        t = np.linspace(-self.a, self.a, n_t)
        fr = self.surface.frame(s)
        return float(self.volume_factor_frame(_col(fr), t[None, :]).min())


def build_layer_metric(config: LayerConfig) -> LayerMetric:
    return LayerMetric(config)


def _col(fr: Frame) -> Frame:
    return Frame(**{k: getattr(fr, k)[:, None] for k in
                    ("s", "u", "r", "dr", "k1", "k2", "dk1", "dk2")})


# --------------------------------------------------------------------------
# assembly from the embedding
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Embedding:
    """Derivatives of the immersion ``p`` and unit normal ``N`` in the native chart."""

    p_u: np.ndarray
    p_th: np.ndarray
    N: np.ndarray
    N_u: np.ndarray
    N_th: np.ndarray


def embedding_derivatives(surface: SurfaceModel, u, theta) -> Embedding:
    u = np.asarray(u, float)
    th = np.asarray(theta, float) * np.ones_like(u)
    c, sn = np.cos(th), np.sin(th)
    o = float(surface.orientation)
    prof = surface.profile
    if isinstance(prof, AxisGraphProfile):
        g1, g2, _ = (np.asarray(v, float) * np.ones_like(u) for v in prof._fprimes(u))
        sig = np.sqrt(1.0 + g1 * g1)
        r = np.asarray(prof._g0(u), float) * np.ones_like(u)
        r1, z1 = g1, np.ones_like(u)
        # normal (-1, g')/sigma and its z-derivative
        nr, nz = -1.0 / sig, g1 / sig
        dnr, dnz = g1 * g2 / sig**3, g2 / sig**3
    elif isinstance(prof, GraphProfile):
        f1, f2, _ = (np.asarray(v, float) * np.ones_like(u) for v in prof._fprimes(u))
        sig = np.sqrt(1.0 + f1 * f1)
        r, r1, z1 = u, np.ones_like(u), f1
        # normal (-f', 1)/sigma and its rho-derivative
        nr, nz = -f1 / sig, 1.0 / sig
        dnr, dnz = -f2 / sig**3, -f1 * f2 / sig**3
    elif isinstance(prof, MeridianProfile):
        r, r1, r2, _, z1, z2, _ = prof.derivatives(u)
        nr, nz = -z1, r1
        dnr, dnz = -z2, r2
    else:
        raise TypeError(f"no embedding for profile {type(prof).__name__}")
    zero = np.zeros_like(u)
    p_u = np.stack([r1 * c, r1 * sn, z1], axis=-1)
    p_th = np.stack([-r * sn, r * c, zero], axis=-1)
    N = o * np.stack([nr * c, nr * sn, nz], axis=-1)
    N_u = o * np.stack([dnr * c, dnr * sn, dnz], axis=-1)
    N_th = o * np.stack([-nr * sn, nr * c, zero], axis=-1)
    return Embedding(p_u, p_th, N, N_u, N_th)


def assemble_metric_from_embedding(surface: SurfaceModel, u, theta, t) -> np.ndarray:
    """Horizontal 2x2 block of ``G`` in the native chart ``(u, theta)``."""
    e = embedding_derivatives(surface, u, theta)
    t = np.asarray(t, float)[..., None, None]
    P = np.stack([e.p_u, e.p_th], axis=-2)     # (..., 2, 3)
    D = np.stack([e.N_u, e.N_th], axis=-2)
    g = P @ np.swapaxes(P, -1, -2)
    cross = P @ np.swapaxes(D, -1, -2)
    nn = D @ np.swapaxes(D, -1, -2)
    return g + t * (cross + np.swapaxes(cross, -1, -2)) + t * t * nn


def native_first_form(surface: SurfaceModel, u) -> np.ndarray:
    e = embedding_derivatives(surface, u, 0.0)
    P = np.stack([e.p_u, e.p_th], axis=-2)
    return P @ np.swapaxes(P, -1, -2)


# --------------------------------------------------------------------------
# sandwich radius
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SandwichResult:
    radius: float          # math.inf when no finite radius was found
    finite: bool
    bound: float           # required a |B| bound
    eps: float


def sandwich_bound(eps: float) -> float:
    """Largest ``a|B|`` for which the eigenvalues of ``g^{-1} G`` lie in ``[1-eps, 1+eps]``.

    These eigenvalues are ``(1 - k_i t)^2``, within ``[(1 - a|B|)^2, (1 + a|B|)^2]``.
    """
    return min(math.sqrt(1.0 + eps) - 1.0, 1.0 - math.sqrt(1.0 - eps))


def metric_sandwich_check(config: LayerConfig, eps: float) -> SandwichResult:
    """Smallest sampled radius beyond which ``a |B| <= sandwich_bound(eps)``.

    The same bound keeps ``1 - H t + kappa t^2`` within ``[(1-eps)^2, (1+eps)^2]``.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    bound = sandwich_bound(eps)
    surface, a = config.surface, config.a
    s = sample_radii(surface)
    nb = surface.frame(s).normB
    if np.all(nb == 0.0):
        return SandwichResult(0.0, True, bound, eps)
    flat = check_asymptotic_flatness(surface, bound / a)
    if not flat.flat:
        return SandwichResult(math.inf, False, bound, eps)
    bad = np.nonzero(a * nb > bound)[0]
    radius = 0.0 if bad.size == 0 else float(s[bad[-1] + 1])
    return SandwichResult(radius, True, bound, eps)


__all__ = [
    "WidthError", "HypothesisError", "WidthVerdict", "validate_width", "LayerConfig",
    "LayerMetric", "build_layer_metric", "assemble_metric_from_embedding",
    "embedding_derivatives", "native_first_form", "metric_sandwich_check",
    "SandwichResult", "sandwich_bound", "cached_sup_norm",
]
