"""Reference computations that avoid the package's own formulas.

Moments come from scipy's adaptive quadrature; curvatures from sympy applied
to the defining height or meridian functions; quadratic forms from a tensor
Gauss rule in the native chart using the metric assembled from the
embedding (not the principal curvatures); plane eigenvalues from Bessel zeros.
"""

from __future__ import annotations

import math

import numpy as np
import sympy as sp
from scipy import integrate, special

from qlayer.layer import assemble_metric_from_embedding


def chi_moment_quad(kind: str, n: int, a: float) -> float:
    k = math.pi / (2.0 * a)

    def chi(t):
        return math.cos(k * t)

    def dchi(t):
        return -k * math.sin(k * t)

    f = {"cc": lambda t: chi(t) ** 2 * t**n,
         "dd": lambda t: dchi(t) ** 2 * t**n,
         "cd": lambda t: chi(t) * dchi(t) * t**n}[kind]
    return integrate.quad(f, -a, a, epsabs=0.0, epsrel=1e-13, limit=200)[0]


def graph_curvatures(f_expr: str, rho_val: float) -> tuple[float, float]:
    """Principal curvatures of ``z = f(rho)`` with upward normal, by sympy."""
    rho = sp.Symbol("rho", positive=True)
    f = sp.sympify(f_expr, locals={"rho": rho})
    f1, f2 = sp.diff(f, rho), sp.diff(f, rho, 2)
    w = sp.sqrt(1 + f1**2)
    k1 = f2 / w**3
    if rho_val == 0.0:
        return float(sp.limit(k1, rho, 0)), float(sp.limit(f1 / (rho * w), rho, 0))
    return float(k1.subs(rho, rho_val)), float((f1 / (rho * w)).subs(rho, rho_val))


def meridian_curvatures(r_expr: str, z_expr: str, var: str, val: float) -> tuple[float, float]:
    """Principal curvatures of a meridian ``(r(x), z(x))`` in any parametrization."""
    x = sp.Symbol(var, real=True)
    r = sp.sympify(r_expr, locals={var: x})
    z = sp.sympify(z_expr, locals={var: x})
    r1, z1 = sp.diff(r, x), sp.diff(z, x)
    r2, z2 = sp.diff(r1, x), sp.diff(z1, x)
    speed = sp.sqrt(r1**2 + z1**2)
    k1 = (r1 * z2 - z1 * r2) / speed**3
    k2 = z1 / (r * speed)
    return float(k1.subs(x, val)), float(k2.subs(x, val))


def brute_force_Q(surface, a: float, u_fn, v_fn, p: int, q: int, u_range,
                  n_u: int = 48, n_t: int = 48, panels: int = 64):
    """``Q(u tau_p, v tau_q)`` and the mass by a tensor Gauss rule in ``(native u, t)``.

    ``u_fn(s)`` / ``v_fn(s)`` return ``(value, d/ds)``.  The horizontal metric
    comes from ``p + t N`` and the chain factor ``ds/du`` from the first form,
    so no curvature formula enters.
    """
    lo, hi = u_range
    edges = np.linspace(lo, hi, panels + 1)
    xu, wu = np.polynomial.legendre.leggauss(n_u)
    xt, wt = np.polynomial.legendre.leggauss(n_t)
    mid, half = 0.5 * (edges[1:] + edges[:-1]), 0.5 * np.diff(edges)
    U = (mid[:, None] + half[:, None] * xu[None, :]).ravel()
    WU = (half[:, None] * wu[None, :]).ravel()
    T, WT = a * xt, a * wt
    sigma = math.pi**2 / (4.0 * a * a)
    chi = np.cos(0.5 * math.pi * T / a)
    dchi = -0.5 * math.pi / a * np.sin(0.5 * math.pi * T / a)
    tau_u, tau_v = chi * T**p, chi * T**q
    dtau_u = dchi * T**p + (p * chi * T ** (p - 1) if p else 0.0)
    dtau_v = dchi * T**q + (q * chi * T ** (q - 1) if q else 0.0)

    s = np.asarray(surface.native_to_s(U), dtype=float)
    g = assemble_metric_from_embedding(surface, U, 0.0, 0.0)
    ds_du = np.sqrt(g[:, 0, 0])
    fu, dfu = u_fn(s)
    fv, dfv = v_fn(s)
    G = assemble_metric_from_embedding(surface, U[:, None] * np.ones((1, T.size)), 0.0,
                                       np.ones((U.size, 1)) * T[None, :])
    Guu, Gtt = G[..., 0, 0], G[..., 1, 1]
    vol = np.sqrt(Guu * Gtt)
    du_u = (dfu * ds_du)[:, None]
    du_v = (dfv * ds_du)[:, None]
    grad = du_u * du_v * (tau_u * tau_v)[None, :] / Guu
    trans = (fu * fv)[:, None] * (dtau_u * dtau_v - sigma * tau_u * tau_v)[None, :]
    mass = (fu * fv)[:, None] * (tau_u * tau_v)[None, :]
    c = 2.0 * math.pi * surface.sheets
    Q = c * WU @ ((grad + trans) * vol) @ WT
    M = c * WU @ (mass * vol) @ WT
    return float(Q), float(M)


def plane_disc_eigenvalue(a: float, length: float, m: int = 0) -> float:
    """Lowest Dirichlet eigenvalue of the flat layer over a disc of radius ``length``."""
    j = special.jn_zeros(m, 1)[0]
    return math.pi**2 / (4.0 * a * a) + (j / length) ** 2
