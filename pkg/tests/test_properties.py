"""Randomised invariants across modules."""

import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from oracles import chi_moment_quad
from qlayer.certify import SearchBounds, optimal_epsilon, sigma_ess_threshold
from qlayer.layer import LayerConfig, build_layer_metric, validate_width
from qlayer.surfaces import catenoid, gaussian_bump, paraboloid
from qlayer.variational import (TrialFunction, build_log_cutoff, build_ring_bump, eval_Q,
                                smoothstep, transverse_coefficients)

finite = st.floats(-1e3, 1e3, allow_nan=False)


@given(Quu=finite, Quv=finite, Qvv=st.floats(1e-3, 1e3), eps=finite)
def test_optimal_epsilon_is_a_minimum(Quu, Quv, Qvv, eps):
    c = optimal_epsilon(Quu, Quv, Qvv)
    q = Quu + 2 * eps * Quv + eps * eps * Qvv
    scale = abs(Quu) + abs(Quv) * (1 + abs(c.eps)) + Qvv * (1 + c.eps * c.eps)
    assert c.Q_min <= q + 1e-12 * scale
    if abs(Quv**2 - Quu * Qvv) > 1e-9 * (Quv**2 + abs(Quu * Qvv)):
        assert (c.Q_min < 0) == (Quv**2 > Quu * Qvv)


@given(a=st.floats(0.01, 10.0))
def test_threshold_scaling(a):
    assert sigma_ess_threshold(2 * a) == pytest.approx(sigma_ess_threshold(a) / 4, rel=1e-14)


@given(x=st.floats(-2.0, 3.0))
def test_smoothstep_bounds(x):
    S, dS = smoothstep(x)
    assert 0.0 <= S <= 1.0 and 0.0 <= dS <= 15 / 8 + 1e-15


@given(R=st.floats(0.1, 1e3), ratio=st.floats(1.01, 1e4), s=st.floats(0.0, 1e8))
def test_log_cutoff_range_and_support(R, ratio, s):
    phi = build_log_cutoff(R, R * ratio)
    v = float(phi(np.array([s]))[0])
    assert 0.0 <= v <= 1.0
    if s <= R:
        assert v == 1.0
    if s >= R * ratio:
        assert v == 0.0


@settings(max_examples=15)
@given(a=st.floats(0.05, 2.0), p=st.integers(0, 1), q=st.integers(0, 1))
def test_transverse_coefficients_match_quadrature(a, p, q):
    from scipy import integrate
    T, C = transverse_coefficients(a, p, q)
    k = math.pi / (2 * a)
    sigma = k * k

    def tau(t, n):
        return math.cos(k * t) * t**n

    def dtau(t, n):
        return -k * math.sin(k * t) * t**n + (n * math.cos(k * t) * t ** (n - 1) if n else 0.0)

    for j in range(3):
        c = integrate.quad(lambda t: tau(t, p) * tau(t, q) * t**j, -a, a, epsrel=1e-12)[0]
        t_ = integrate.quad(lambda t: (dtau(t, p) * dtau(t, q) - sigma * tau(t, p) * tau(t, q))
                            * t**j, -a, a, epsrel=1e-10, epsabs=1e-12, limit=200)[0]
        assert C[j] == pytest.approx(c, rel=1e-9, abs=1e-12 * a ** (p + q + j + 1))
        assert T[j] == pytest.approx(t_, rel=1e-8, abs=1e-10 * sigma * a ** (p + q + j + 1))


@settings(max_examples=10)
@given(a=st.floats(0.05, 3.0), n=st.sampled_from([0, 2, 4]))
def test_chi_moments_scale(a, n):
    # cc moments scale like a^(n+1)
    assert chi_moment_quad("cc", n, a) == pytest.approx(chi_moment_quad("cc", n, 1.0) * a ** (n + 1),
                                                        rel=1e-10)


@given(frac=st.floats(0.01, 0.99), surf=st.sampled_from([paraboloid(), catenoid(), gaussian_bump()]))
def test_valid_width_implies_positive_volume(frac, surf):
    v = validate_width(surf, 1.0)
    a = frac / v.B_inf
    assert validate_width(surf, a).ok
    assert build_layer_metric(LayerConfig(surf, a)).min_volume_factor() > 0


@settings(max_examples=8)
@given(center=st.floats(1.0, 6.0), width=st.floats(0.2, 1.0), c1=st.floats(-2, 2),
       c2=st.floats(-2, 2))
def test_quadratic_form_bilinear(center, width, c1, c2):
    assume(abs(c1) + abs(c2) > 0.1)
    layer = build_layer_metric(LayerConfig(paraboloid(), 0.2))
    f = build_ring_bump(center, width)
    g = build_log_cutoff(2.0, 20.0)
    u, v = TrialFunction(f, "chi_t"), TrialFunction(g, "chi")
    quu, quv, qvv = (eval_Q(x, y, layer).Q for x, y in ((u, u), (u, v), (v, v)))
    assert eval_Q(v, u, layer).Q == pytest.approx(quv, rel=1e-12, abs=1e-14)
    c = optimal_epsilon(quu, quv, qvv)
    if c.bounded:
        assert c.Q_min <= quu + 1e-12


@given(R_min=st.floats(0.5, 100.0), extra=st.integers(0, 4))
def test_radius_grid_nested(R_min, extra):
    small = SearchBounds(R_min=R_min, R_max=R_min * 8)
    big = SearchBounds(R_min=R_min, R_max=R_min * 8 * 2**extra)
    assert big.radii(1.0)[: len(small.radii(1.0))] == small.radii(1.0)
