import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import optimize

from qlayer.geometry import (HypothesisError, check_asymptotic_flatness, check_hypotheses,
                             eval_fundamental_forms, hartman_identity_residual, is_minimal,
                             kappa_split, sup_norm_B, total_gauss_curvature, volume_growth_lambda)
from qlayer.surfaces import (REGISTRY, capped_cylinder, catenoid, gaussian_bump, paraboloid,
                             plane, smoothed_cone)


def test_fundamental_forms_plane():
    d = eval_fundamental_forms(plane(), np.array([0.0, 3.0]))
    assert np.all(d.H == 0) and np.all(d.kappa == 0) and np.all(d.normB == 0)


def test_fundamental_forms_paraboloid_pole():
    d = eval_fundamental_forms(paraboloid(), np.array([0.0]))
    assert d.shape[0, 0, 0] == pytest.approx(2.0) and d.shape[0, 1, 1] == pytest.approx(2.0)
    assert d.H[0] == pytest.approx(4.0) and d.kappa[0] == pytest.approx(4.0)
    assert d.normB[0] == pytest.approx(2 * math.sqrt(2))


def test_fundamental_forms_catenoid_neck():
    d = eval_fundamental_forms(catenoid(), np.array([0.0]))
    assert d.H[0] == pytest.approx(0.0, abs=1e-15)
    assert d.kappa[0] == pytest.approx(-1.0)


def test_first_form_of_graph_uses_slope():
    rho = np.array([0.5, 2.0])
    d = eval_fundamental_forms(paraboloid(), rho)
    assert np.allclose(d.g[:, 0, 0], 1 + 4 * rho**2)
    assert np.allclose(d.g[:, 1, 1], rho**2)


def test_negative_parameter_rejected():
    with pytest.raises(ValueError):
        eval_fundamental_forms(paraboloid(), np.array([-1.0]))


@pytest.mark.parametrize("name", ["paraboloid", "catenoid", "gaussian_bump", "smoothed_cone",
                                  "hyperboloid"])
@given(u=st.floats(0.0, 60.0))
def test_pointwise_curvature_inequalities(name, u):
    surf = REGISTRY[name]()
    fr = surf.frame(np.array([u]))
    H, K, B = fr.H[0], fr.kappa[0], fr.normB[0]
    scale = max(1.0, H * H)
    assert K <= H * H / 4 + 1e-12 * scale
    assert B * B == pytest.approx(H * H - 2 * K, rel=1e-12, abs=1e-14)
    assert abs(H) >= B - math.sqrt(2 * abs(K)) - 1e-12


def _sup_oracle(surf, hi):
    f = lambda x: -float(surf.frame_native(np.array([x])).normB[0])  # noqa: E731
    xs = np.linspace(0.0, hi, 2001)
    vals = [-f(x) for x in xs]
    i = int(np.argmax(vals))
    lo, up = xs[max(i - 1, 0)], xs[min(i + 1, len(xs) - 1)]
    r = optimize.minimize_scalar(f, bounds=(lo, up), method="bounded", options={"xatol": 1e-12})
    return max(-r.fun, vals[i])


@pytest.mark.parametrize("surf, exact", [(plane(), 0.0), (paraboloid(), 2 * math.sqrt(2)),
                                         (catenoid(), math.sqrt(2))])
def test_sup_norm_matches_oracle(surf, exact):
    sup = sup_norm_B(surf)
    assert sup.value == pytest.approx(exact, rel=1e-10, abs=1e-14)
    if exact:
        assert sup.value == pytest.approx(_sup_oracle(surf, 5.0), rel=1e-9)


def test_sup_norm_gaussian_bump_against_oracle():
    surf = gaussian_bump(h=0.5)
    assert sup_norm_B(surf).value == pytest.approx(_sup_oracle(surf, 4.0), rel=1e-9)


def test_flatness_reports():
    assert check_asymptotic_flatness(plane(), 0.1).flat
    par = check_asymptotic_flatness(paraboloid(), 0.1)
    assert par.flat and par.decay_rate_param == pytest.approx(1.0, abs=0.05)
    cone = check_asymptotic_flatness(smoothed_cone(), 0.1)
    assert cone.flat and cone.decay_rate == pytest.approx(1.0, abs=0.05)
    assert not check_asymptotic_flatness(capped_cylinder(), 0.1).flat
    with pytest.raises(ValueError):
        check_asymptotic_flatness(plane(), 0.0)


@pytest.mark.parametrize("surf, total", [(plane(), 0.0), (paraboloid(), 2 * math.pi),
                                         (catenoid(), -4 * math.pi)])
def test_total_curvature(surf, total):
    res = total_gauss_curvature(surf)
    assert res.total == pytest.approx(total, abs=1e-6)
    assert res.quadrature_ok


def test_paraboloid_total_curvature_in_hemisphere_range():
    res = total_gauss_curvature(paraboloid())
    assert 0 < res.total <= 2 * math.pi + 1e-9


def test_kappa_split():
    p = kappa_split(paraboloid())
    assert p.positive == pytest.approx(2 * math.pi, abs=1e-6) and p.negative == pytest.approx(0, abs=1e-12)
    c = kappa_split(catenoid())
    assert c.positive == pytest.approx(0, abs=1e-12) and c.negative == pytest.approx(4 * math.pi, abs=1e-6)
    g = kappa_split(gaussian_bump())
    assert g.positive > 0 and g.negative > 0
    assert abs(g.positive - g.negative) < 2 * math.pi


@pytest.mark.parametrize("surf, lam", [(plane(), 1.0), (paraboloid(), 0.0), (catenoid(), 2.0),
                                       (smoothed_cone(), 1 / math.sqrt(2))])
def test_volume_growth_lambda(surf, lam):
    est = volume_growth_lambda(surf)
    assert est.converged
    assert est.value == pytest.approx(lam, abs=1e-3)


@pytest.mark.parametrize("surf", [plane(), paraboloid(), catenoid(), gaussian_bump(),
                                  smoothed_cone()])
def test_hartman_identity(surf):
    assert hartman_identity_residual(surf).residual < 5e-2


def test_hartman_cylinder_linear_growth():
    # cap carries all curvature, the cylindrical end has zero isoperimetric constant
    h = hartman_identity_residual(capped_cylinder())
    assert h.total_curvature == pytest.approx(2 * math.pi, abs=1e-6)
    assert h.isoperimetric_sum == pytest.approx(0.0, abs=1e-3)
    assert h.residual < 1e-2


def test_hypotheses():
    pl = check_hypotheses(plane())
    assert not pl.passed and pl.failures() == ["not_totally_geodesic"]
    for surf in (paraboloid(), catenoid()):
        assert check_hypotheses(surf).passed
    cyl = check_hypotheses(capped_cylinder())
    assert set(cyl.failures()) == {"c2_smooth", "asymptotically_flat"}


def test_minimality():
    assert is_minimal(catenoid()) and is_minimal(plane())
    assert not is_minimal(paraboloid())
