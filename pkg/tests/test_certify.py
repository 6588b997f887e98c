import csv
import io
import json
import math

import numpy as np
import pytest

from qlayer.certify import (CSV_FIELDS, ROUTES, SIGN_MARGIN, Certificate, SearchBounds,
                            certify_discrete_spectrum, choose_strategy, max_certified_width,
                            optimal_epsilon, sigma_ess_threshold)
from qlayer.geometry import HypothesisError
from qlayer.layer import WidthError
from qlayer.surfaces import catenoid, gaussian_bump, hyperboloid, paraboloid, plane, smoothed_cone


def test_sigma_ess():
    assert sigma_ess_threshold(0.5) == pytest.approx(9.869604, abs=1e-6)
    assert sigma_ess_threshold(1.0) == pytest.approx(2.467401, abs=1e-6)
    assert sigma_ess_threshold(0.6) == pytest.approx(sigma_ess_threshold(0.3) / 4)
    with pytest.raises(ValueError):
        sigma_ess_threshold(0.0)


def test_optimal_epsilon_examples():
    c = optimal_epsilon(1.0, -1.0, 1.0)
    assert c.eps == 1.0 and c.Q_min == 0.0 and c.bounded
    c = optimal_epsilon(0.7, 0.0, 2.0)
    assert c.eps == 0.0 and c.Q_min == 0.7
    c = optimal_epsilon(1.0, 1.0, -1.0)
    assert not c.bounded and math.isnan(c.eps)


@pytest.mark.parametrize("a", [0.1, 0.2, 0.3])
def test_optimal_epsilon_discriminant_against_scan(a):
    # cross term from a bump with int H j = 3, diagonal from the plateau identity
    Quu, Quv = 0.2, -0.5 * a * 3.0
    Qvv = a * 2.0 + (4 / 3 - 8 / math.pi**2) * a**3 * 0.5
    c = optimal_epsilon(Quu, Quv, Qvv)
    eps = np.linspace(-20, 20, 400001)
    scan = (Quu + 2 * eps * Quv + eps**2 * Qvv).min()
    assert c.Q_min == pytest.approx(scan, abs=1e-8)
    assert (c.Q_min < 0) == (Quv**2 > Quu * Qvv)


def test_search_bounds_radii_are_dyadic_and_nested():
    small, big = SearchBounds(R_max=256), SearchBounds(R_max=4096)
    assert small.radii(3.0) == [4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0]
    assert big.radii(3.0)[:7] == small.radii(3.0)
    with pytest.raises(ValueError):
        SearchBounds(ratios=(0.5,))


def test_plane_rejected_upstream():
    with pytest.raises(HypothesisError):
        certify_discrete_spectrum(plane(), 0.5)


def test_width_violation_rejected():
    with pytest.raises(WidthError):
        certify_discrete_spectrum(paraboloid(), 0.36)


def test_strategy_choice():
    assert choose_strategy(catenoid()) == "none"
    assert choose_strategy(paraboloid()) == "annulus_bump"
    assert choose_strategy(hyperboloid()) == "capacity"
    assert choose_strategy(gaussian_bump()) == "meanH"
    with pytest.raises(ValueError):
        certify_discrete_spectrum(paraboloid(), 0.2, strategy="bogus")


def _check_certificate(c: Certificate):
    assert c.certified
    assert c.Q + c.Q_errbar < 0 and c.Q < -SIGN_MARGIN * c.Q_errbar
    assert c.sigma_ess == math.pi**2 / (4 * c.a**2)
    assert c.route == ROUTES[c.strategy]
    assert c.rayleigh_bound < c.sigma_ess
    if not math.isnan(c.Qvv):
        def q(e):
            return c.Quu + 2 * e * c.Quv + e * e * c.Qvv
        assert q(c.eps) <= q(1.1 * c.eps) and q(c.eps) <= q(0.9 * c.eps)
        assert q(c.eps) == pytest.approx(c.Q, rel=1e-12, abs=1e-15)


def test_catenoid_minimal_route():
    c = certify_discrete_spectrum(catenoid(), 0.2, "none")
    _check_certificate(c)
    assert c.eps == 0.0 and c.estimate is not None and c.estimate >= c.Q


def test_paraboloid_annulus_route():
    c = certify_discrete_spectrum(paraboloid(), 0.3, "annulus_bump")
    _check_certificate(c)
    assert c.bump_radius is not None and c.bump_radius > 11.25


@pytest.mark.parametrize("surf, strategy", [(gaussian_bump(), "meanH"),
                                            (hyperboloid(), "capacity"),
                                            (paraboloid(), "meanH")])
def test_other_routes(surf, strategy):
    _check_certificate(certify_discrete_spectrum(surf, 0.2, strategy))


def test_cone_annulus_not_found_is_not_a_claim():
    c = certify_discrete_spectrum(smoothed_cone(), 0.2, "annulus_bump",
                                  SearchBounds(R_max=256))
    assert c.verdict == "not_found"
    assert "not a claim" in c.statement()
    assert any("best Q" in n or "no admissible" in n for n in c.notes)


@pytest.mark.parametrize("surf, a, strategy", [(catenoid(), 0.2, "none"),
                                               (paraboloid(), 0.3, "annulus_bump"),
                                               (gaussian_bump(), 0.2, "meanH")])
def test_monotone_search(surf, a, strategy):
    small = certify_discrete_spectrum(surf, a, strategy, SearchBounds(R_max=256))
    big = certify_discrete_spectrum(surf, a, strategy,
                                    SearchBounds(R_max=4096, ratios=(4.0, 16.0, 256.0, 4096.0)))
    assert small.certified and big.certified


def test_certificate_serialization():
    c = certify_discrete_spectrum(catenoid(), 0.1, "none")
    d = json.loads(c.to_json())
    assert d["verdict"] == "certified" and d["statement"] == "discrete spectrum non-empty"
    assert d["sigma_ess"] == c.sigma_ess and d["trial"]["u"]["name"] == "log_cutoff"
    rows = list(csv.DictReader(io.StringIO(c.to_csv())))
    assert tuple(rows[0].keys()) == CSV_FIELDS and len(rows) == 1
    assert float(rows[0]["Q"]) == c.Q


def test_max_certified_width_paraboloid():
    B = 2 * math.sqrt(2)
    grid = [0.95 / B * k / 3 for k in (1, 2, 3)] + [0.36]
    table = max_certified_width(paraboloid(), grid)
    assert table.skipped == [0.36]
    assert table.behavior == "full_range"
    assert table.largest_certified == pytest.approx(0.95 / B)
    assert table.to_dict()["strategy"] == "annulus_bump"


def test_max_certified_width_catenoid_small_a():
    table = max_certified_width(catenoid(), [0.1, 0.2])
    assert table.certified_widths[:1] == [0.1]


def test_shallow_gaussian_bump_needs_long_cutoffs():
    # weakly bound: the default ratios fail, a log cutoff over six decades succeeds
    surf = gaussian_bump(h=0.5)
    assert not certify_discrete_spectrum(surf, 0.2, "meanH").certified
    c = certify_discrete_spectrum(surf, 0.2, "meanH",
                                  SearchBounds(R_max=64, ratios=(4, 16, 256, 1e4, 1e6)))
    _check_certificate(c)
    assert c.R_out / c.R >= 1e4
