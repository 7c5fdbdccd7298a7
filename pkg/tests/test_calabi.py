import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from autogap import constructions as cons
from autogap.calabi import (CapSpec, SupportError, calabi, calabi_sphere_autonomous, capped_tree,
                            r_ab_autonomous, r_ab_sum_commuting, sphere_median)
from autogap.surface import AnnulusChart, ScalarField

UNIT = AnnulusChart.unit_area()

# plateau radius r0 = sqrt(8/9), ramp width w = 1 - r0; int_ramp G 2r dr = w r0 + 0.3 w^2
R0 = math.sqrt(8 / 9)
W = 1 - R0
PSI_CALABI = 0.8 + 0.9 * (W * R0 + 0.3 * W * W)


@pytest.fixture(scope="module")
def K128():
    return cons.compact_height_field((128, 128))


@pytest.fixture(scope="module")
def psi5(psi256):
    return psi256 * 5


def radial_bump(center, radius, shape=(96, 96)):
    def fn(t, s):
        r = np.hypot(UNIT.dtheta(t, center[0]), s - center[1]) / radius
        return np.maximum(0.0, 1.0 - r * r) ** 2

    return ScalarField.from_function(UNIT, fn, shape)


def s_only(coefs, shape=(64, 64)):
    def fn(t, s):
        return sum(c * np.sin(np.pi * (k + 1) * s) for k, c in enumerate(coefs)) + 0 * t

    return ScalarField.from_function(UNIT, fn, shape)


# -- caps ------------------------------------------------------------------------

def test_cap_spec():
    c = CapSpec.for_percentile(0.3)
    assert (c.a, c.b) == (1.0, 0.6)
    assert c.h() == pytest.approx(0.3)
    d = CapSpec.around_disk(0.5)
    assert (d.a, d.b) == pytest.approx((0.3, 0.3))
    assert d.sphere_area() == pytest.approx(1.6)
    assert d.h() == pytest.approx(0.5)


def test_cap_spec_rejects_negative():
    with pytest.raises(ValueError):
        CapSpec(-0.1, 1.0)
    with pytest.raises(ValueError):
        CapSpec.around_disk(0.9)


# -- calabi ----------------------------------------------------------------------

def test_calabi_zero():
    assert calabi(ScalarField.constant(UNIT, 0.0, (32, 32))) == 0.0


def test_psi_calabi_golden():
    assert cons.plateau_calabi() == pytest.approx(PSI_CALABI, abs=1e-12)
    assert PSI_CALABI == pytest.approx(0.8494112549695428, abs=1e-14)


def test_tau_psi_calabi(psi256):
    for tau in (1, 5):
        v = calabi(psi256 * tau)
        assert 0.8 * tau < v < 0.9 * tau
        assert v == pytest.approx(tau * PSI_CALABI, rel=1e-3)


def test_calabi_additive_disjoint():
    F = radial_bump((1.0, 0.5), 0.3)
    G = radial_bump((4.0, 0.5), 0.3)
    assert calabi(F + G) == pytest.approx(calabi(F) + calabi(G), abs=1e-14)


def test_calabi_needs_compact_support():
    with pytest.raises(SupportError):
        calabi(cons.height_field((32, 32)))


# -- sphere calabi -------------------------------------------------------------------

def test_sphere_calabi_zero():
    Z = ScalarField.constant(UNIT, 0.0, (32, 32))
    assert calabi_sphere_autonomous(Z, CapSpec(1.0, 1.0)) == 0.0


def test_capped_median_at_percentile(K128):
    for h in np.linspace(0.01, 0.99, 7):
        caps = CapSpec.for_percentile(float(h))
        assert sphere_median(K128, caps).value == pytest.approx(h, abs=1e-9)


def test_sphere_calabi_psi(psi5):
    tau = 5.0
    # D has exactly half the sphere's area, so the median sits on its edge
    for h in (0.2, 0.3, 0.5, 0.7, 0.8):
        caps = CapSpec.around_disk(h)
        x = sphere_median(psi5, caps)
        assert x.value == pytest.approx(tau, abs=1e-2 * tau)
        assert calabi_sphere_autonomous(psi5, caps) == pytest.approx(calabi(psi5) - 1.6 * x.value, abs=1e-12)


def test_capped_tree_measure(K128):
    assert capped_tree(K128, CapSpec(0.3, 0.7)).total_measure == pytest.approx(2.0, abs=1e-12)


# -- r_ab --------------------------------------------------------------------------

@pytest.mark.parametrize("T", [1, 3, 7])
def test_r_ab_height(K128, T):
    F = K128 * T
    for h in np.linspace(0.01, 0.99, 9):
        r = r_ab_autonomous(F, CapSpec.for_percentile(float(h)))
        assert r.value == pytest.approx(h * T, abs=1e-3 * T)
        assert r.percentile_exists


def test_r_ab_psi_displaceable(psi5):
    tau, F = 5, psi5
    for h in np.linspace(0.01, 0.99, 9):
        r = r_ab_autonomous(F, CapSpec.for_percentile(float(h)), rel_tol=1e-2)
        assert r.value == pytest.approx(0.0, abs=1e-2 * tau)


def test_r_ab_psi_around_disk(psi5):
    tau, F = 5, psi5
    for h in np.linspace(0.2, 0.8, 7):
        r = r_ab_autonomous(F, CapSpec.around_disk(float(h)), rel_tol=1e-2)
        assert r.value == pytest.approx(tau, abs=1e-2 * tau)
        # the percentile is missing and the gap is reported
        assert not r.percentile_exists and r.gap is not None


def test_difference_formula_matches_median(psi5, K128):
    for F, caps in ((K128 * 3, CapSpec.for_percentile(0.4)), (psi5, CapSpec.around_disk(0.4)),
                    (psi5, CapSpec.for_percentile(0.4))):
        r = r_ab_autonomous(F, caps, rel_tol=1e-2)
        assert r.difference_value == pytest.approx(r.value, abs=1e-12 * max(1.0, abs(r.value)))


def test_consistency_with_percentile(K128):
    F = K128 * 4
    for h in (0.13, 0.5, 0.77):
        r = r_ab_autonomous(F, CapSpec.for_percentile(h))
        assert abs(r.percentile_value - r.value) <= 1e-3 * 4


def test_sum_commuting():
    assert r_ab_sum_commuting([]) == 0.0
    assert r_ab_sum_commuting([1.5, 2.0]) == 3.5


def test_sum_commuting_on_scenario(K128, psi5):
    T, tau = 3, 5
    KT = K128 * T
    for h in (0.3, 0.5):
        caps = CapSpec.for_percentile(h)
        parts = [r_ab_autonomous(KT, caps), r_ab_autonomous(psi5, caps, rel_tol=1e-2)]
        assert r_ab_sum_commuting(parts) == pytest.approx(h * T, abs=1e-3 * T + 1e-2 * tau)
        caps = CapSpec.around_disk(h)
        parts = [r_ab_autonomous(KT, caps), r_ab_autonomous(psi5, caps, rel_tol=1e-2)]
        assert r_ab_sum_commuting(parts) == pytest.approx(h * T + tau, abs=1e-3 * T + 1e-2 * tau)


# -- properties ----------------------------------------------------------------------

@settings(max_examples=10, deadline=None)
@given(st.integers(1, 6), st.floats(0.01, 0.99))
def test_homogeneity(m, h):
    F = radial_bump((2.0, 0.45), 0.4, (48, 48)) + s_only([0.3, -0.2], (48, 48))
    caps = CapSpec.for_percentile(h)
    assert r_ab_autonomous(F * m, caps).value == pytest.approx(m * r_ab_autonomous(F, caps).value,
                                                               rel=1e-9, abs=1e-12)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.0, 0.9), st.floats(0.1, 2.0))
def test_vanishing_on_small_support(h, amp):
    F = radial_bump((3.0, 0.5), 0.3, (64, 64)) * amp
    caps = CapSpec.for_percentile(h)
    assert F.chart.total_area * 0.2 < caps.sphere_area() / 2
    x = sphere_median(F, caps)
    if x.value == 0.0:
        assert r_ab_autonomous(F, caps).value == 0.0


@settings(max_examples=10, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=1, max_size=3), st.lists(st.floats(-1, 1), min_size=1, max_size=3),
       st.floats(0.01, 0.99))
def test_additive_on_commuting_pairs(a, b, h):
    # functions of s alone Poisson-commute, and F + G generates the product
    F, G = s_only(a, (16, 48)), s_only(b, (16, 48))
    caps = CapSpec.for_percentile(h)
    total = r_ab_autonomous(F + G, caps, rel_tol=1.0).value
    parts = r_ab_autonomous(F, caps, rel_tol=1.0).value + r_ab_autonomous(G, caps, rel_tol=1.0).value
    assert total == pytest.approx(parts, abs=1e-9)


def test_defect_recorded(record_property):
    # disjoint bumps commute; the defect of r on them is recorded, not bounded
    defects = []
    for k in (1, 2, 4, 8):
        F = radial_bump((1.0, 0.5), 0.3, (64, 64)) * k
        G = radial_bump((4.2, 0.5), 0.35, (64, 64)) * (2 * k)
        for h in (0.25, 0.5, 0.75):
            caps = CapSpec.for_percentile(h)
            d = (r_ab_autonomous(F + G, caps).value - r_ab_autonomous(F, caps).value
                 - r_ab_autonomous(G, caps).value)
            defects.append(abs(d))
    record_property("defects", defects)
    assert all(math.isfinite(d) for d in defects)
