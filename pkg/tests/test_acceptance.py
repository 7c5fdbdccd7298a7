"""Acceptance criteria 1 to 9, one printed pass/fail line each.

Run standalone with ``python3 tests/test_acceptance.py`` or through pytest
(``pytest tests/test_acceptance.py -s`` shows the lines inline; they are
printed with capture disabled either way).
"""

import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from helpers import stem_only_field  # noqa: E402

from autogap import constructions as cons  # noqa: E402
from autogap.calabi import CapSpec, r_ab_autonomous, r_ab_sum_commuting  # noqa: E402
from autogap.dynamics import (displaces, check_first_integral, fixed_point_certificate,  # noqa: E402
                              max_displacement, max_distance, winding_number)
from autogap.flows import Identity, Rotation, flow_map, image_area, iterate  # noqa: E402
from autogap.reeb import ReebTree, reeb_tree  # noqa: E402
from autogap.surface import AnnulusChart, DiskSpec, ScalarField  # noqa: E402

WIDE = AnnulusChart.wide()


@pytest.fixture
def report(request):
    capman = request.config.pluginmanager.getplugin("capturemanager")

    def emit(n, ok, text):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {text}"
        if capman is not None:
            with capman.global_and_fixture_disabled():
                print("\n" + line, flush=True)
        else:
            print(line, flush=True)
        assert ok, line

    return emit


def _oracle_level(F, h):
    """Brute-force sweep: bisect the sublevel area over all triangles."""
    target = h * F.chart.total_area
    lo, hi = float(F.values.min()), float(F.values.max())
    for _ in range(50):
        mid = 0.5 * (lo + hi)
        if F.sublevel_area(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_criterion_1_percentile_identity(report):
    t0 = time.perf_counter()
    K = cons.compact_height_field((512, 512))
    T = 3
    F = K * T
    tree = reeb_tree(F)
    errs = []
    for h in np.linspace(0.01, 0.99, 20):
        r = r_ab_autonomous(F, CapSpec.for_percentile(float(h)), tree)
        errs.append(abs(r.value - h * T))
    elapsed = time.perf_counter() - t0
    worst = max(errs)
    report(1, worst <= 1e-3 * T and elapsed < 30.0,
           f"r_ab(T K) = hT at 20 h, T={T}, 512^2: max err {worst:.2e} (tol {1e-3 * T:.0e}), {elapsed:.1f} s")


def test_criterion_2_second_capping(report):
    T, tau = 3, 5
    K = cons.compact_height_field((512, 512)) * T
    P = cons.plateau_field((512, 512), tau)
    tree_K, tree_P = reeb_tree(K), reeb_tree(P)
    err_psi, err_sum = [], []
    for h in np.linspace(0.2, 0.8, 13):
        caps = CapSpec.around_disk(float(h))
        rp = r_ab_autonomous(P, caps, tree_P, rel_tol=1e-2)
        rk = r_ab_autonomous(K, caps, tree_K)
        err_psi.append(abs(rp.value - tau))
        err_sum.append(abs(r_ab_sum_commuting([rk, rp]) - (h * T + tau)))
    ok = max(err_psi) <= 1e-2 * tau and max(err_sum) <= 1e-3 * T + 1e-2 * tau
    report(2, ok, f"r(tau Psi) = tau and sum = h'T + tau at 13 h': max errs {max(err_psi):.2e}, "
                  f"{max(err_sum):.2e} (tol {1e-2 * tau:.0e})")


def test_criterion_3_gap_mechanics(report):
    tree = ReebTree.with_branches([(0.2, 0.6)])
    hs = np.linspace(0.0, 1.0, 4001)
    absent = np.array([not tree.percentile(float(h)).exists for h in hs])
    idx = np.flatnonzero(absent)
    contiguous = idx.size > 0 and np.all(np.diff(idx) == 1)
    length = (idx.size - 1) * (hs[1] - hs[0]) if idx.size else 0.0
    gaps = tree.stem_report().gaps
    gap_len = gaps[0].length if len(gaps) == 1 else float("nan")
    ok = contiguous and abs(length - 0.6) <= 0.01 and abs(gap_len - 0.6) <= 0.01
    report(3, ok, f"branch 0.6 leaves one absent interval of length {length:.4f}, gap report {gap_len:.4f}")


def test_criterion_4_oracle_equivalence(report):
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(10):
        F = stem_only_field(rng, (256, 256))
        cell = F.chart.total_area / (F.shape[0] * (F.shape[1] - 1))
        tree = reeb_tree(F)
        for h in np.linspace(0.05, 0.95, 7):
            v = tree.percentile(float(h)).value
            c = _oracle_level(F, float(h))
            worst = max(worst, abs(F.sublevel_area(v) - F.sublevel_area(c)) / cell)
    report(4, worst <= 2.0, f"10 stem-only fields at 256^2: max percentile mismatch {worst:.3f} cells")


def test_criterion_5_displacement_involution(report):
    phi, _, _ = cons.surface_maps()
    D = cons.unit_disk()
    d = displaces(phi, D, 10_000)
    th, s = D.sample(10_000)
    full = max_distance(Rotation(WIDE, 2 * math.pi), Identity(WIDE), th, s)
    sq = max_distance(iterate(phi, 2), Identity(WIDE), th, s)
    ok = d.displaces and d.returning == 0 and full <= 1e-12 and sq <= 1e-12
    report(5, ok, f"phi^pi returns {d.returning}/10^4 points (gap {d.min_distance:.3f}); "
                  f"|phi^2pi - Id| = {max(full, sq):.1e}")


def test_criterion_6_fixed_point(report):
    _, _, g = cons.surface_maps()
    g2 = iterate(g, 2)
    r = cons.radius_for_angle()
    w = [winding_number(g2, (0.0, 0.0), r, n) for n in (1000, 10_000)]
    cert = fixed_point_certificate(g2, (0.0, 0.0), r)
    inside = math.hypot(*cert.details["point"]) < r
    ok = w == [1, 1] and cert.passed and cert.computed < 1e-8 and inside
    report(6, ok, f"winding {w} at 10^3/10^4 samples; fixed point residual {cert.computed:.1e} inside r_0.2")


def test_criterion_7_robustness(report):
    _, _, g = cons.surface_maps()
    rng = np.random.default_rng(0)
    r = cons.radius_for_angle()
    th, s = cons.unit_disk().sample(4096, 1.2)
    sizes, winds = [], []
    for _ in range(5):
        P = cons.random_perturbation(WIDE, rng, 0.09)
        sizes.append(max_displacement(P, th, s))
        winds.append(winding_number(cons.perturbed_square(g, P), (0.0, 0.0), r, 1000))
    ok = max(sizes) <= 0.09 and winds == [1] * 5
    report(7, ok, f"5 perturbations with sup {max(sizes):.3f} <= 0.09 keep winding {winds}")


def test_criterion_8_integrability(report):
    _, _, g = cons.surface_maps()
    H = cons.lamination_field((512, 512))
    cert = check_first_integral(g, H, 10_000)
    osc = float(np.ptp(H.values))
    report(8, cert.computed <= 1e-3 * osc,
           f"max |H o g - H| = {cert.computed:.2e} <= 1e-3 osc(H) = {1e-3 * osc:.2e} over 10^4 samples")


def test_criterion_9_structure_suite(report):
    t0 = time.perf_counter()
    fields = {
        "K": cons.compact_height_field((256, 256)),
        "Psi": cons.plateau_field((256, 256), 5.0),
        "lamination": cons.lamination_field((256, 256)),
        "stem-only": stem_only_field(np.random.default_rng(9), (128, 128)),
    }
    measure_err = max(abs(reeb_tree(F).total_measure / F.chart.total_area - 1.0) for F in fields.values())

    phi, psi, g = cons.surface_maps()
    H = ScalarField.from_function(
        WIDE, lambda t, s: np.exp(-s * s) * np.cos(t) + 0.3 * s + 0.2 * np.sin(2 * t) * s ** 2, (32, 32))
    flow = flow_map(H, 0.3, step=1e-2)
    rng = np.random.default_rng(1)
    disks = [DiskSpec((rng.uniform(0, 2 * math.pi), rng.uniform(-0.8, 0.8)), rng.uniform(0.1, 0.6))
             for _ in range(10)]
    area_err = max(abs(image_area(f, d, 512 if f is flow else 4096) / d.area(WIDE) - 1.0)
                   for f in (phi, psi, g, flow) for d in disks)

    pts = rng.uniform(0, 2 * math.pi, 200), rng.uniform(-1.0, 1.0, 200)
    t2, s2 = flow_map(H, 0.5, step=1e-2)(*pts)
    drift = float(np.max(np.abs(H.source(t2, s2) - H.source(*pts))))
    elapsed = time.perf_counter() - t0
    ok = measure_err <= 5e-3 and area_err <= 1e-2 and drift <= 1e-8 and elapsed < 120.0
    report(9, ok, f"Reeb measure err {measure_err:.1e}, disk area err {area_err:.1e}, "
                  f"H drift {drift:.1e}, {elapsed:.1f} s")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
