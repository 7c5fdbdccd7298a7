"""The two end-to-end scenarios, each producing a set of certificates."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import constructions as cons
from .calabi import CapSpec, calabi, r_ab_autonomous, r_ab_sum_commuting
from .dynamics import (Certificate, brute_force_fixed_point, check_first_integral, displaces,
                       fixed_point_certificate, max_displacement, max_distance, rho_invariant_disk,
                       rotation_numbers, winding_number, WindingError)
from .flows import Identity, compose, image_area, iterate
from .reeb import ReebTree, reeb_tree
from .surface import AnnulusChart, DiskSpec

SCENARIOS = ("annulus", "surface")
FORMATS = ("json", "csv", "plotdata", "dot")


class ConfigError(ValueError):
    pass


@dataclass
class ScenarioConfig:
    scenario: str = "annulus"
    T: int = 3
    tau: int = 5
    grid: tuple = (512, 512)
    tol: float = 1e-3
    psi_tol: float = 1e-2
    n_h: int = 20
    n_h_prime: int = 13
    seed: int = 0
    commutation_samples: int = 1000
    displacement_samples: int = 10_000
    winding_samples: tuple = (1000, 10_000)
    integral_samples: int = 10_000
    perturbations: int = 5
    perturbation_sup: float = 0.09
    out: Optional[str] = None
    format: str = "json"

    def __post_init__(self):
        self.grid = tuple(int(g) for g in self.grid)
        self.winding_samples = tuple(int(w) for w in self.winding_samples)

    def validate(self) -> "ScenarioConfig":
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"scenario must be one of {SCENARIOS}, got {self.scenario!r}")
        for name in ("T", "tau"):
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise ConfigError(f"{name} must be a non-negative integer, got {v!r}")
            setattr(self, name, int(v))
        if len(self.grid) != 2 or min(self.grid) < 128:
            raise ConfigError(f"grid must be at least 128 x 128, got {self.grid}")
        if not (self.tol > 0 and self.psi_tol > 0):
            raise ConfigError("tolerances must be positive")
        if self.n_h < 1 or self.n_h_prime < 2:
            raise ConfigError("need n_h >= 1 and n_h_prime >= 2")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}")
        return self

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_file(cls, path) -> "ScenarioConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["grid"] = list(self.grid)
        d["winding_samples"] = list(self.winding_samples)
        return d


@dataclass
class ScenarioResult:
    scenario: str
    config: ScenarioConfig
    certificates: list
    tables: dict = field(default_factory=dict)
    trees: dict = field(default_factory=dict)

    def __post_init__(self):
        self.certificates = sorted(self.certificates, key=lambda c: c.name)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.certificates)

    def certificate(self, name: str) -> Certificate:
        for c in self.certificates:
            if c.name == name:
                return c
        raise KeyError(name)


def _scale(x: float) -> float:
    return max(1.0, abs(x))


# -- annulus --------------------------------------------------------------------

def run_scenario_annulus(config: ScenarioConfig) -> ScenarioResult:
    config.validate()
    T, tau = config.T, config.tau
    shape = config.grid
    K = cons.compact_height_field(shape) * float(T)
    P = cons.plateau_field(shape, float(tau))
    tree_K, tree_P = reeb_tree(K), reeb_tree(P)
    certs = []

    def r_pair(caps):
        return r_ab_autonomous(K, caps, tree_K), r_ab_autonomous(P, caps, tree_P, rel_tol=config.psi_tol)

    tol_K = config.tol * _scale(T)
    tol_P = config.psi_tol * _scale(tau)

    rows_i = []
    for h in np.linspace(0.01, 0.99, config.n_h):
        h = float(h)
        rk, rp = r_pair(CapSpec.for_percentile(h))
        total = r_ab_sum_commuting([rk, rp])
        c = Certificate(f"r_ab(h={h:.4f})", total, h * T, tol_K + config.tol * _scale(tau),
                        "r_{a,b}(g) = r_{a,b}(phi^T) + r_{a,b}(psi^tau) = h T",
                        {"caps": rk.caps.to_dict(), "phi": rk.value, "psi": rp.value,
                         "psi_gap": None if rp.gap is None else rp.gap.to_dict()})
        certs.append(c)
        rows_i.append((h, total, h * T, c.passed))

    rows_ii = []
    discrepancy = []
    for h in np.linspace(0.2, 0.8, config.n_h_prime):
        h = float(h)
        rk, rp = r_pair(CapSpec.around_disk(h))
        total = r_ab_sum_commuting([rk, rp])
        certs.append(Certificate(f"r_ab_disk_psi(h={h:.4f})", rp.value, float(tau), tol_P,
                                 "r_{a',b'}(psi^tau) = tau", {"caps": rp.caps.to_dict()}))
        c = Certificate(f"r_ab_disk(h={h:.4f})", total, h * T + tau, tol_K + tol_P,
                        "r_{a',b'}(g) = h' T + tau", {"caps": rk.caps.to_dict(), "phi": rk.value,
                                                       "psi": rp.value})
        certs.append(c)
        rows_ii.append((h, total, h * T + tau, c.passed))
        rk0, rp0 = r_pair(CapSpec.for_percentile(h))
        discrepancy.append((h, total - r_ab_sum_commuting([rk0, rp0])))

    # (iii) a discrepancy on [0.2, 0.8] forces a gap there
    d_values = np.array([d for _, d in discrepancy])
    certs.append(Certificate("gap.discrepancy", float(d_values.min()), float(tau), tol_K + tol_P,
                             "r_{a',b'}(g) - r_{a,b}(g) = tau at equal h",
                             {"h": [h for h, _ in discrepancy], "discrepancy": d_values.tolist()}))
    forced = [h for h, d in discrepancy if abs(d) > tol_K + tol_P]
    required = (max(forced) - min(forced)) if len(forced) == len(discrepancy) else 0.0
    certs.append(Certificate("gap.required_length", required, 0.6 if tau else 0.0, 1e-9,
                             "autonomous generator of g has no h-percentile for h in [0.2, 0.8]",
                             {"discrepant_h": forced}))
    candidate = ReebTree.with_branches([(0.2, 0.6)])
    probe = np.linspace(0.2, 0.8, 61)[1:-1]
    absent = [h for h in probe if not candidate.percentile(float(h)).exists]
    gaps = candidate.stem_report().gaps
    certs.append(Certificate("gap.candidate_branch", gaps[0].length if gaps else 0.0, 0.6, 0.01,
                             "branch of measure 0.6 leaves percentiles absent on (0.2, 0.8)",
                             {"absent": len(absent), "probed": len(probe)}))
    interval_disc = max(abs(r_ab_autonomous(K, CapSpec.around_disk(h), tree_K).value
                            - r_ab_autonomous(K, CapSpec.for_percentile(h), tree_K).value)
                        for h, _ in discrepancy)
    certs.append(Certificate("gap.candidate_interval", interval_disc, 0.0, tol_K,
                             "gap-free generator gives r_{a',b'} = r_{a,b}"))
    rep = tree_P.stem_report()
    cover = float(sum(max(0.0, min(g.h_end, 0.8) - max(g.h_start, 0.2)) for g in rep.gaps))
    certs.append(Certificate("gap.psi_tree", cover, 0.6 if tau else 0.0, 0.01,
                             "gap of tau Psi covers [0.2, 0.8]",
                             {"gaps": [g.to_dict() for g in rep.gaps if g.length > 1e-3]}))

    # (iv) rotation numbers
    phi, psi, g = cons.annulus_maps(T, tau)
    D = cons.plateau_disk()
    rng = np.random.default_rng(config.seed)
    th = rng.uniform(0.0, 2 * math.pi, 200)
    s = rng.uniform(0.01, 0.99, 200)
    rho_phi = rotation_numbers(phi, th, s, 1)
    rho_psi = rho_invariant_disk(psi, D, 0.6)
    certs.append(Certificate("rho.commuting_sum", float(np.median(rho_phi)) + rho_psi, float(T), config.tol,
                             "rho(phi^T) + rho(psi^tau) = T",
                             {"rho_phi_spread": float(np.ptp(rho_phi)), "rho_psi": rho_psi}))
    certs.append(Certificate("rho.invariant_disk", rho_invariant_disk(g, D, 0.6), float(T), config.tol,
                             "rotation number of the invariant disk D of g = T"))
    certs.append(Certificate("calabi.psi", calabi(P), cons.plateau_calabi(tau), config.tol * _scale(tau),
                             "int tau Psi omega"))

    # (v) commutation
    th = rng.uniform(0.0, 2 * math.pi, config.commutation_samples)
    s = rng.uniform(0.01, 0.99, config.commutation_samples)
    certs.append(Certificate("commutation", max_distance(compose(phi, psi), compose(psi, phi), th, s), 0.0, 1e-9,
                             "phi^T psi^tau = psi^tau phi^T"))

    tables = {
        "r_ab": (["h", "r_value", "expected", "pass"], rows_i),
        "r_ab_disk": (["h", "r_value", "expected", "pass"], rows_ii),
        "percentile_K": _percentile_table(tree_K),
        "percentile_psi": _percentile_table(tree_P),
        "gaps": (["tree", "h_start", "h_end", "measure"],
                 [(name, gp.h_start, gp.h_end, gp.measure)
                  for name, tr in (("K", tree_K), ("psi", tree_P))
                  for gp in tr.stem_report().gaps if gp.length > 1e-3]),
    }
    return ScenarioResult("annulus", config, certs, tables, {"K": tree_K, "psi": tree_P})


def _percentile_table(tree: ReebTree, n: int = 101):
    rows = []
    for h in np.linspace(0.0, 1.0, n):
        v = tree.percentile(float(h)).value
        rows.append((float(h), float("nan") if v is None else v))
    return (["h", "value"], rows)


# -- surface --------------------------------------------------------------------------

def run_scenario_surface(config: ScenarioConfig) -> ScenarioResult:
    config.validate()
    chart = AnnulusChart.wide()
    phi, psi, g = cons.surface_maps()
    g2 = iterate(g, 2)
    D = cons.unit_disk()
    certs = []

    disp = displaces(phi, D, config.displacement_samples)
    certs.append(Certificate("displacement.returning", float(disp.returning), 0.0, 0.0,
                             "phi(D) and D are disjoint", {"samples": disp.samples}))
    certs.append(Certificate("displacement.distance", disp.min_distance, math.pi - 2.0, 1e-9,
                             "dist(phi(D), D) >= pi - 2", relation="ge"))
    th, s = D.sample(config.displacement_samples)
    certs.append(Certificate("involution", max_distance(iterate(phi, 2), Identity(chart), th, s), 0.0, 1e-12,
                             "phi^2 = Id"))
    certs.append(Certificate("square_on_disk", max_distance(g2, psi, th, s), 0.0, 1e-9, "g^2 = psi on D"))

    r02 = cons.radius_for_angle(cons.TARGET_ANGLE)
    alpha = cons.twist_profile()
    certs.append(Certificate("twist.radius", float(alpha(r02)), cons.TARGET_ANGLE, 1e-12,
                             "alpha(r_0.2) = 0.2", {"r": r02}))
    certs.append(Certificate("twist.margin", 2.0 * r02 * math.sin(0.5 * cons.TARGET_ANGLE), 0.1, 0.0,
                             "chordal displacement on r_0.2 exceeds 0.1", relation="ge"))
    center = D.center
    for n in config.winding_samples:
        certs.append(_winding_cert(f"winding(n={n})", g2, center, r02, n))
    fp = fixed_point_certificate(g2, center, r02, name="fixed_point")
    certs.append(fp)
    bf_point, bf_res = brute_force_fixed_point(g2, center, r02, 101)
    certs.append(Certificate("fixed_point.scan", bf_res, 0.0, 1e-8, "grid scan minimum of |g^2(p) - p|",
                             {"point": list(bf_point)}))

    H = cons.lamination_field(config.grid)
    certs.append(check_first_integral(g, H, config.integral_samples, seed=config.seed, name="first_integral"))

    rng = np.random.default_rng(config.seed)
    ring_t, ring_s = D.boundary(2048, r02)
    probe_t, probe_s = D.sample(4096, 1.2)
    for k in range(config.perturbations):
        pert = cons.random_perturbation(chart, rng, config.perturbation_sup)
        size = max(max_displacement(pert, probe_t, probe_s), max_displacement(pert, ring_t, ring_s))
        certs.append(Certificate(f"robustness.size({k})", size, config.perturbation_sup, 0.0,
                                 "sup |P(p) - p| <= bound", pert.params, relation="le"))
        h2 = cons.perturbed_square(g, pert)
        certs.append(_winding_cert(f"robustness.winding({k})", h2, center, r02, config.winding_samples[0]))

    test_disk = DiskSpec((0.3, 0.2), 0.5)
    certs.append(Certificate("area_preservation", image_area(g, test_disk) / test_disk.area(chart), 1.0, 0.01,
                             "area(g(B)) = area(B)"))

    tables = {
        "orbit": _orbit_table(g, (0.5, 0.0), 200),
        "displacement": _ring_table(g2, center, r02),
    }
    return ScenarioResult("surface", config, certs, tables, {})


def _winding_cert(name, f, center, radius, n) -> Certificate:
    try:
        w = winding_number(f, center, radius, n)
    except WindingError as exc:
        return Certificate(name, None, 1.0, 0.0, "winding of f(p) - p on r_0.2 = 1", {"error": str(exc)})
    return Certificate(name, float(w), 1.0, 0.0, "winding of f(p) - p on r_0.2 = 1",
                       {"samples": n, "radius": radius})


def _orbit_table(f, p, n):
    from .dynamics import orbit

    o = orbit(f, p, n)
    return (["k", "theta", "s", "lift"], [(k, float(f.chart.wrap(t)), float(s), float(l))
                                          for k, (t, s, l) in enumerate(zip(o.theta, o.s, o.lift))])


def _ring_table(f, center, radius, n=256):
    phi = np.linspace(0.0, 2 * math.pi, n, endpoint=False)
    th, s = center[0] + radius * np.cos(phi), center[1] + radius * np.sin(phi)
    t2, s2 = f(th, s)
    dx, dy = f.chart.dtheta(t2, th), s2 - s
    return (["theta", "s", "dx", "dy"], list(zip(th.tolist(), s.tolist(), dx.tolist(), dy.tolist())))


def run_scenario(config: ScenarioConfig) -> ScenarioResult:
    config.validate()
    return run_scenario_annulus(config) if config.scenario == "annulus" else run_scenario_surface(config)
