"""Orbits, rotation numbers, displacement, winding numbers and fixed points."""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np

from .flows import SurfaceMap
from .surface import TWO_PI, DiskSpec, ScalarField


class WindingError(RuntimeError):
    """The displacement field is too small or too poorly sampled on the circle."""


class InvarianceError(RuntimeError):
    """A region that should be invariant is not, or its points rotate differently."""


# -- certificates ---------------------------------------------------------------

PASS = "pass"
FAIL = "fail"
ABSENT = "absent-as-expected"
NO_CONCLUSION = "no-conclusion"


@dataclass(frozen=True)
class Certificate:
    """A checked numerical identity.

    ``identity`` is a short formula for what is being checked.  ``relation``
    is ``"eq"`` (``|computed - expected| <= tolerance``), ``"ge"``
    (``computed >= expected - tolerance``) or ``"le"``.  The verdict is derived
    from the other fields only.
    """

    name: str
    computed: Optional[float]
    expected: Optional[float]
    tolerance: float
    identity: str = ""
    details: dict = dc_field(default_factory=dict)
    inconclusive: bool = False
    relation: str = "eq"

    def __post_init__(self):
        if self.relation not in ("eq", "ge", "le"):
            raise ValueError(f"unknown relation {self.relation!r}")

    @property
    def verdict(self) -> str:
        if self.inconclusive:
            return NO_CONCLUSION
        if self.computed is None and self.expected is None:
            return ABSENT
        if self.computed is None or self.expected is None:
            return FAIL
        if not (math.isfinite(self.computed) and math.isfinite(self.expected)):
            return FAIL
        if self.relation == "ge":
            ok = self.computed >= self.expected - self.tolerance
        elif self.relation == "le":
            ok = self.computed <= self.expected + self.tolerance
        else:
            ok = abs(self.computed - self.expected) <= self.tolerance
        return PASS if ok else FAIL

    @property
    def passed(self) -> bool:
        return self.verdict in (PASS, ABSENT)

    @property
    def error(self) -> Optional[float]:
        if self.computed is None or self.expected is None:
            return None
        return abs(self.computed - self.expected)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "computed": self.computed,
            "expected": self.expected,
            "tolerance": self.tolerance,
            "relation": self.relation,
            "verdict": self.verdict,
            "identity": self.identity,
            "details": _plain(self.details),
        }


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


# -- orbits and rotation numbers ---------------------------------------------------

@dataclass(frozen=True)
class LiftedOrbit:
    """``theta`` holds continuous (lifted) angles; ``theta[k] - theta[0]`` is the lift."""

    start: tuple
    theta: np.ndarray
    s: np.ndarray

    @property
    def lift(self) -> np.ndarray:
        return self.theta - self.theta[0]

    @property
    def steps(self) -> int:
        return len(self.theta) - 1


def orbit(f: SurfaceMap, p, n: int) -> LiftedOrbit:
    """The first ``n`` iterates of ``p`` with their continuous theta-lift."""
    if n < 0:
        raise ValueError("n must be non-negative")
    th = np.empty(n + 1)
    ss = np.empty(n + 1)
    t, s = np.array([float(p[0])]), np.array([float(p[1])])
    th[0], ss[0] = t[0], s[0]
    for k in range(n):
        t, s = f(t, s)
        th[k + 1], ss[k + 1] = t[0], s[0]
    return LiftedOrbit((float(p[0]), float(p[1])), th, ss)


def rotation_numbers(f: SurfaceMap, theta, s, n_iterates: int = 1) -> np.ndarray:
    """Full turns per iterate for many starting points at once."""
    if n_iterates < 1:
        raise ValueError("n_iterates must be at least 1")
    th0 = np.asarray(theta, dtype=float)
    t, ss = th0.copy(), np.asarray(s, dtype=float).copy()
    for _ in range(n_iterates):
        t, ss = f(t, ss)
    return (t - th0) / (n_iterates * f.chart.circumference)


def rotation_number(f: SurfaceMap, p, n_iterates: int = 1) -> float:
    return float(rotation_numbers(f, [p[0]], [p[1]], n_iterates)[0])


def disk_invariance_error(f: SurfaceMap, disk: DiskSpec, samples: int = 512) -> float:
    """Largest gauge defect ``|gauge(f(q)) - radius|`` over boundary samples ``q``."""
    th, s = disk.boundary(samples)
    t2, s2 = f(th, s)
    return float(np.max(np.abs(disk.gauge(f.chart, t2, s2) - disk.radius)))


def rho_invariant_disk(f: SurfaceMap, disk: DiskSpec, min_area: float, samples: int = 256,
                       n_iterates: int = 200, tol: float = 1e-3, invariance_tol: float = 1e-9) -> float:
    """Common rotation number of the points of an invariant disk of area >= ``min_area``."""
    area = disk.area(f.chart)
    if area < min_area:
        raise InvarianceError(f"disk area {area:.6g} is below {min_area}")
    defect = disk_invariance_error(f, disk)
    if defect > invariance_tol:
        raise InvarianceError(f"disk is not invariant (boundary moves off by {defect:.3g})")
    th, s = disk.sample(samples)
    rho = rotation_numbers(f, th, s, n_iterates)
    spread = float(rho.max() - rho.min())
    if spread > tol:
        raise InvarianceError(f"rotation numbers in the disk disagree by {spread:.3g}")
    return float(np.median(rho))


# -- displacement ------------------------------------------------------------------

@dataclass(frozen=True)
class Displacement:
    displaces: bool
    min_distance: float
    samples: int
    returning: int


def displaces(f: SurfaceMap, disk: DiskSpec, samples: int = 10_000) -> Displacement:
    """Whether no sampled point of the closed disk lands back in it.

    ``min_distance`` is the smallest flat distance from an image point to the
    disk (zero for points landing inside).  It is exact for round disks; for
    other shapes it is the gauge excess scaled by the shorter axis.
    """
    chart = f.chart
    th, s = disk.sample(samples)
    t2, s2 = f(th, s)
    g = disk.gauge(chart, t2, s2)
    inside = g <= disk.radius
    if disk.exponent == 2.0 and disk.axes[0] == disk.axes[1]:
        dist = (g - disk.radius) * disk.axes[0]
    else:
        dist = (g - disk.radius) * min(disk.axes)
    dist = np.maximum(dist, 0.0)
    return Displacement(not bool(np.any(inside)), float(dist.min()), int(samples), int(inside.sum()))


# -- winding numbers and fixed points ---------------------------------------------------

def _displacement(f: SurfaceMap, theta, s):
    t2, s2 = f(theta, s)
    return f.chart.dtheta(t2, theta), s2 - s


def circle_points(center, radius: float, samples: int):
    phi = np.linspace(0.0, TWO_PI, samples, endpoint=False)
    return center[0] + radius * np.cos(phi), center[1] + radius * np.sin(phi)


def winding_number(f: SurfaceMap, center, radius: float, samples: int = 1000,
                   margin: float = 1e-9) -> int:
    """Winding number of ``p -> f(p) - p`` along a counterclockwise circle."""
    th, s = circle_points(center, radius, samples)
    dx, dy = _displacement(f, th, s)
    size = np.hypot(dx, dy)
    if float(size.min()) <= margin:
        raise WindingError(f"circle passes near a fixed point (|f(p) - p| = {size.min():.3g})")
    ang = np.arctan2(dy, dx)
    inc = np.diff(np.concatenate([ang, ang[:1]]))
    inc = (inc + math.pi) % TWO_PI - math.pi
    if float(np.abs(inc).max()) >= 0.5 * math.pi:
        raise WindingError("circle undersampled: displacement turns by >= pi/2 between samples")
    total = float(inc.sum()) / TWO_PI
    w = int(round(total))
    if abs(total - w) > 1e-6:
        raise WindingError(f"non-integer winding {total}")
    return w


def _square_to_disk(u, v):
    return u * np.sqrt(1.0 - 0.5 * v * v), v * np.sqrt(1.0 - 0.5 * u * u)


def _cell_winding(f: SurfaceMap, center, radius, cell, per_side: int) -> tuple[int, float, tuple]:
    """Winding of the displacement along a square cell's image in the disk."""
    u0, v0, u1, v1 = cell
    t = np.linspace(0.0, 1.0, per_side, endpoint=False)
    us = np.concatenate([u0 + (u1 - u0) * t, np.full(per_side, u1), u1 - (u1 - u0) * t, np.full(per_side, u0)])
    vs = np.concatenate([np.full(per_side, v0), v0 + (v1 - v0) * t, np.full(per_side, v1), v1 - (v1 - v0) * t])
    x, y = _square_to_disk(us, vs)
    th, s = center[0] + radius * x, center[1] + radius * y
    dx, dy = _displacement(f, th, s)
    size = np.hypot(dx, dy)
    k = int(np.argmin(size))
    best = (float(size[k]), (float(th[k]), float(s[k])))
    ang = np.arctan2(dy, dx)
    inc = np.diff(np.concatenate([ang, ang[:1]]))
    inc = (inc + math.pi) % TWO_PI - math.pi
    return int(round(float(inc.sum()) / TWO_PI)), float(np.abs(inc).max()), best


def _newton(f: SurfaceMap, p, tol: float, steps: int = 30):
    chart = f.chart
    q = np.array(p, dtype=float)
    eps = 1e-7
    for _ in range(steps):
        dx, dy = _displacement(f, np.array([q[0]]), np.array([q[1]]))
        r = np.array([dx[0], dy[0]])
        if math.hypot(*r) < tol:
            break
        jac = np.empty((2, 2))
        for j in range(2):
            e = np.zeros(2)
            e[j] = eps
            ax, ay = _displacement(f, np.array([q[0] + e[0]]), np.array([q[1] + e[1]]))
            jac[:, j] = (np.array([ax[0], ay[0]]) - r) / eps
        try:
            q = q - np.linalg.solve(jac, r)
        except np.linalg.LinAlgError:
            break
        q[0] = chart.wrap(q[0])
    dx, dy = _displacement(f, np.array([q[0]]), np.array([q[1]]))
    return (float(q[0]), float(q[1])), float(math.hypot(dx[0], dy[0]))


def fixed_point_certificate(f: SurfaceMap, center, radius: float, tol: float = 1e-8,
                            max_depth: int = 40, per_side: int = 64, boundary_samples: int = 4096,
                            name: str = "fixed_point") -> Certificate:
    """Locate a fixed point forced by nonzero boundary winding.

    The disk is parametrized by the square ``[-1, 1]^2``; cells whose boundary
    winding is nonzero are split into quadrants until a sample has
    ``|f(p) - p| < tol`` (a final Newton step polishes the best candidate).
    """
    try:
        w = winding_number(f, center, radius, boundary_samples)
    except WindingError as exc:
        return Certificate(name, None, 0.0, tol, "|f(p) - p| = 0 inside", {"error": str(exc)},
                           inconclusive=True)
    if w == 0:
        return Certificate(name, None, 0.0, tol, "|f(p) - p| = 0 inside", {"winding": 0},
                           inconclusive=True)
    cells = [(-1.0, -1.0, 1.0, 1.0)]
    best = (math.inf, None)
    depth = 0
    status = "converged"
    while depth < max_depth:
        nxt = []
        for cell in cells:
            u0, v0, u1, v1 = cell
            um, vm = 0.5 * (u0 + u1), 0.5 * (v0 + v1)
            for sub in ((u0, v0, um, vm), (um, v0, u1, vm), (u0, vm, um, v1), (um, vm, u1, v1)):
                cw, jump, cand = _cell_winding(f, center, radius, sub, per_side)
                if cand[0] < best[0]:
                    best = cand
                if cw != 0 or jump >= 0.5 * math.pi:
                    nxt.append(sub)
        depth += 1
        if best[0] < tol:
            break
        if not nxt:
            status = "lost"
            break
        cells = nxt[:16]
    if best[1] is None:
        return Certificate(name, None, 0.0, tol, "|f(p) - p| = 0 inside", {"winding": w, "status": status})
    point, residual = best[1], best[0]
    if residual >= tol:
        point, residual = _newton(f, point, tol)
    chart = f.chart
    dist = math.hypot(float(chart.dtheta(point[0], center[0])), point[1] - center[1])
    details = {"winding": w, "point": list(point), "depth": depth, "status": status,
               "inside": dist <= radius + 1e-12}
    if not details["inside"]:
        return Certificate(name, None, 0.0, tol, "|f(p) - p| = 0 inside", details)
    return Certificate(name, residual, 0.0, tol, "|f(p) - p| = 0 inside", details)


def brute_force_fixed_point(f: SurfaceMap, center, radius: float, n: int = 201):
    """Grid scan of ``|f(p) - p|`` over the disk; returns ``(point, residual)``."""
    u = np.linspace(-1.0, 1.0, n)
    uu, vv = np.meshgrid(u, u, indexing="ij")
    x, y = _square_to_disk(uu.ravel(), vv.ravel())
    th, s = center[0] + radius * x, center[1] + radius * y
    dx, dy = _displacement(f, th, s)
    size = np.hypot(dx, dy)
    k = int(np.argmin(size))
    return (float(th[k]), float(s[k])), float(size[k])


# -- first integrals ---------------------------------------------------------------

def check_first_integral(f: SurfaceMap, H: ScalarField, samples: int = 10_000, tol: Optional[float] = None,
                         rel_tol: float = 1e-3, seed: int = 0, points=None,
                         name: str = "first_integral") -> Certificate:
    """``max |H(f(p)) - H(p)|`` over samples; default tolerance ``rel_tol * osc(H)``."""
    chart = H.chart
    if points is None:
        rng = np.random.default_rng(seed)
        th = rng.uniform(0.0, chart.circumference, samples)
        s = rng.uniform(chart.s_min, chart.s_max, samples)
    else:
        th, s = (np.asarray(a, dtype=float) for a in points)
    t2, s2 = f(th, s)
    defect = float(np.max(np.abs(H.eval(t2, s2) - H.eval(th, s))))
    osc = float(np.ptp(H.values))
    if tol is None:
        tol = rel_tol * osc
    return Certificate(name, defect, 0.0, tol, "max |H o f - H| = 0",
                       {"samples": int(np.size(th)), "oscillation": osc})


def max_displacement(f: SurfaceMap, theta, s) -> float:
    dx, dy = _displacement(f, np.asarray(theta, dtype=float), np.asarray(s, dtype=float))
    return float(np.max(np.hypot(dx, dy)))


def max_distance(f: SurfaceMap, g: SurfaceMap, theta, s) -> float:
    """Sup over samples of the flat distance between ``f(p)`` and ``g(p)``."""
    t1, s1 = f(theta, s)
    t2, s2 = g(theta, s)
    return float(np.max(np.hypot(f.chart.dtheta(t1, t2), s1 - s2)))
