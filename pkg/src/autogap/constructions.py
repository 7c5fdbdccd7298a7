"""The concrete fields, disks and maps of the two scenarios.

Annulus scenario (unit-area chart, ``omega = dtheta ds / 2pi``):

* ``K`` equals ``s`` on ``[0.005, 0.995]`` (so on ``[0.01, 0.99]``) and falls to 0
  on thin collars, so it is compactly supported in the open annulus.
* ``Psi`` is a plateau over a disk ``D`` of area 0.8 with a smoothstep ramp to
  0 on the boundary of a concentric disk of area 0.9.  A round disk of area
  0.8 does not fit inside a strip of height 1 and circumference 2pi with this
  area form, so both disks are superellipses ``|dtheta/a|^8 + |ds/b|^8 < r^8``.

Surface scenario (``S^1 x [-2, 2]``, ``omega = dtheta ds``):

* ``D`` is the unit disk at the origin, ``phi`` the half turn, ``psi`` the twist
  of circles about the origin by ``alpha(r)``, and ``g = phi o psi``.
"""

from __future__ import annotations

import math

import numpy as np

from .flows import (DiskTwist, PointMap, Rotation, SmoothstepBump, SurfaceMap, TwistSpec,
                    compose, iterate)
from .surface import TWO_PI, AnnulusChart, DiskSpec, ScalarField, smoothstep, unit_ball_area

# annulus scenario
COLLAR = 0.005
PLATEAU_AREA = 0.8
SUPPORT_AREA = 0.9
SUPERELLIPSE_EXPONENT = 8.0
SUPPORT_HALF_HEIGHT = 0.48
PLATEAU_RADIUS = math.sqrt(PLATEAU_AREA / SUPPORT_AREA)

# surface scenario
TWIST_HEIGHT = 0.4
TWIST_INNER = 0.6
TWIST_OUTER = 0.9
TARGET_ANGLE = 0.2


# -- annulus scenario -------------------------------------------------------------

def compact_height(theta, s, collar: float = COLLAR):
    """``s`` on ``[collar, 1 - collar]``, brought to 0 at both boundaries by C^1 cubics."""
    s = np.asarray(s, dtype=float)
    theta = np.asarray(theta, dtype=float)
    d = collar
    x = np.clip(s / d, 0.0, 1.0)
    low = d * x * x * (2.0 - x)
    y = np.clip((1.0 - s) / d, 0.0, 1.0)
    high = y * y * ((3.0 - 2.0 * d) + (d - 2.0) * y)
    out = np.where(s < d, low, np.where(s > 1.0 - d, high, s))
    return np.broadcast_to(out, np.broadcast_shapes(theta.shape, s.shape)).copy()


def height_field(shape=(512, 512), chart: AnnulusChart | None = None) -> ScalarField:
    """``K(theta, s) = s`` (boundary values 0 and 1)."""
    chart = chart or AnnulusChart.unit_area()
    return ScalarField.from_function(chart, lambda t, s: s + 0.0 * t, shape)


def compact_height_field(shape=(512, 512)) -> ScalarField:
    return ScalarField.from_function(AnnulusChart.unit_area(), compact_height, shape)


def support_disk() -> DiskSpec:
    """Superellipse of area 0.9 centred in the unit-area annulus (gauge radius 1)."""
    p = SUPERELLIPSE_EXPONENT
    b = SUPPORT_HALF_HEIGHT
    a = SUPPORT_AREA * TWO_PI / (b * unit_ball_area(p))
    return DiskSpec((math.pi, 0.5), 1.0, (a, b), p)


def plateau_disk() -> DiskSpec:
    """The disk ``D`` of area 0.8 on which ``Psi = 1``."""
    return support_disk().scaled(PLATEAU_RADIUS)


def plateau_profile() -> SmoothstepBump:
    return SmoothstepBump(1.0, PLATEAU_RADIUS, 1.0)


def plateau_field(shape=(512, 512), amplitude: float = 1.0) -> ScalarField:
    """``amplitude * Psi`` sampled on the unit-area chart."""
    chart = AnnulusChart.unit_area()
    disk = support_disk()
    prof = plateau_profile()

    def fn(theta, s):
        return amplitude * prof(np.minimum(disk.gauge(chart, theta, s), 1.0))

    return ScalarField.from_function(chart, fn, shape)


def plateau_twist() -> TwistSpec:
    chart = AnnulusChart.unit_area()
    return TwistSpec.from_generator(support_disk(), plateau_profile(), chart.area_scale)


def plateau_calabi(amplitude: float = 1.0) -> float:
    """Exact integral of ``amplitude * Psi`` against the area form."""
    from scipy.integrate import quad

    prof = plateau_profile()
    ramp, _ = quad(lambda r: float(prof(r)) * 2.0 * r, PLATEAU_RADIUS, 1.0, epsabs=1e-14, epsrel=1e-13)
    return amplitude * (PLATEAU_AREA + SUPPORT_AREA * ramp)


def annulus_maps(T: float, tau: float):
    """``(phi^T, psi^tau, g = phi^T o psi^tau)`` on the unit-area chart."""
    chart = AnnulusChart.unit_area()
    phi = Rotation(chart, T)
    psi = DiskTwist(chart, plateau_twist(), tau)
    return phi, psi, compose(phi, psi)


# -- surface scenario -------------------------------------------------------------

def unit_disk() -> DiskSpec:
    return DiskSpec((0.0, 0.0), 1.0)


def twist_profile() -> SmoothstepBump:
    """``alpha``: 0.4 on ``r <= 0.6``, decreasing to 0 at ``r = 0.9``."""
    return SmoothstepBump(TWIST_HEIGHT, TWIST_INNER, TWIST_OUTER)


def surface_twist() -> TwistSpec:
    return TwistSpec(unit_disk(), twist_profile(), 1.0)


def radius_for_angle(angle: float = TARGET_ANGLE, spec: TwistSpec | None = None) -> float:
    """Radius where the (monotone) twist profile equals ``angle``, by bisection."""
    from scipy.optimize import brentq

    spec = spec or surface_twist()
    prof = spec.angle
    lo, hi = 0.0, spec.disk.radius
    if not float(prof(hi)) < angle < float(prof(lo)) + 1e-300:
        raise ValueError(f"angle {angle} is not attained strictly inside the disk")
    return brentq(lambda r: float(prof(r)) - angle, lo, hi, xtol=1e-15, rtol=1e-15)


def surface_maps():
    """``(phi, psi, g = phi o psi)`` on ``S^1 x [-2, 2]``."""
    chart = AnnulusChart.wide()
    phi = Rotation(chart, math.pi)
    psi = DiskTwist(chart, surface_twist(), 1.0)
    return phi, psi, compose(phi, psi)


def lamination_function(theta, s):
    """A first integral of ``g``.

    ``r^2`` about the nearer of the centres ``(0, 0)`` and ``(pi, 0)`` for
    ``r <= 0.9``, blended into ``s`` by a smoothstep on ``0.9 <= r <= 1``.
    It is pi-periodic in theta and radial near both disks.
    """
    theta = np.asarray(theta, dtype=float)
    s = np.asarray(s, dtype=float)
    d0 = np.mod(theta + math.pi, TWO_PI) - math.pi
    d1 = np.mod(theta, TWO_PI) - math.pi
    dt = np.minimum(np.abs(d0), np.abs(d1))
    r = np.hypot(dt, s)
    w = 1.0 - smoothstep((r - TWIST_OUTER) / (1.0 - TWIST_OUTER))
    return w * r * r + (1.0 - w) * s


def lamination_field(shape=(512, 512)) -> ScalarField:
    return ScalarField.from_function(AnnulusChart.wide(), lamination_function, shape)


# -- perturbations ------------------------------------------------------------------

def random_perturbation(chart: AnnulusChart, rng: np.random.Generator, sup: float = 0.09,
                        center=(0.0, 0.0), radius: float = 1.5) -> PointMap:
    """A closed-form area-preserving map with displacement at most ``sup``.

    It is a theta shear ``theta += a sin(k s + c) + dtheta`` followed by an
    s shear ``s += b w(theta) sin(m theta + e) + ds`` with a cutoff ``w``
    around ``center``.  Shears along one coordinate depending only on the
    other preserve ``dtheta ds``.  Each coordinate moves by at most
    ``sup / sqrt(2)``.
    """
    bound = sup / math.sqrt(2.0)
    a = rng.uniform(0.3, 0.7) * bound
    k = int(rng.integers(1, 4))
    c = rng.uniform(0.0, TWO_PI)
    b = rng.uniform(0.3, 0.7) * bound
    m = int(rng.integers(1, 4))
    e = rng.uniform(0.0, TWO_PI)
    room = bound - max(a, b)
    dt0 = rng.uniform(-room, room)
    ds0 = rng.uniform(-room, room)
    cx = center[0]

    def cutoff(theta):
        d = chart.dtheta(theta, cx)
        return 1.0 - smoothstep((np.abs(d) - radius) / 0.5)

    def fwd(theta, s):
        t1 = theta + a * np.sin(k * s + c) + dt0
        s1 = s + b * cutoff(t1) * np.sin(m * t1 + e) + ds0
        return t1, s1

    def inv(theta, s):
        s1 = s - ds0
        s1 = s1 - b * cutoff(theta) * np.sin(m * theta + e)
        t1 = theta - dt0 - a * np.sin(k * s1 + c)
        return t1, s1

    params = {"a": a, "k": k, "c": c, "b": b, "m": m, "e": e, "dtheta": dt0, "ds": ds0}
    return PointMap(chart, fwd, "shear_perturbation", inv, params)


def perturbed_square(g: SurfaceMap, perturbation: SurfaceMap) -> SurfaceMap:
    """``P o g^2``."""
    return compose(perturbation, iterate(g, 2))
