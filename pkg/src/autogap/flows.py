"""Hamiltonian vector fields and area-preserving maps of the annulus.

Every map is evaluated on arrays ``(theta, s)`` and returns ``(theta', s')``
where ``theta'`` is *unwrapped*: ``theta' - theta`` is the continuous
displacement of the point along the map (its lift).  Composition therefore
adds lifts for free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .surface import TWO_PI, AnnulusChart, DiskSpec, DomainError, ScalarField, smoothstep, unit_ball_area


class FlowEscapeError(DomainError):
    """An integrated orbit left the interior of the chart."""

    def __init__(self, message, point):
        super().__init__(message)
        self.point = point


# -- vector fields -----------------------------------------------------------

_FD_STEP = 1e-6


def _gradient(H: ScalarField, theta, s):
    """``(dH/dtheta, dH/ds)`` at arbitrary points.

    Centered differences of the exact source when the field has one,
    otherwise the bilinear interpolant of grid centered differences.
    """
    if H.source is not None:
        f = H.source
        e_t = _FD_STEP * max(1.0, H.chart.circumference)
        e_s = _FD_STEP * max(1.0, H.chart.height)
        d_t = (np.asarray(f(theta + e_t, s)) - f(theta - e_t, s)) / (2 * e_t)
        d_s = (np.asarray(f(theta, s + e_s)) - f(theta, s - e_s)) / (2 * e_s)
        return d_t, d_s
    g_t, g_s = H.grid_gradient
    return (ScalarField(H.chart, g_t).eval(theta, s),
            ScalarField(H.chart, g_s).eval(theta, s))


def hamiltonian_vector_field(H: ScalarField, theta, s):
    """``X_H`` defined by ``dH = omega(X_H, .)`` with ``omega = C dtheta ds``.

    Returns ``(dH/ds / C, -dH/dtheta / C)``.  Points on or outside the
    boundary of the strip raise :class:`DomainError`.
    """
    theta = np.asarray(theta, dtype=float)
    s = np.asarray(s, dtype=float)
    H.chart.check_strip(s, strict=True)
    d_t, d_s = _gradient(H, theta, s)
    c = H.chart.area_scale
    return d_s / c, -d_t / c


# -- radial profiles -----------------------------------------------------------

@dataclass(frozen=True)
class SmoothstepBump:
    """``height`` for ``r <= inner``, C^1 decreasing to 0 at ``r = outer``."""

    height: float
    inner: float
    outer: float

    def __post_init__(self):
        if not 0 <= self.inner < self.outer:
            raise ValueError("need 0 <= inner < outer")

    def __call__(self, r):
        return self.height * (1.0 - smoothstep((np.asarray(r) - self.inner) / (self.outer - self.inner)))

    def derivative(self, r):
        w = self.outer - self.inner
        x = np.clip((np.asarray(r) - self.inner) / w, 0.0, 1.0)
        return -self.height * 6.0 * x * (1.0 - x) / w

    @property
    def knots(self) -> tuple[float, ...]:
        return (self.inner, self.outer)

    def to_dict(self) -> dict:
        return {"kind": "smoothstep_bump", "height": self.height,
                "inner": self.inner, "outer": self.outer}


@dataclass(frozen=True)
class GeneratorAngle:
    """Rotation rate of the flow of a radial generator ``G(gauge)``.

    ``alpha(r) = -G'(r) / (factor * r)`` where ``factor`` converts between
    generator slope and area-angle speed (see :meth:`TwistSpec.factor`).
    """

    generator: SmoothstepBump
    factor: float

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        dg = self.generator.derivative(r)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(r > 0, -dg / (self.factor * np.where(r > 0, r, 1.0)), 0.0)
        return out

    @property
    def knots(self) -> tuple[float, ...]:
        return self.generator.knots

    def to_dict(self) -> dict:
        return {"kind": "generator_angle", "generator": self.generator.to_dict(), "factor": self.factor}


# -- area-angle coordinates on superellipses ---------------------------------------

class _SectorTable:
    """Normalized sector area of the unit ``l^p`` ball as a function of angle.

    ``beta(phi) = 2 pi * area(sector [0, phi]) / area(ball)``.  Along a level
    curve of the gauge, a radial Hamiltonian flow advances ``beta`` at a
    constant rate, so ``beta`` is the angle variable of the twist.
    """

    _cache: dict = {}

    def __init__(self, p: float, n: int = 1 << 16):
        self.p = p
        self.identity = p == 2.0
        if self.identity:
            return
        quarter = 0.5 * math.pi
        psi = np.linspace(0.0, quarter, n + 1)
        rad2 = (np.abs(np.cos(psi)) ** p + np.abs(np.sin(psi)) ** p) ** (-2.0 / p)
        sector = cumulative_trapezoid(0.5 * rad2, psi, initial=0.0)
        self.psi = psi
        self.beta = sector * (quarter / sector[-1])

    @classmethod
    def get(cls, p: float) -> "_SectorTable":
        if p not in cls._cache:
            cls._cache[p] = cls(p)
        return cls._cache[p]

    def forward(self, phi):
        if self.identity:
            return phi
        quarter = 0.5 * math.pi
        q = np.floor(phi / quarter)
        return q * quarter + np.interp(phi - q * quarter, self.psi, self.beta)

    def backward(self, beta):
        if self.identity:
            return beta
        quarter = 0.5 * math.pi
        q = np.floor(beta / quarter)
        return q * quarter + np.interp(beta - q * quarter, self.beta, self.psi)


@dataclass(frozen=True)
class TwistSpec:
    """A twist of the level curves of ``disk.gauge``.

    The curve ``{gauge = r}`` is turned by ``angle(r)`` radians of area-angle
    per unit time (plain polar angle for round disks).  ``angle`` must vanish
    for ``r >= disk.radius``.
    """

    disk: DiskSpec
    angle: Callable
    area_scale: float = 1.0

    def __post_init__(self):
        if abs(float(self.angle(self.disk.radius))) > 1e-12:
            raise ValueError("twist angle must vanish on the disk boundary")

    @property
    def factor(self) -> float:
        """``C' A_p / pi`` linking generator slope and angular speed."""
        ax, az = self.disk.axes
        return self.area_scale * ax * az * unit_ball_area(self.disk.exponent) / math.pi

    @classmethod
    def from_generator(cls, disk: DiskSpec, generator: SmoothstepBump, area_scale: float) -> "TwistSpec":
        ax, az = disk.axes
        factor = area_scale * ax * az * unit_ball_area(disk.exponent) / math.pi
        return cls(disk, GeneratorAngle(generator, factor), area_scale)

    def generator(self, r):
        """``G(r) = factor * int_r^R angle(q) q dq`` (Gauss-Legendre between knots)."""
        r = np.asarray(r, dtype=float)
        R = self.disk.radius
        knots = sorted({0.0, R, *[k for k in getattr(self.angle, "knots", ()) if 0 < k < R]})
        x, w = np.polynomial.legendre.leggauss(24)
        total = np.zeros_like(r)
        for a, b in zip(knots[:-1], knots[1:]):
            lo = np.clip(r, a, b)
            half = 0.5 * (b - lo)
            q = lo[..., None] + half[..., None] * (x + 1.0)
            total += (half[..., None] * w * self.angle(q) * q).sum(axis=-1)
        return self.factor * total

    def generator_field(self, chart: AnnulusChart, shape=(512, 512)) -> ScalarField:
        disk = self.disk

        def fn(theta, s):
            return self.generator(np.minimum(disk.gauge(chart, theta, s), disk.radius))

        return ScalarField.from_function(chart, fn, shape)

    def to_dict(self) -> dict:
        angle = self.angle.to_dict() if hasattr(self.angle, "to_dict") else repr(self.angle)
        return {"disk": self.disk.to_dict(), "angle": angle, "area_scale": self.area_scale}


# -- maps ----------------------------------------------------------------------

class SurfaceMap:
    """An area-preserving map of the annulus, evaluated on point arrays."""

    kind = "map"

    def __init__(self, chart: AnnulusChart):
        self.chart = chart

    def apply(self, theta, s):
        raise NotImplementedError

    def __call__(self, theta, s):
        theta = np.asarray(theta, dtype=float)
        s = np.asarray(s, dtype=float)
        return self.apply(theta, s)

    def inverse(self) -> "SurfaceMap":
        raise NotImplementedError(f"{type(self).__name__} has no inverse")

    def __matmul__(self, other: "SurfaceMap") -> "SurfaceMap":
        return compose(self, other)

    def to_dict(self) -> dict:
        return {"kind": self.kind}

    def __repr__(self):
        return f"{type(self).__name__}({self.to_dict()})"


class Identity(SurfaceMap):
    kind = "identity"

    def apply(self, theta, s):
        return theta.copy(), s.copy()

    def inverse(self):
        return self


class Rotation(SurfaceMap):
    """Time-``t`` map of ``K(theta, s) = s``: ``theta -> theta + t / C``."""

    kind = "closed_form_rotation"

    def __init__(self, chart: AnnulusChart, t: float):
        super().__init__(chart)
        self.t = float(t)

    @property
    def shift(self) -> float:
        return self.t * self.chart.theta_rate

    def apply(self, theta, s):
        return theta + self.shift, s.copy()

    def inverse(self):
        return Rotation(self.chart, -self.t)

    def to_dict(self):
        return {"kind": self.kind, "t": self.t}


class DiskTwist(SurfaceMap):
    """Closed-form time-``t`` map of a :class:`TwistSpec`."""

    kind = "closed_form_disk_twist"

    def __init__(self, chart: AnnulusChart, spec: TwistSpec, t: float):
        super().__init__(chart)
        self.spec = spec
        self.t = float(t)
        self._table = _SectorTable.get(spec.disk.exponent)

    def apply(self, theta, s):
        disk = self.spec.disk
        u, v = disk.local(self.chart, theta, s)
        p = disk.exponent
        r = np.hypot(u, v) if p == 2.0 else (np.abs(u) ** p + np.abs(v) ** p) ** (1.0 / p)
        turn = self.t * self.spec.angle(np.minimum(r, disk.radius))
        moving = (r < disk.radius) & (turn != 0)
        out_t, out_s = theta.copy(), s.copy()
        if not np.any(moving):
            return out_t, out_s
        um, vm, rm = u[moving], v[moving], r[moving]
        phi = np.mod(np.arctan2(vm, um), TWO_PI)
        beta = np.mod(self._table.forward(phi) + turn[moving], TWO_PI)
        phi2 = self._table.backward(beta)
        c, sn = np.cos(phi2), np.sin(phi2)
        scale = rm / (np.abs(c) ** p + np.abs(sn) ** p) ** (1.0 / p) if p != 2.0 else rm
        u2, v2 = scale * c, scale * sn
        out_t[moving] = theta[moving] + (u2 - um) * disk.axes[0]
        out_s[moving] = disk.center[1] + v2 * disk.axes[1]
        return out_t, out_s

    def inverse(self):
        return DiskTwist(self.chart, self.spec, -self.t)

    def to_dict(self):
        return {"kind": self.kind, "t": self.t, "spec": self.spec.to_dict()}


class FlowMap(SurfaceMap):
    """Time-``t`` map of ``X_H`` integrated with fixed-step RK4."""

    kind = "integrated_flow"

    def __init__(self, H: ScalarField, t: float, step: float = 1e-3):
        if not step > 0:
            raise ValueError("step must be positive")
        super().__init__(H.chart)
        self.H = H
        self.t = float(t)
        self.step = float(step)

    def _field(self, theta, s):
        if np.any((s <= self.chart.s_min) | (s >= self.chart.s_max)):
            bad = np.flatnonzero((s <= self.chart.s_min) | (s >= self.chart.s_max))[0]
            raise FlowEscapeError("orbit left the chart interior",
                                  (float(theta.ravel()[bad]), float(s.ravel()[bad])))
        return hamiltonian_vector_field(self.H, theta, s)

    def apply(self, theta, s):
        n = max(1, int(math.ceil(abs(self.t) / self.step - 1e-9)))
        h = self.t / n
        th, ss = theta.astype(float), s.astype(float)
        if self.t == 0:
            return th.copy(), ss.copy()
        for _ in range(n):
            a1, b1 = self._field(th, ss)
            a2, b2 = self._field(th + 0.5 * h * a1, ss + 0.5 * h * b1)
            a3, b3 = self._field(th + 0.5 * h * a2, ss + 0.5 * h * b2)
            a4, b4 = self._field(th + h * a3, ss + h * b3)
            dth = h * (a1 + 2 * a2 + 2 * a3 + a4) / 6.0
            if np.any(np.abs(dth) >= math.pi):
                raise FlowEscapeError("theta increment too large for an unambiguous lift; reduce step",
                                      (float(th.ravel()[0]), float(ss.ravel()[0])))
            th = th + dth
            ss = ss + h * (b1 + 2 * b2 + 2 * b3 + b4) / 6.0
        self._field(th, ss)
        return th, ss

    def inverse(self):
        return FlowMap(self.H, -self.t, self.step)

    def to_dict(self):
        return {"kind": self.kind, "t": self.t, "step": self.step, "field_shape": list(self.H.shape)}


class Composition(SurfaceMap):
    """``maps[0] o maps[1] o ... o maps[-1]`` (rightmost applied first)."""

    kind = "composition"

    def __init__(self, maps: Sequence[SurfaceMap]):
        maps = tuple(maps)
        if not maps:
            raise ValueError("empty composition")
        chart = maps[0].chart
        for m in maps[1:]:
            if m.chart != chart:
                raise ValueError("cannot compose maps on different charts")
        super().__init__(chart)
        self.maps = maps

    def apply(self, theta, s):
        for m in reversed(self.maps):
            theta, s = m.apply(theta, s)
        return theta, s

    def inverse(self):
        return Composition([m.inverse() for m in reversed(self.maps)])

    def to_dict(self):
        return {"kind": self.kind, "children": [m.to_dict() for m in self.maps]}


class Iterate(SurfaceMap):
    kind = "iterate"

    def __init__(self, base: SurfaceMap, n: int):
        if int(n) != n:
            raise ValueError("iterate count must be an integer")
        super().__init__(base.chart)
        self.base = base
        self.n = int(n)

    def apply(self, theta, s):
        m = self.base if self.n >= 0 else self.base.inverse()
        theta, s = theta.copy(), s.copy()
        for _ in range(abs(self.n)):
            theta, s = m.apply(theta, s)
        return theta, s

    def inverse(self):
        return Iterate(self.base, -self.n)

    def to_dict(self):
        return {"kind": self.kind, "n": self.n, "base": self.base.to_dict()}


class PointMap(SurfaceMap):
    """A map given by an explicit vectorized function (returns unwrapped theta)."""

    kind = "closed_form"

    def __init__(self, chart: AnnulusChart, fn: Callable, name: str = "closed_form",
                 inverse_fn: Optional[Callable] = None, params: Optional[dict] = None):
        super().__init__(chart)
        self.fn = fn
        self.name = name
        self.inverse_fn = inverse_fn
        self.params = params or {}

    def apply(self, theta, s):
        t2, s2 = self.fn(theta, s)
        return np.asarray(t2, dtype=float), np.asarray(s2, dtype=float)

    def inverse(self):
        if self.inverse_fn is None:
            return super().inverse()
        return PointMap(self.chart, self.inverse_fn, f"{self.name}^-1", self.fn, self.params)

    def to_dict(self):
        return {"kind": self.kind, "name": self.name, **self.params}


# -- constructors mirroring the operations -------------------------------------------

def rotation_map(chart: AnnulusChart, t: float) -> Rotation:
    return Rotation(chart, t)


def disk_twist_map(spec: TwistSpec, t: float, chart: AnnulusChart) -> DiskTwist:
    return DiskTwist(chart, spec, t)


def flow_map(H: ScalarField, t: float, step: float = 1e-3) -> FlowMap:
    return FlowMap(H, t, step)


def compose(*maps: SurfaceMap) -> SurfaceMap:
    """``compose(f, g)(p) = f(g(p))``."""
    flat = []
    for m in maps:
        flat.extend(m.maps if isinstance(m, Composition) else (m,))
    return flat[0] if len(flat) == 1 else Composition(flat)


def iterate(f: SurfaceMap, n: int) -> SurfaceMap:
    return f if n == 1 else Iterate(f, n)


def from_dict(d: dict, chart: AnnulusChart) -> SurfaceMap:
    """Rebuild a closed-form map from its descriptor."""
    kind = d["kind"]
    if kind == "identity":
        return Identity(chart)
    if kind == Rotation.kind:
        return Rotation(chart, d["t"])
    if kind == DiskTwist.kind:
        spec = d["spec"]
        disk = spec["disk"]
        disk = DiskSpec(tuple(disk["center"]), disk["radius"], tuple(disk["axes"]), disk["exponent"])
        angle = spec["angle"]
        if angle["kind"] == "smoothstep_bump":
            prof = SmoothstepBump(angle["height"], angle["inner"], angle["outer"])
            tw = TwistSpec(disk, prof, spec["area_scale"])
        elif angle["kind"] == "generator_angle":
            g = angle["generator"]
            tw = TwistSpec.from_generator(disk, SmoothstepBump(g["height"], g["inner"], g["outer"]),
                                          spec["area_scale"])
        else:
            raise ValueError(f"unknown angle profile {angle['kind']!r}")
        return DiskTwist(chart, tw, d["t"])
    if kind == Composition.kind:
        return Composition([from_dict(c, chart) for c in d["children"]])
    if kind == Iterate.kind:
        return Iterate(from_dict(d["base"], chart), d["n"])
    raise ValueError(f"cannot rebuild map of kind {kind!r} from a descriptor")


# -- geometric helpers -------------------------------------------------------------

def enclosed_area(chart: AnnulusChart, theta, s) -> float:
    """Area enclosed by a closed polygon given with continuous (unwrapped) theta."""
    x, y = np.asarray(theta), np.asarray(s)
    signed = 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
    return chart.area_scale * abs(float(signed))


def image_area(f: SurfaceMap, disk: DiskSpec, n: int = 4096) -> float:
    """Area of ``f(disk)`` from the image of a dense boundary polygon."""
    th, s = disk.boundary(n)
    th2, s2 = f(th, s)
    return enclosed_area(f.chart, th2, s2)
