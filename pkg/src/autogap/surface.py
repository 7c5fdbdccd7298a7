"""Annulus charts, sampled scalar fields and area quadrature.

The annulus is modelled as the strip ``[0, L) x [s_min, s_max]`` with the
first coordinate periodic, carrying the area form ``C dtheta ds``.  A
:class:`ScalarField` stores samples on a regular grid.  Point evaluation is
bilinear; every area computation (quadrature of sublevel sets, Reeb measures)
uses the piecewise-linear model on the triangulation obtained by cutting each
grid cell along its ``(i, j) -> (i+1, j+1)`` diagonal.
"""

from __future__ import annotations

import base64
import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Callable, Optional

import numpy as np

TWO_PI = 2.0 * math.pi
DEFAULT_SHAPE = (512, 512)
FIELD_FORMAT = "autogap.scalar_field/1"


class DomainError(ValueError):
    """A point lies outside the strip of the chart."""


@dataclass(frozen=True)
class AnnulusChart:
    """Coordinates ``(theta, s)`` on ``S^1 x [s_min, s_max]``.

    ``area_scale`` is the constant ``C`` of the area form ``C dtheta ds``.
    """

    s_min: float
    s_max: float
    circumference: float = TWO_PI
    area_scale: float = 1.0

    def __post_init__(self):
        if not self.s_min < self.s_max:
            raise ValueError(f"need s_min < s_max, got {self.s_min}, {self.s_max}")
        if not self.circumference > 0 or not self.area_scale > 0:
            raise ValueError("circumference and area_scale must be positive")
        if not math.isfinite(self.total_area):
            raise ValueError("total area must be finite")

    @classmethod
    def unit_area(cls) -> "AnnulusChart":
        """``S^1 x [0, 1]`` with ``omega = dtheta ds / 2pi`` (total area 1)."""
        return cls(0.0, 1.0, TWO_PI, 1.0 / TWO_PI)

    @classmethod
    def wide(cls) -> "AnnulusChart":
        """``S^1 x [-2, 2]`` with ``omega = dtheta ds`` (total area 8 pi)."""
        return cls(-2.0, 2.0, TWO_PI, 1.0)

    @property
    def height(self) -> float:
        return self.s_max - self.s_min

    @property
    def total_area(self) -> float:
        return self.area_scale * self.circumference * (self.s_max - self.s_min)

    @property
    def theta_rate(self) -> float:
        """Speed in theta of the flow of ``K(theta, s) = s``."""
        return 1.0 / self.area_scale

    def wrap(self, theta):
        return np.mod(theta, self.circumference)

    def dtheta(self, theta1, theta0):
        """Difference ``theta1 - theta0`` reduced to ``[-L/2, L/2)``."""
        half = 0.5 * self.circumference
        return np.mod(np.asarray(theta1) - theta0 + half, self.circumference) - half

    def check_strip(self, s, *, strict: bool = False) -> None:
        s = np.asarray(s)
        if strict:
            bad = (s <= self.s_min) | (s >= self.s_max)
        else:
            bad = (s < self.s_min) | (s > self.s_max)
        if np.any(bad | ~np.isfinite(s)):
            where = "interior" if strict else "strip"
            raise DomainError(f"point with s={s[bad].ravel()[:3]} outside the chart {where}")

    def to_dict(self) -> dict:
        return {
            "s_min": self.s_min,
            "s_max": self.s_max,
            "circumference": self.circumference,
            "area_scale": self.area_scale,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AnnulusChart":
        return cls(float(d["s_min"]), float(d["s_max"]),
                   float(d.get("circumference", TWO_PI)), float(d.get("area_scale", 1.0)))


def unit_ball_area(p: float) -> float:
    """Area of the unit ball of the ``l^p`` norm in the plane."""
    return 4.0 * math.gamma(1.0 + 1.0 / p) ** 2 / math.gamma(1.0 + 2.0 / p)


@dataclass(frozen=True)
class DiskSpec:
    """A disk ``{gauge < radius}`` in chart coordinates.

    With the defaults it is the round disk of the given radius.  ``axes`` and
    ``exponent`` turn it into the superellipse
    ``(|dtheta| / a)^p + (|ds| / b)^p < radius^p``, which is needed when a
    topological disk must fill most of a thin annulus.
    """

    center: tuple[float, float]
    radius: float
    axes: tuple[float, float] = (1.0, 1.0)
    exponent: float = 2.0

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if min(self.axes) <= 0 or self.exponent < 1:
            raise ValueError("axes must be positive and exponent >= 1")

    def local(self, chart: AnnulusChart, theta, s):
        """Normalized offsets ``(u, v)`` from the center."""
        u = chart.dtheta(theta, self.center[0]) / self.axes[0]
        v = (np.asarray(s, dtype=float) - self.center[1]) / self.axes[1]
        return u, v

    def from_local(self, u, v):
        """Chart point (unwrapped theta) for normalized offsets."""
        return self.center[0] + u * self.axes[0], self.center[1] + v * self.axes[1]

    def gauge(self, chart: AnnulusChart, theta, s):
        u, v = self.local(chart, theta, s)
        p = self.exponent
        if p == 2.0:
            return np.hypot(u, v)
        return (np.abs(u) ** p + np.abs(v) ** p) ** (1.0 / p)

    def contains(self, chart: AnnulusChart, theta, s):
        return self.gauge(chart, theta, s) < self.radius

    def coordinate_area(self, radius: Optional[float] = None) -> float:
        r = self.radius if radius is None else radius
        return r * r * self.axes[0] * self.axes[1] * unit_ball_area(self.exponent)

    def area(self, chart: AnnulusChart, radius: Optional[float] = None) -> float:
        return chart.area_scale * self.coordinate_area(radius)

    def scaled(self, radius: float) -> "DiskSpec":
        return DiskSpec(self.center, radius, self.axes, self.exponent)

    def check_inside(self, chart: AnnulusChart) -> None:
        half_s = self.radius * self.axes[1]
        half_t = self.radius * self.axes[0]
        if (self.center[1] - half_s <= chart.s_min or self.center[1] + half_s >= chart.s_max
                or 2 * half_t >= chart.circumference):
            raise DomainError("disk is not contained in the open annulus")

    def boundary(self, n: int, radius: Optional[float] = None):
        """``n`` points on the boundary curve, counterclockwise."""
        r = self.radius if radius is None else radius
        phi = np.linspace(0.0, TWO_PI, n, endpoint=False)
        c, sn = np.cos(phi), np.sin(phi)
        scale = r / (np.abs(c) ** self.exponent + np.abs(sn) ** self.exponent) ** (1.0 / self.exponent)
        return self.from_local(scale * c, scale * sn)

    def sample(self, n: int, radius: Optional[float] = None):
        """``n`` deterministic, area-uniform points filling the closed disk."""
        r = self.radius if radius is None else radius
        k = np.arange(n) + 0.5
        rho = r * np.sqrt(k / n)
        rho[-1] = r
        phi = k * math.pi * (3.0 - math.sqrt(5.0))
        c, sn = np.cos(phi), np.sin(phi)
        norm = (np.abs(c) ** self.exponent + np.abs(sn) ** self.exponent) ** (1.0 / self.exponent)
        return self.from_local(rho * c / norm, rho * sn / norm)

    def to_dict(self) -> dict:
        return {"center": list(self.center), "radius": self.radius,
                "axes": list(self.axes), "exponent": self.exponent}


def smoothstep(x):
    """C^1 ramp ``3x^2 - 2x^3`` clamped to [0, 1]."""
    x = np.clip(x, 0.0, 1.0)
    return x * x * (3.0 - 2.0 * x)


def triangle_sublevel(f, area, c):
    """Area of ``{f < c}`` in linear triangles.

    ``f`` has shape (N, 3) and must be sorted along the last axis.  ``c`` is a
    scalar or an array broadcastable against ``area``.
    """
    f0, f1, f2 = f[..., 0], f[..., 1], f[..., 2]
    c = np.broadcast_to(np.asarray(c, dtype=float), f0.shape)
    out = np.zeros_like(f0, dtype=float)
    full = c >= f2
    out[full] = area[full]
    lower = (c > f0) & (c <= f1) & ~full
    # products of two ratios in [0, 1] rather than a quotient by a product, which underflows
    if np.any(lower):
        x = c[lower] - f0[lower]
        out[lower] = area[lower] * (x / (f1[lower] - f0[lower])) * (x / (f2[lower] - f0[lower]))
    upper = (c > f1) & (c < f2)
    if np.any(upper):
        y = f2[upper] - c[upper]
        out[upper] = area[upper] * (1.0 - (y / (f2[upper] - f0[upper])) * (y / (f2[upper] - f1[upper])))
    return out


class ScalarField:
    """Real samples on an ``n_theta x n_s`` grid of an annulus chart.

    Row ``i`` sits at ``theta = i * L / n_theta`` (row ``n_theta`` is row 0
    again); column ``j`` at ``s = s_min + j * (s_max - s_min) / (n_s - 1)``.

    ``source``, when present, is the exact function the grid was sampled
    from.  It never changes what :meth:`eval` returns; flows use it to get
    derivatives free of grid error.
    """

    def __init__(self, chart: AnnulusChart, values, source: Optional[Callable] = None):
        values = np.array(values, dtype=float)
        if values.ndim != 2 or values.shape[0] < 3 or values.shape[1] < 2:
            raise ValueError(f"expected an (n_theta >= 3, n_s >= 2) grid, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        values.setflags(write=False)
        self.chart = chart
        self.values = values
        self.source = source

    @classmethod
    def from_function(cls, chart: AnnulusChart, fn: Callable, shape=DEFAULT_SHAPE,
                      keep_source: bool = True) -> "ScalarField":
        n_theta, n_s = shape
        th = np.arange(n_theta) * (chart.circumference / n_theta)
        ss = np.linspace(chart.s_min, chart.s_max, n_s)
        tt, sg = np.meshgrid(th, ss, indexing="ij")
        vals = np.broadcast_to(np.asarray(fn(tt, sg), dtype=float), tt.shape)
        return cls(chart, vals, fn if keep_source else None)

    @classmethod
    def constant(cls, chart: AnnulusChart, value: float = 0.0, shape=DEFAULT_SHAPE) -> "ScalarField":
        return cls.from_function(chart, lambda t, s: np.full(np.shape(t), float(value)), shape)

    def __repr__(self):
        return f"ScalarField(shape={self.shape}, chart={self.chart})"

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def dtheta(self) -> float:
        return self.chart.circumference / self.shape[0]

    @property
    def ds(self) -> float:
        return self.chart.height / (self.shape[1] - 1)

    @property
    def cell_area(self) -> float:
        return self.chart.area_scale * self.dtheta * self.ds

    @property
    def thetas(self) -> np.ndarray:
        return np.arange(self.shape[0]) * self.dtheta

    @property
    def ss(self) -> np.ndarray:
        return np.linspace(self.chart.s_min, self.chart.s_max, self.shape[1])

    # -- arithmetic ---------------------------------------------------------

    def _combine(self, other, op):
        if isinstance(other, ScalarField):
            if other.chart != self.chart or other.shape != self.shape:
                raise ValueError("fields live on different grids")
            src = None
            if self.source is not None and other.source is not None:
                a, b = self.source, other.source
                src = lambda t, s: op(a(t, s), b(t, s))  # noqa: E731
            return ScalarField(self.chart, op(self.values, other.values), src)
        k = float(other)
        src = None
        if self.source is not None:
            a = self.source
            src = lambda t, s: op(a(t, s), k)  # noqa: E731
        return ScalarField(self.chart, op(self.values, k), src)

    def __add__(self, other):
        return self._combine(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, other):
        return self._combine(other, np.multiply)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    # -- evaluation ----------------------------------------------------------

    def eval(self, theta, s):
        """Bilinear interpolation; theta wraps, s outside the strip raises."""
        theta = np.asarray(theta, dtype=float)
        s = np.asarray(s, dtype=float)
        self.chart.check_strip(s)
        n_theta, n_s = self.shape
        x = self.chart.wrap(theta) / self.dtheta
        i0 = np.floor(x).astype(np.intp)
        fx = x - i0
        i0 %= n_theta
        i1 = (i0 + 1) % n_theta
        y = (s - self.chart.s_min) / self.ds
        j0 = np.clip(np.floor(y).astype(np.intp), 0, n_s - 2)
        fy = y - j0
        v = self.values
        return ((1 - fx) * ((1 - fy) * v[i0, j0] + fy * v[i0, j0 + 1])
                + fx * ((1 - fy) * v[i1, j0] + fy * v[i1, j0 + 1]))

    __call__ = eval

    @cached_property
    def grid_gradient(self) -> tuple[np.ndarray, np.ndarray]:
        """Centered differences ``(dF/dtheta, dF/ds)`` at the grid nodes."""
        v = self.values
        d_theta = (np.roll(v, -1, axis=0) - np.roll(v, 1, axis=0)) / (2 * self.dtheta)
        d_s = np.gradient(v, self.ds, axis=1, edge_order=2)
        return d_theta, d_s

    # -- quadrature ----------------------------------------------------------

    def integrate(self) -> float:
        """Trapezoid rule for the integral of the field against ``C dtheta ds``."""
        col = np.trapezoid(self.values, dx=self.ds, axis=1)
        return float(self.chart.area_scale * self.dtheta * col.sum())

    @cached_property
    def triangles(self) -> np.ndarray:
        """Vertex indices (flat, theta-major) of the grid triangulation, shape (N, 3)."""
        n_theta, n_s = self.shape
        i = np.arange(n_theta)[:, None]
        j = np.arange(n_s - 1)[None, :]
        v00 = i * n_s + j
        v10 = ((i + 1) % n_theta) * n_s + j
        v11 = v10 + 1
        v01 = v00 + 1
        t1 = np.stack([v00, v10, v11], axis=-1).reshape(-1, 3)
        t2 = np.stack([v00, v11, v01], axis=-1).reshape(-1, 3)
        return np.concatenate([t1, t2])

    @property
    def triangle_area(self) -> float:
        return 0.5 * self.cell_area

    @cached_property
    def _sorted_triangle_values(self) -> np.ndarray:
        return np.sort(self.values.ravel()[self.triangles], axis=1)

    def sublevel_area(self, c: float) -> float:
        """Area of ``{F < c}`` for the piecewise-linear model."""
        f = self._sorted_triangle_values
        lo, hi = f[:, 0].min(), f[:, 2].max()
        if c <= lo:
            return 0.0
        if c > hi:
            return self.chart.total_area
        area = np.full(len(f), self.triangle_area)
        return float(triangle_sublevel(f, area, c).sum())

    # -- serialization -------------------------------------------------------

    def to_json(self) -> str:
        payload = np.ascontiguousarray(self.values, dtype="<f8").tobytes()
        header = {
            "format": FIELD_FORMAT,
            "chart": self.chart.to_dict(),
            "shape": list(self.shape),
            "dtype": "<f8",
            "order": "theta-major",
            "data": base64.b64encode(payload).decode("ascii"),
        }
        return json.dumps(header, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ScalarField":
        d = json.loads(text)
        if d.get("format") != FIELD_FORMAT:
            raise ValueError(f"not a scalar field document: {d.get('format')!r}")
        shape = tuple(int(k) for k in d["shape"])
        raw = np.frombuffer(base64.b64decode(d["data"]), dtype=d.get("dtype", "<f8"))
        return cls(AnnulusChart.from_dict(d["chart"]), raw.reshape(shape))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "ScalarField":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def evaluate(field: ScalarField, theta, s):
    return field.eval(theta, s)


def integrate(field: ScalarField) -> float:
    return field.integrate()


def sublevel_area(field: ScalarField, c: float) -> float:
    return field.sublevel_area(c)
