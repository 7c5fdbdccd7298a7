"""Calabi invariants of autonomous maps and the percentile evaluators ``r_{a,b}``.

An autonomous map is represented by its generating function ``F`` (the map is
the time-1 flow of ``F``).  Gluing disks of areas ``a`` and ``b`` to the
bottom and top circles of the annulus gives a sphere on which ``F`` extends
by zero.  On that sphere

    Cal_S2(F) = int F - area * F(median of the capped tree)

and ``r_{a,b}(F) = (Cal(F) - Cal_S2(F)) / area`` is the value of ``F`` at the
median, which is the ``h``-percentile of the uncapped tree for
``h = (A + b - a) / (2A)`` whenever that percentile exists.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .reeb import Gap, ReebTree, TreePoint, reeb_tree
from .surface import ScalarField


class SupportError(ValueError):
    """The generating function does not vanish on the boundary of the annulus."""


class ConsistencyError(RuntimeError):
    """The median formula and the percentile evaluation disagree."""


@dataclass(frozen=True)
class CapSpec:
    """Areas of the disks glued to the bottom (``a``) and top (``b``) circles."""

    a: float
    b: float

    def __post_init__(self):
        if self.a < 0 or self.b < 0 or not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ValueError(f"cap areas must be finite and non-negative, got ({self.a}, {self.b})")

    @classmethod
    def for_percentile(cls, h: float) -> "CapSpec":
        """Caps ``(1, 2h)``: the median sits at the ``h``-percentile of a unit-area annulus."""
        return cls(1.0, 2.0 * h)

    @classmethod
    def around_disk(cls, h: float, low: float = 0.2, high: float = 0.8) -> "CapSpec":
        """Caps ``(high - h, h - low)`` making the total area ``1 + high - low``."""
        return cls(high - h, h - low)

    def sphere_area(self, annulus_area: float = 1.0) -> float:
        return annulus_area + self.a + self.b

    def h(self, annulus_area: float = 1.0) -> float:
        """Fraction ``(A + b - a) / (2A)``; equals ``(1 + b - a) / 2`` for unit area."""
        return (annulus_area + self.b - self.a) / (2.0 * annulus_area)

    def to_dict(self) -> dict:
        return {"a": self.a, "b": self.b}


def _check_support(F: ScalarField, rel: float = 1e-12) -> None:
    v = F.values
    scale = max(1.0, float(np.abs(v).max()))
    edge = max(float(np.abs(v[:, 0]).max()), float(np.abs(v[:, -1]).max()))
    if edge > rel * scale:
        raise SupportError(f"field does not vanish on the boundary (max |F| there = {edge:.3g})")


def calabi(F: ScalarField) -> float:
    """``int F omega`` for ``F`` vanishing on both boundary circles."""
    _check_support(F)
    return F.integrate()


def capped_tree(F: ScalarField, caps: CapSpec, tree: Optional[ReebTree] = None) -> ReebTree:
    _check_support(F)
    tree = tree if tree is not None else reeb_tree(F)
    return tree.capped(caps.a, caps.b, 0.0, 0.0)


def sphere_median(F: ScalarField, caps: CapSpec, tree: Optional[ReebTree] = None) -> TreePoint:
    return capped_tree(F, caps, tree).median()


def calabi_sphere_autonomous(F: ScalarField, caps: CapSpec, tree: Optional[ReebTree] = None) -> float:
    """``int F - area(S^2) * F(median)`` on the capped sphere."""
    x = sphere_median(F, caps, tree)
    return calabi(F) - caps.sphere_area(F.chart.total_area) * x.value


@dataclass(frozen=True)
class RabResult:
    """Value of ``r_{a,b}`` on an autonomous map with its percentile bookkeeping."""

    value: float
    h: float
    caps: CapSpec
    median: TreePoint
    percentile_value: Optional[float]
    gap: Optional[Gap]
    difference_value: float

    @property
    def percentile_exists(self) -> bool:
        return self.percentile_value is not None

    @property
    def at_attachment(self) -> bool:
        return self.median.at_attachment

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "h": self.h,
            "caps": self.caps.to_dict(),
            "median": self.median.to_dict(),
            "percentile_value": self.percentile_value,
            "gap": None if self.gap is None else self.gap.to_dict(),
            "difference_value": self.difference_value,
        }


def r_ab_autonomous(F: ScalarField, caps: CapSpec, tree: Optional[ReebTree] = None,
                    rel_tol: float = 1e-3) -> RabResult:
    """``r_{a,b}`` of the time-1 map of ``F``.

    The value is ``F`` at the median of the capped tree.  When the
    ``h``-percentile of ``F`` exists it must give the same value (checked to
    ``rel_tol * sup|F|``); when ``h`` lies in a gap the gap is reported.
    """
    _check_support(F)
    tree = tree if tree is not None else reeb_tree(F)
    area = F.chart.total_area
    capped = tree.capped(caps.a, caps.b, 0.0, 0.0)
    x = capped.median()
    sphere = caps.sphere_area(area)
    cal = calabi(F)
    cal_s2 = cal - sphere * x.value
    diff_value = (cal - cal_s2) / sphere
    h = caps.h(area)
    pct = None
    gap = None
    if 0.0 <= h <= 1.0:
        res = tree.percentile(h)
        gap = res.gap
        if res.exists:
            pct = res.value
            scale = max(float(np.abs(F.values).max()), 1e-300)
            if abs(pct - x.value) > rel_tol * scale:
                raise ConsistencyError(
                    f"median value {x.value:.12g} differs from the {h:.6g}-percentile value {pct:.12g}")
            if res.point.at_attachment:
                x = TreePoint(x.value, x.node, x.edge, x.offset, True)
    return RabResult(float(x.value), h, caps, x, pct, gap, float(diff_value))


def r_ab_sum_commuting(values: Iterable) -> float:
    """Sum of ``r_{a,b}`` over commuting factors (results or plain numbers)."""
    total = 0.0
    for v in values:
        total += v.value if isinstance(v, RabResult) else float(v)
    return total
