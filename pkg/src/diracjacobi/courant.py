"""Pairings and brackets on TM + T*M and on E1(M) = (TM x R) + (T*M x R).

Two brackets are implemented verbatim and never converted into each other:
the (non-skew) Courant bracket on sections X + xi of TM + T*M,

    [X1 + xi1, X2 + xi2] = [X1, X2] + L_{X1} xi2 - i_{X2} d xi1,

and the skew extended bracket on quadruples (X, f) + (xi, g) of E1(M).  The
two differ by an exact symmetric correction that vanishes on isotropic
subbundles; tests document this.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .chart_tensor import (
    Chart,
    ChartError,
    DifferentialForm,
    VectorField,
    differential,
    exterior_derivative,
    interior_product,
    lie_bracket,
    lie_derivative,
    _require_same_chart,
)
from .symcalc import Expr, ZERO, as_expr, evaluate, is_structurally_zero, normalize


from fractions import Fraction

HALF = as_expr(Fraction(1, 2))


def _half(e: Expr) -> Expr:
    return HALF * e


@dataclass(frozen=True)
class SectionTM:
    """A section X + xi of TM + T*M over one chart."""

    X: VectorField
    xi: DifferentialForm

    def __post_init__(self):
        if self.xi.degree != 1:
            raise ChartError("the form part of a TM+T*M section must have degree 1")
        _require_same_chart(self.X, self.xi)

    @property
    def chart(self) -> Chart:
        return self.X.chart

    @classmethod
    def zero(cls, chart: Chart) -> "SectionTM":
        return cls(VectorField.zero(chart), DifferentialForm.zero(chart, 1))

    def scale(self, f: Expr | int) -> "SectionTM":
        f = as_expr(f)
        return SectionTM(self.X.scale(f), self.xi.scale(f))

    def __add__(self, other: "SectionTM") -> "SectionTM":
        return SectionTM(self.X + other.X, self.xi + other.xi)

    def __sub__(self, other: "SectionTM") -> "SectionTM":
        return self + other.scale(-1)

    def __neg__(self) -> "SectionTM":
        return self.scale(-1)

    def flip_form(self) -> "SectionTM":
        """Negate the form part (used by anti-Dirac comparisons)."""
        return SectionTM(self.X, -self.xi)

    def at(self, point: Mapping[str, float]) -> np.ndarray:
        """Fiber vector (X components, xi components) in R^{2n}."""
        return np.concatenate([self.X.at(point), self.xi.covector_at(point)])

    def is_structurally_zero(self) -> bool:
        return self.X.is_zero_field and self.xi.is_zero_table


@dataclass(frozen=True)
class SectionE1:
    """A section (X, f) + (xi, g) of E1(M) over one chart."""

    X: VectorField
    f: Expr
    xi: DifferentialForm
    g: Expr

    def __post_init__(self):
        if self.xi.degree != 1:
            raise ChartError("the form part of an E1 section must have degree 1")
        _require_same_chart(self.X, self.xi)
        object.__setattr__(self, "f", normalize(as_expr(self.f)))
        object.__setattr__(self, "g", normalize(as_expr(self.g)))

    @property
    def chart(self) -> Chart:
        return self.X.chart

    @classmethod
    def zero(cls, chart: Chart) -> "SectionE1":
        return cls(VectorField.zero(chart), ZERO, DifferentialForm.zero(chart, 1), ZERO)

    def scale(self, h: Expr | int) -> "SectionE1":
        h = as_expr(h)
        return SectionE1(self.X.scale(h), h * self.f, self.xi.scale(h), h * self.g)

    def __add__(self, other: "SectionE1") -> "SectionE1":
        return SectionE1(
            self.X + other.X, self.f + other.f, self.xi + other.xi, self.g + other.g
        )

    def __sub__(self, other: "SectionE1") -> "SectionE1":
        return self + other.scale(-1)

    def __neg__(self) -> "SectionE1":
        return self.scale(-1)

    def flip_form(self) -> "SectionE1":
        """Negate the (xi, g) half (used by anti-Dirac comparisons)."""
        return SectionE1(self.X, self.f, -self.xi, normalize(as_expr(-1) * self.g))

    def at(self, point: Mapping[str, float]) -> np.ndarray:
        """Fiber vector (X, f, xi, g) in R^{2n+2}."""
        return np.concatenate(
            [
                self.X.at(point),
                [float(evaluate(self.f, point))],
                self.xi.covector_at(point),
                [float(evaluate(self.g, point))],
            ]
        )

    def is_structurally_zero(self) -> bool:
        return (
            self.X.is_zero_field
            and is_structurally_zero(self.f)
            and self.xi.is_zero_table
            and is_structurally_zero(self.g)
        )


# --------------------------------------------------------------------------
# pairings
# --------------------------------------------------------------------------


def pairing_tm(a: SectionTM, b: SectionTM) -> Expr:
    """<X1 + xi1, X2 + xi2> = (xi1(X2) + xi2(X1)) / 2."""
    _require_same_chart(a.X, b.X)
    return _half(
        interior_product(b.X, a.xi).scalar() + interior_product(a.X, b.xi).scalar()
    )


def pairing_e1(a: SectionE1, b: SectionE1) -> Expr:
    """<(X1,f1)+(xi1,g1), (X2,f2)+(xi2,g2)> = (i_{X2} xi1 + i_{X1} xi2 + f1 g2 + f2 g1)/2."""
    _require_same_chart(a.X, b.X)
    return _half(
        interior_product(b.X, a.xi).scalar()
        + interior_product(a.X, b.xi).scalar()
        + a.f * b.g
        + b.f * a.g
    )


# --------------------------------------------------------------------------
# brackets
# --------------------------------------------------------------------------


def courant_bracket(a: SectionTM, b: SectionTM) -> SectionTM:
    """[X1+xi1, X2+xi2] = [X1,X2] + L_{X1} xi2 - i_{X2} d xi1 (not skew in general)."""
    _require_same_chart(a.X, b.X)
    return SectionTM(
        lie_bracket(a.X, b.X),
        lie_derivative(a.X, b.xi) - interior_product(b.X, exterior_derivative(a.xi)),
    )


def extended_courant_bracket(a: SectionE1, b: SectionE1) -> SectionE1:
    """The skew bracket on E1(M) sections, all four slots.

    vector:  [X1, X2]
    scalar:  X1(f2) - X2(f1)
    form:    L_{X1} xi2 - L_{X2} xi1 + d(i_{X2} xi1 - i_{X1} xi2)/2
             + f1 xi2 - f2 xi1 + (g2 df1 - g1 df2 - f1 dg2 + f2 dg1)/2
    scalar:  X1(g2) - X2(g1) + (i_{X2} xi1 - i_{X1} xi2 - f2 g1 + f1 g2)/2
    """
    _require_same_chart(a.X, b.X)
    chart = a.chart
    i21 = interior_product(b.X, a.xi).scalar()  # i_{X2} xi1
    i12 = interior_product(a.X, b.xi).scalar()  # i_{X1} xi2

    vector = lie_bracket(a.X, b.X)
    f_slot = a.X.apply(b.f) - b.X.apply(a.f)
    form = (
        lie_derivative(a.X, b.xi)
        - lie_derivative(b.X, a.xi)
        + differential(chart, i21 - i12).scale(HALF)
        + b.xi.scale(a.f)
        - a.xi.scale(b.f)
        + (
            differential(chart, a.f).scale(b.g)
            - differential(chart, b.f).scale(a.g)
            - differential(chart, b.g).scale(a.f)
            + differential(chart, a.g).scale(b.f)
        ).scale(HALF)
    )
    g_slot = a.X.apply(b.g) - b.X.apply(a.g) + _half(i21 - i12 - b.f * a.g + a.f * b.g)
    return SectionE1(vector, f_slot, form, g_slot)
