"""Tensor calculus on a single coordinate chart.

A chart is an open box in R^n with named coordinates.  Vector fields,
differential forms, and multivectors hold one symbolic expression per
component; forms and multivectors are stored sparsely over strictly
increasing index tuples, with antisymmetry enforced at construction.

Conventions (fixed once, used everywhere):

* interior product contracts the FIRST slot: (i_X w)(Y1,...) = w(X, Y1,...);
* sharp of a bivector P is P#(a)(b) = P(a, b), so (dx^dy)#(dx) = dy;
* Lie derivative of forms is implemented by the direct component formula,
  so the Cartan identity L_X = i_X d + d i_X remains a genuine cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .symcalc import (
    Expr,
    Neg,
    ZERO,
    ONE,
    as_expr,
    coord,
    differentiate,
    evaluate,
    free_coordinates,
    is_structurally_zero,
    normalize,
    substitute,
)


_RESERVED = {"exp", "ln", "sin", "cos"}


class ChartError(ValueError):
    """Ill-formed chart data or a chart mismatch between operands."""


@dataclass(frozen=True)
class Chart:
    """Named open box in R^n with an ordered tuple of coordinate names."""

    name: str
    coords: tuple[str, ...]

    def __post_init__(self):
        if len(self.coords) < 1:
            raise ChartError(f"chart '{self.name}' needs at least one coordinate")
        if len(set(self.coords)) != len(self.coords):
            raise ChartError(f"chart '{self.name}' has duplicate coordinates")
        bad = _RESERVED.intersection(self.coords)
        if bad:
            raise ChartError(f"chart '{self.name}' uses reserved names {sorted(bad)}")

    @property
    def dim(self) -> int:
        return len(self.coords)

    def index(self, name: str) -> int:
        try:
            return self.coords.index(name)
        except ValueError:
            raise ChartError(f"chart '{self.name}' has no coordinate '{name}'") from None

    def array_point(self, point: Mapping[str, float]) -> np.ndarray:
        return np.array([float(point[c]) for c in self.coords], dtype=float)

    def dict_point(self, values: Sequence[float]) -> dict[str, float]:
        return {c: float(v) for c, v in zip(self.coords, values)}


def product_chart(base: Chart, extra: str, name: str | None = None) -> Chart:
    """The chart of base x R with one appended coordinate."""
    if extra in base.coords:
        raise ChartError(f"coordinate '{extra}' already present in chart '{base.name}'")
    return Chart(name or f"{base.name}x{extra}", base.coords + (extra,))


def _require_same_chart(a, b) -> None:
    if a.chart != b.chart:
        raise ChartError(f"chart mismatch: '{a.chart.name}' vs '{b.chart.name}'")


def _check_expr_coords(chart: Chart, e: Expr, what: str) -> None:
    extra = free_coordinates(e) - set(chart.coords)
    if extra:
        raise ChartError(f"{what} uses symbols {sorted(extra)} not in chart '{chart.name}'")


# --------------------------------------------------------------------------
# vector fields
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class VectorField:
    chart: Chart
    components: tuple[Expr, ...]

    def __post_init__(self):
        if len(self.components) != self.chart.dim:
            raise ChartError(
                f"vector field on '{self.chart.name}' needs {self.chart.dim} components"
            )
        for c in self.components:
            _check_expr_coords(self.chart, c, "vector field component")

    @classmethod
    def from_dict(cls, chart: Chart, components: Mapping[str, Expr | int]) -> "VectorField":
        comps = [ZERO] * chart.dim
        for name, e in components.items():
            comps[chart.index(name)] = normalize(as_expr(e))
        return cls(chart, tuple(comps))

    @classmethod
    def zero(cls, chart: Chart) -> "VectorField":
        return cls(chart, (ZERO,) * chart.dim)

    def apply(self, f: Expr) -> Expr:
        """Directional derivative X(f) = sum_i X^i df/dx_i."""
        out: Expr = ZERO
        for name, comp in zip(self.chart.coords, self.components):
            if not is_structurally_zero(comp):
                out = out + comp * differentiate(f, name)
        return out

    def at(self, point: Mapping[str, float]) -> np.ndarray:
        return np.array([float(evaluate(c, point)) for c in self.components], dtype=float)

    def scale(self, f: Expr | int) -> "VectorField":
        f = as_expr(f)
        return VectorField(self.chart, tuple(f * c for c in self.components))

    def __add__(self, other: "VectorField") -> "VectorField":
        _require_same_chart(self, other)
        return VectorField(
            self.chart, tuple(a + b for a, b in zip(self.components, other.components))
        )

    def __sub__(self, other: "VectorField") -> "VectorField":
        return self + other.scale(-1)

    def __neg__(self) -> "VectorField":
        return self.scale(-1)

    @property
    def is_zero_field(self) -> bool:
        return all(is_structurally_zero(c) for c in self.components)


def coordinate_field(chart: Chart, name: str) -> VectorField:
    comps = [ZERO] * chart.dim
    comps[chart.index(name)] = ONE
    return VectorField(chart, tuple(comps))


# --------------------------------------------------------------------------
# alternating coefficient tables (forms and multivectors)
# --------------------------------------------------------------------------


def _sorted_index(idx: Sequence[int]) -> tuple[tuple[int, ...] | None, int]:
    """Sort an index tuple, returning (sorted tuple, permutation sign).

    Returns (None, 0) when an index repeats (the coefficient dies).
    """
    idx = list(idx)
    sign = 1
    # insertion sort, counting transpositions
    for i in range(1, len(idx)):
        j = i
        while j > 0 and idx[j - 1] > idx[j]:
            idx[j - 1], idx[j] = idx[j], idx[j - 1]
            sign = -sign
            j -= 1
    for a, b in zip(idx, idx[1:]):
        if a == b:
            return None, 0
    return tuple(idx), sign


def _merge_sign(left: tuple[int, ...], right: tuple[int, ...]) -> tuple[tuple[int, ...] | None, int]:
    return _sorted_index(left + right)


class _AlternatingTable:
    """Shared machinery for DifferentialForm and Multivector."""

    kind: str = "table"

    def __init__(self, chart: Chart, degree: int, entries):
        # degree > dim is allowed and forces the zero table (no strictly
        # increasing index tuple exists), so d of a top form is representable
        if degree < 0:
            raise ChartError("degree must be >= 0")
        table: dict[tuple[int, ...], Expr] = {}
        for idx, e in dict(entries).items():
            key, sign = _sorted_index(tuple(idx))
            if key is None:
                continue
            if len(key) != degree:
                raise ChartError(f"index {idx} does not match degree {degree}")
            if key and (key[0] < 0 or key[-1] >= chart.dim):
                raise ChartError(f"index {idx} out of range for chart '{chart.name}'")
            e = normalize(as_expr(e) if sign > 0 else Neg(as_expr(e)))
            _check_expr_coords(chart, e, f"{self.kind} coefficient")
            if key in table:
                e = table[key] + e
            table[key] = e
        self.chart = chart
        self.degree = degree
        self.entries: tuple[tuple[tuple[int, ...], Expr], ...] = tuple(
            (k, v) for k, v in sorted(table.items()) if not is_structurally_zero(v)
        )

    # -- construction helpers ------------------------------------------------

    @classmethod
    def zero(cls, chart: Chart, degree: int):
        return cls(chart, degree, {})

    @classmethod
    def from_scalar(cls, chart: Chart, e: Expr):
        return cls(chart, 0, {(): e})

    @classmethod
    def from_names(cls, chart: Chart, degree: int, coeffs: Mapping[Sequence[str], Expr | int]):
        table = {}
        for names, e in coeffs.items():
            if isinstance(names, str):
                names = tuple(n for n in names.replace(" ", "").split(",") if n)
            idx = tuple(chart.index(n) for n in names)
            table[idx] = table.get(idx, ZERO) + as_expr(e) if idx in table else as_expr(e)
        return cls(chart, degree, table)

    # -- queries ---------------------------------------------------------

    def coefficient(self, idx: Sequence[int]) -> Expr:
        key, sign = _sorted_index(tuple(idx))
        if key is None:
            return ZERO
        for k, v in self.entries:
            if k == key:
                return v if sign > 0 else normalize(Neg(v))
        return ZERO

    @property
    def is_zero_table(self) -> bool:
        return not self.entries

    def coefficients(self) -> tuple[Expr, ...]:
        return tuple(v for _, v in self.entries)

    def scalar(self) -> Expr:
        if self.degree != 0:
            raise ChartError("scalar() only applies in degree 0")
        return self.entries[0][1] if self.entries else ZERO

    # -- linear structure --------------------------------------------------

    def _binary(self, other, flip: int):
        _require_same_chart(self, other)
        if self.degree != other.degree:
            raise ChartError("degree mismatch")
        table = dict(self.entries)
        for k, v in other.entries:
            v = v if flip > 0 else normalize(Neg(v))
            table[k] = table[k] + v if k in table else v
        return type(self)(self.chart, self.degree, table)

    def __add__(self, other):
        return self._binary(other, +1)

    def __sub__(self, other):
        return self._binary(other, -1)

    def scale(self, f: Expr | int):
        f = as_expr(f)
        return type(self)(self.chart, self.degree, {k: f * v for k, v in self.entries})

    def __neg__(self):
        return self.scale(-1)

    def __eq__(self, other) -> bool:
        return (
            type(self) is type(other)
            and self.chart == other.chart
            and self.degree == other.degree
            and self.entries == other.entries
        )

    def __hash__(self):
        return hash((type(self).__name__, self.chart, self.degree, self.entries))

    def __repr__(self):
        if not self.entries:
            return f"{type(self).__name__}(0; degree {self.degree} on {self.chart.name})"
        marker = "d" if self.kind == "form" else "@"
        parts = []
        for k, v in self.entries:
            basis = ("^".join(f"{marker}{self.chart.coords[i]}" for i in k)) or "1"
            parts.append(f"({v})*{basis}")
        return " + ".join(parts)

    # -- pointwise values --------------------------------------------------

    def at(self, point: Mapping[str, float]) -> dict[tuple[int, ...], float]:
        return {k: float(evaluate(v, point)) for k, v in self.entries}

    def covector_at(self, point: Mapping[str, float]) -> np.ndarray:
        if self.degree != 1:
            raise ChartError("covector_at needs degree 1")
        out = np.zeros(self.chart.dim)
        for (i,), v in self.entries:
            out[i] = float(evaluate(v, point))
        return out

    def matrix_at(self, point: Mapping[str, float]) -> np.ndarray:
        """Full antisymmetric matrix W with W[i, j] = value on (e_i, e_j)."""
        if self.degree != 2:
            raise ChartError("matrix_at needs degree 2")
        n = self.chart.dim
        out = np.zeros((n, n))
        for (i, j), v in self.entries:
            val = float(evaluate(v, point))
            out[i, j] = val
            out[j, i] = -val
        return out


class DifferentialForm(_AlternatingTable):
    """Skew k-linear field on tangent vectors; degree 0 is a single scalar."""

    kind = "form"


class Multivector(_AlternatingTable):
    """Skew k-linear field on covectors (tangent-side indices)."""

    kind = "multivector"


def differential(chart: Chart, f: Expr) -> DifferentialForm:
    """The 1-form df on the chart."""
    table = {}
    for i, name in enumerate(chart.coords):
        d = differentiate(f, name)
        if not is_structurally_zero(d):
            table[(i,)] = d
    return DifferentialForm(chart, 1, table)


def coordinate_form(chart: Chart, name: str) -> DifferentialForm:
    return DifferentialForm(chart, 1, {(chart.index(name),): ONE})


# --------------------------------------------------------------------------
# the operators
# --------------------------------------------------------------------------


def exterior_derivative(omega: DifferentialForm) -> DifferentialForm:
    """d(a dx_I) = sum_j (da/dx_j) dx_j ^ dx_I, degree k+1."""
    chart = omega.chart
    table: dict[tuple[int, ...], Expr] = {}
    for idx, a in omega.entries:
        for j, name in enumerate(chart.coords):
            if j in idx:
                continue
            da = differentiate(a, name)
            if is_structurally_zero(da):
                continue
            key, sign = _sorted_index((j,) + idx)
            term = da if sign > 0 else normalize(Neg(da))
            table[key] = table[key] + term if key in table else term
    return DifferentialForm(chart, omega.degree + 1, table)


def wedge(a, b):
    """Graded-antisymmetric product of two forms or two multivectors."""
    if type(a) is not type(b):
        raise ChartError("wedge needs two operands of the same kind")
    _require_same_chart(a, b)
    if a.degree + b.degree > a.chart.dim:
        return type(a).zero(a.chart, a.degree + b.degree)
    table: dict[tuple[int, ...], Expr] = {}
    for ia, va in a.entries:
        for ib, vb in b.entries:
            key, sign = _merge_sign(ia, ib)
            if key is None:
                continue
            term = va * vb
            if sign < 0:
                term = normalize(Neg(term))
            table[key] = table[key] + term if key in table else term
    return type(a)(a.chart, a.degree + b.degree, table)


def interior_product(X: VectorField, omega: DifferentialForm) -> DifferentialForm:
    """First-slot contraction: (i_X w)(Y...) = w(X, Y...); degree k-1."""
    _require_same_chart(X, omega)
    if omega.degree < 1:
        raise ChartError("interior product needs degree >= 1")
    table: dict[tuple[int, ...], Expr] = {}
    for idx, a in omega.entries:
        for pos, i in enumerate(idx):
            xi = X.components[i]
            if is_structurally_zero(xi):
                continue
            key = idx[:pos] + idx[pos + 1 :]
            term = xi * a
            if pos % 2 == 1:
                term = normalize(Neg(term))
            table[key] = table[key] + term if key in table else term
    return DifferentialForm(omega.chart, omega.degree - 1, table)


def lie_bracket(X: VectorField, Y: VectorField) -> VectorField:
    """[X, Y]^i = X(Y^i) - Y(X^i)."""
    _require_same_chart(X, Y)
    return VectorField(
        X.chart,
        tuple(X.apply(yc) - Y.apply(xc) for xc, yc in zip(X.components, Y.components)),
    )


def lie_derivative(X: VectorField, omega: DifferentialForm) -> DifferentialForm:
    """(L_X w)_I = X(w_I) + sum_p (d X^j / d x_{I_p}) w_{I with I_p -> j}.

    Direct component formula (not the Cartan identity, which is verified
    against this implementation in the test suite).
    """
    _require_same_chart(X, omega)
    chart = omega.chart
    if omega.degree == 0:
        return DifferentialForm.from_scalar(chart, X.apply(omega.scalar()))
    from itertools import combinations

    table: dict[tuple[int, ...], Expr] = {}
    for idx, a in omega.entries:
        table[idx] = X.apply(a)
    for I in combinations(range(chart.dim), omega.degree):
        acc: Expr = ZERO
        for p in range(len(I)):
            for j in range(chart.dim):
                dX = differentiate(X.components[j], chart.coords[I[p]])
                if is_structurally_zero(dX):
                    continue
                w = omega.coefficient(I[:p] + (j,) + I[p + 1 :])
                if is_structurally_zero(w):
                    continue
                acc = acc + dX * w
        if not is_structurally_zero(acc):
            table[I] = table[I] + acc if I in table else acc
    return DifferentialForm(chart, omega.degree, table)


@dataclass(frozen=True)
class SmoothMap:
    """Map between charts, one target-coordinate expression per component."""

    source: Chart
    target: Chart
    components: tuple[Expr, ...]

    def __post_init__(self):
        if len(self.components) != self.target.dim:
            raise ChartError(
                f"map {self.source.name} -> {self.target.name} needs "
                f"{self.target.dim} components"
            )
        for c in self.components:
            _check_expr_coords(self.source, c, "map component")

    @classmethod
    def from_exprs(cls, source: Chart, target: Chart, exprs: Sequence[Expr | int]) -> "SmoothMap":
        return cls(source, target, tuple(normalize(as_expr(e)) for e in exprs))

    def assignment(self) -> dict[str, Expr]:
        return dict(zip(self.target.coords, self.components))

    def pull_expr(self, f: Expr) -> Expr:
        """f o F, an expression on the source chart."""
        return substitute(f, self.assignment())

    def compose(self, inner: "SmoothMap") -> "SmoothMap":
        """self o inner (inner first)."""
        if inner.target != self.source:
            raise ChartError(
                f"cannot compose {self.source.name}->{self.target.name} "
                f"after {inner.source.name}->{inner.target.name}"
            )
        a = inner.assignment()
        return SmoothMap(inner.source, self.target, tuple(substitute(c, a) for c in self.components))

    def evaluate(self, point: Mapping[str, float]) -> dict[str, float]:
        return {
            name: float(evaluate(c, point)) for name, c in zip(self.target.coords, self.components)
        }

    def evaluate_array(self, z: np.ndarray) -> np.ndarray:
        point = self.source.dict_point(z)
        return np.array([float(evaluate(c, point)) for c in self.components])

    def jacobian(self) -> tuple[tuple[Expr, ...], ...]:
        return tuple(
            tuple(differentiate(c, name) for name in self.source.coords) for c in self.components
        )

    def jacobian_at(self, point: Mapping[str, float]) -> np.ndarray:
        J = np.zeros((self.target.dim, self.source.dim))
        for i, c in enumerate(self.components):
            for j, name in enumerate(self.source.coords):
                d = differentiate(c, name)
                if not is_structurally_zero(d):
                    J[i, j] = float(evaluate(d, point))
        return J


def identity_map(chart: Chart) -> SmoothMap:
    return SmoothMap(chart, chart, tuple(coord(c) for c in chart.coords))


def pullback(F: SmoothMap, omega: DifferentialForm) -> DifferentialForm:
    """F*w on the source chart; commutes with d and composition (checked in tests)."""
    if omega.chart != F.target:
        raise ChartError(
            f"pullback: form lives on '{omega.chart.name}', map targets '{F.target.name}'"
        )
    if omega.degree == 0:
        return DifferentialForm.from_scalar(F.source, F.pull_expr(omega.scalar()))
    dF = [differential(F.source, c) for c in F.components]
    out = DifferentialForm.zero(F.source, omega.degree)
    for idx, a in omega.entries:
        term = dF[idx[0]]
        for i in idx[1:]:
            term = wedge(term, dF[i])
        out = out + term.scale(F.pull_expr(a))
    return out


def pushforward_at_point(
    F: SmoothMap, point: Mapping[str, float], v: Sequence[float]
) -> np.ndarray:
    """(dF)_p applied to the numeric tangent vector v."""
    return F.jacobian_at(point) @ np.asarray(v, dtype=float)


def sharp(Lam: Multivector, alpha: DifferentialForm) -> VectorField:
    """P#(a) with the convention P#(a)(b) = P(a, b)."""
    if Lam.degree != 2 or alpha.degree != 1:
        raise ChartError("sharp needs a bivector and a 1-form")
    _require_same_chart(Lam, alpha)
    comps: list[Expr] = [ZERO] * Lam.chart.dim
    for (i, j), c in Lam.entries:
        ai = alpha.coefficient((i,))
        aj = alpha.coefficient((j,))
        if not is_structurally_zero(ai):
            comps[j] = comps[j] + ai * c
        if not is_structurally_zero(aj):
            comps[i] = comps[i] - aj * c
    return VectorField(Lam.chart, tuple(comps))
