"""Explicit Lie-groupoid models with symbolic structural maps.

A model carries total and base charts, source/target/unit/inversion maps,
and a multiplication defined over an explicitly parametrized chart of
composable pairs (two projections realize the parametrization; the locus
constraint source(left) = target(right) is itself verified).  Composability
follows the convention m(g, h) defined when source(g) = target(h).

On top of the axioms live the precontact and presymplectic verifications,
the action groupoid twisted by a multiplicative function, the 1-form /
homogeneous-2-form correspondence, the conformal equivalence transform, and
the fiberwise extraction of the base structure from precontact data.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .chart_tensor import (
    Chart,
    ChartError,
    DifferentialForm,
    SmoothMap,
    VectorField,
    coordinate_field,
    exterior_derivative,
    identity_map,
    interior_product,
    lie_derivative,
    product_chart,
    pullback,
    wedge,
)
from .linalg import DEFAULT_RTOL, null_space, orthonormal_columns, spans_equal
from .report import CheckResult, ResidualStats, error_result, passfail
from .structures import ConformalFactor, FrameSubbundle
from .symcalc import (
    Exp,
    Expr,
    Ln,
    Quotient,
    SamplingPolicy,
    ZERO,
    ZeroVerdict,
    as_expr,
    check_zero_all,
    coord,
    differentiate,
    evaluate,
    is_structurally_zero,
    normalize,
    substitute,
)

LAW_RTOL = 1e-8  # numeric groupoid-law tolerance, scaled by 1 + |value|
NEWTON_TOL = 1e-12


class GroupoidModelError(ValueError):
    """The supplied model data is inconsistent (not a verification failure)."""


class SolveError(RuntimeError):
    """A numeric locate/fiber solve did not converge."""


@dataclass(frozen=True)
class GroupoidModel:
    total: Chart
    base: Chart
    source: SmoothMap  # G -> M
    target: SmoothMap  # G -> M
    unit: SmoothMap  # M -> G
    inversion: SmoothMap  # G -> G
    pair_chart: Chart  # parametrizes {(g, h) : source(g) = target(h)}
    pair_left: SmoothMap  # P -> G
    pair_right: SmoothMap  # P -> G
    multiplication: SmoothMap  # P -> G

    def __post_init__(self):
        checks = (
            (self.source, self.total, self.base, "source"),
            (self.target, self.total, self.base, "target"),
            (self.unit, self.base, self.total, "unit"),
            (self.inversion, self.total, self.total, "inversion"),
            (self.pair_left, self.pair_chart, self.total, "pair_left"),
            (self.pair_right, self.pair_chart, self.total, "pair_right"),
            (self.multiplication, self.pair_chart, self.total, "multiplication"),
        )
        for m, src, dst, what in checks:
            if m.source != src or m.target != dst:
                raise GroupoidModelError(f"{what} map has wrong charts")


@dataclass(frozen=True)
class PrecontactData:
    """A 1-form and a multiplicative function on the total chart."""

    eta: DifferentialForm
    sigma: Expr

    def __post_init__(self):
        if self.eta.degree != 1:
            raise ChartError("precontact data needs a 1-form")
        object.__setattr__(self, "sigma", normalize(as_expr(self.sigma)))


@dataclass(frozen=True)
class PresymplecticData:
    """A 2-form on the total chart, with an optional homogeneity field."""

    omega: DifferentialForm
    homogeneity_field: VectorField | None = None

    def __post_init__(self):
        if self.omega.degree != 2:
            raise ChartError("presymplectic data needs a 2-form")


# --------------------------------------------------------------------------
# numeric solves on the model
# --------------------------------------------------------------------------


def _gauss_newton(
    value,  # z -> residual vector
    jac,  # z -> Jacobian
    dim: int,
    rng,
    box: tuple[float, float],
    starts: int = 8,
    iters: int = 60,
) -> np.ndarray:
    lo, hi = box
    first = np.full(dim, (lo + hi) / 2.0)
    for attempt in range(starts):
        z = first if attempt == 0 else np.array([rng.uniform(lo, hi) for _ in range(dim)])
        for _ in range(iters):
            r = value(z)
            if np.max(np.abs(r)) <= NEWTON_TOL:
                return z
            J = jac(z)
            step, *_ = np.linalg.lstsq(J, r, rcond=None)
            z = z - step
            if np.max(np.abs(z)) > 1e6:
                break
        else:
            r = value(z)
            if np.max(np.abs(r)) <= NEWTON_TOL:
                return z
    raise SolveError("Gauss-Newton did not converge")


def locate_pair(
    gm: GroupoidModel, g: Mapping[str, float], h: Mapping[str, float], rng
) -> dict[str, float]:
    """Find the pair-chart point representing the composable pair (g, h)."""
    gv = gm.total.array_point(g)
    hv = gm.total.array_point(h)

    def value(z):
        p = gm.pair_chart.dict_point(z)
        return np.concatenate(
            [gm.pair_left.evaluate_array(z) - gv, gm.pair_right.evaluate_array(z) - hv]
        )

    def jac(z):
        p = gm.pair_chart.dict_point(z)
        return np.vstack([gm.pair_left.jacobian_at(p), gm.pair_right.jacobian_at(p)])

    z = _gauss_newton(value, jac, gm.pair_chart.dim, rng, (-2.0, 2.0))
    return gm.pair_chart.dict_point(z)


def sample_fiber(
    F: SmoothMap, y: Mapping[str, float], rng, box: tuple[float, float], k: int
) -> list[dict[str, float]]:
    """k points of the fiber F^{-1}(y), found by Gauss-Newton from random starts."""
    yv = F.target.array_point(y)

    def value(z):
        return F.evaluate_array(z) - yv

    def jac(z):
        return F.jacobian_at(F.source.dict_point(z))

    out = []
    for _ in range(k):
        z = _gauss_newton(value, jac, F.source.dim, rng, box, starts=10)
        out.append(F.source.dict_point(z))
    return out


def _compose_points(gm: GroupoidModel, g, h, rng) -> dict[str, float]:
    w = locate_pair(gm, g, h, rng)
    return gm.multiplication.evaluate(w)


def _close(a: Mapping[str, float], b: Mapping[str, float]) -> float:
    keys = a.keys()
    num = max(abs(a[k] - b[k]) for k in keys)
    scale = 1.0 + max(max(abs(a[k]) for k in keys), max(abs(b[k]) for k in keys))
    return num / scale


# --------------------------------------------------------------------------
# groupoid axioms
# --------------------------------------------------------------------------


def _map_difference(a: SmoothMap, b: SmoothMap) -> list[Expr]:
    return [x - y for x, y in zip(a.components, b.components)]


def check_groupoid(
    gm: GroupoidModel, policy: SamplingPolicy, name: str = "groupoid-axioms"
) -> CheckResult:
    """Structural-map identities plus sampled unit/inversion/associativity laws."""
    details: list[str] = []
    stats = ResidualStats()
    mode = "symbolic"

    # the parametrization must actually hit the composable locus
    locus = check_zero_all(
        _map_difference(gm.source.compose(gm.pair_left), gm.target.compose(gm.pair_right)),
        policy,
        coords=gm.pair_chart.coords,
        label=f"{name}:locus",
    )
    if not locus.is_zero:
        return error_result(
            name,
            "model error: the pair parametrization violates source(left) = target(right)",
            witness={"point": locus.witness_point, "value": locus.witness_value},
        )

    symbolic_laws = (
        ("source-of-unit", _map_difference(gm.source.compose(gm.unit), identity_map(gm.base)), gm.base),
        ("target-of-unit", _map_difference(gm.target.compose(gm.unit), identity_map(gm.base)), gm.base),
        (
            "source-of-product",
            _map_difference(gm.source.compose(gm.multiplication), gm.source.compose(gm.pair_right)),
            gm.pair_chart,
        ),
        (
            "target-of-product",
            _map_difference(gm.target.compose(gm.multiplication), gm.target.compose(gm.pair_left)),
            gm.pair_chart,
        ),
        ("source-of-inverse", _map_difference(gm.source.compose(gm.inversion), gm.target), gm.total),
        ("target-of-inverse", _map_difference(gm.target.compose(gm.inversion), gm.source), gm.total),
        (
            "inversion-involutive",
            _map_difference(gm.inversion.compose(gm.inversion), identity_map(gm.total)),
            gm.total,
        ),
    )
    ok = True
    witness = None
    for law, diff, chart in symbolic_laws:
        rep = check_zero_all(diff, policy, coords=chart.coords, label=f"{name}:{law}")
        stats.add(rep.max_abs)
        if rep.verdict is not ZeroVerdict.ZERO:
            mode = "sampled"
        if not rep.is_zero:
            ok = False
            details.append(f"{law} fails")
            if witness is None:
                witness = {"law": law, "point": rep.witness_point, "value": rep.witness_value}

    # pointwise laws that need the composable-pair parametrization inverted
    rng = policy.rng(f"{name}:solves")
    n_pts = min(policy.count, 20)
    g_points = policy.float_points(gm.total.coords, f"{name}:gpoints", n_pts)
    try:
        for g in g_points:
            beta_g = gm.target.evaluate(g)
            alpha_g = gm.source.evaluate(g)
            lhs = _compose_points(gm, gm.unit.evaluate(beta_g), g, rng)
            r = _close(lhs, g)
            stats.add(r)
            if r > LAW_RTOL:
                ok = False
                details.append("left unit law fails")
                witness = witness or {"law": "left-unit", "point": g}
            rhs = _compose_points(gm, g, gm.unit.evaluate(alpha_g), rng)
            r = _close(rhs, g)
            stats.add(r)
            if r > LAW_RTOL:
                ok = False
                details.append("right unit law fails")
                witness = witness or {"law": "right-unit", "point": g}
            inv_g = gm.inversion.evaluate(g)
            r = _close(_compose_points(gm, g, inv_g, rng), gm.unit.evaluate(beta_g))
            stats.add(r)
            if r > LAW_RTOL:
                ok = False
                details.append("right inverse law fails")
                witness = witness or {"law": "right-inverse", "point": g}
            r = _close(_compose_points(gm, inv_g, g, rng), gm.unit.evaluate(alpha_g))
            stats.add(r)
            if r > LAW_RTOL:
                ok = False
                details.append("left inverse law fails")
                witness = witness or {"law": "left-inverse", "point": g}

        for w in policy.float_points(gm.pair_chart.coords, f"{name}:wpoints", n_pts):
            g = gm.pair_left.evaluate(w)
            h = gm.pair_right.evaluate(w)
            gh = gm.multiplication.evaluate(w)
            k = sample_fiber(gm.target, gm.source.evaluate(h), rng, policy.box, 1)[0]
            hk = _compose_points(gm, h, k, rng)
            left = _compose_points(gm, gh, k, rng)
            right = _compose_points(gm, g, hk, rng)
            r = _close(left, right)
            stats.add(r)
            if r > LAW_RTOL:
                ok = False
                details.append("associativity fails")
                witness = witness or {
                    "law": "associativity",
                    "g": g,
                    "h": h,
                    "k": k,
                    "left": left,
                    "right": right,
                }
        mode = "sampled"
    except SolveError as exc:
        return error_result(name, f"could not invert the pair parametrization: {exc}")

    # deduplicate law names in details
    seen: list[str] = []
    for d in details:
        if d not in seen:
            seen.append(d)
    return passfail(name, ok, mode=mode, stats=stats, details=tuple(seen), witness=witness)


def check_multiplicative_function(
    gm: GroupoidModel, sigma: Expr, policy: SamplingPolicy, name: str = "multiplicative-function"
) -> CheckResult:
    """sigma(gh) - sigma(g) - sigma(h) vanishes on the composable locus."""
    sigma = normalize(as_expr(sigma))
    diff = (
        gm.multiplication.pull_expr(sigma)
        - gm.pair_left.pull_expr(sigma)
        - gm.pair_right.pull_expr(sigma)
    )
    rep = check_zero_all([diff], policy, coords=gm.pair_chart.coords, label=f"{name}:mult")
    mode = "symbolic" if rep.verdict is ZeroVerdict.ZERO else "sampled"
    stats = ResidualStats()
    stats.add(rep.max_abs)
    witness = None
    if not rep.is_zero:
        witness = {"point": rep.witness_point, "value": rep.witness_value}
    return passfail(name, rep.is_zero, mode=mode, stats=stats, witness=witness)


# --------------------------------------------------------------------------
# precontact / presymplectic verification
# --------------------------------------------------------------------------


def _kernel_dimension(rows: np.ndarray) -> int:
    return null_space(rows, DEFAULT_RTOL).shape[1]


def check_precontact(
    gm: GroupoidModel,
    pd: PrecontactData,
    policy: SamplingPolicy,
    kernel_at_all_samples: bool = False,
    name: str = "precontact",
) -> CheckResult:
    """Multiplicativity of sigma, the twisted pullback identity for eta, and
    the four-kernel nondegeneracy condition at unit points.

    kernel_at_all_samples additionally reports the kernel condition at
    arbitrary sampled total-chart points (informational; the verdict reads
    the condition at units).
    """
    if gm.total.dim != 2 * gm.base.dim + 1:
        return error_result(
            name,
            f"dim(G) = {gm.total.dim} but precontact needs 2 dim(M) + 1 = {2 * gm.base.dim + 1}",
        )
    if pd.eta.chart != gm.total:
        return error_result(name, "eta does not live on the total chart")

    details: list[str] = []
    stats = ResidualStats()
    ok = True
    witness = None

    mult = check_multiplicative_function(gm, pd.sigma, policy, name=f"{name}:sigma")
    if not mult.passed:
        details.append("sigma is not multiplicative")
        witness = mult.witness
        return passfail(name, False, mode="sampled", stats=stats, details=tuple(details), witness=witness)

    # (a) m* eta = pr1* eta + pr1*(e^sigma) pr2* eta, coefficient-wise on the locus
    twisted = pullback(gm.pair_right, pd.eta).scale(
        gm.pair_left.pull_expr(normalize(Exp(pd.sigma)))
    )
    diff = pullback(gm.multiplication, pd.eta) - pullback(gm.pair_left, pd.eta) - twisted
    rep = check_zero_all(
        diff.coefficients(), policy, coords=gm.pair_chart.coords, label=f"{name}:pullback"
    )
    stats.add(rep.max_abs)
    if not rep.is_zero:
        ok = False
        details.append("multiplicativity identity for eta fails")
        witness = witness or {
            "condition": "eta-multiplicative",
            "point": rep.witness_point,
            "value": rep.witness_value,
        }

    # (b) Ker(d eta) & Ker(eta) & Ker(d source) & Ker(d target) = 0 at units
    deta = exterior_derivative(pd.eta)
    for x in policy.float_points(gm.base.coords, f"{name}:units"):
        gx = gm.unit.evaluate(x)
        rows = np.vstack(
            [
                deta.matrix_at(gx).T,
                pd.eta.covector_at(gx)[None, :],
                gm.source.jacobian_at(gx),
                gm.target.jacobian_at(gx),
            ]
        )
        kdim = _kernel_dimension(rows)
        if kdim != 0:
            ok = False
            details.append("kernel condition fails at a unit point")
            if witness is None:
                kvec = null_space(rows, DEFAULT_RTOL)[:, 0]
                witness = {
                    "condition": "non-degeneracy",
                    "base_point": x,
                    "kernel_dim": kdim,
                    "kernel_vector": [float(v) for v in kvec],
                }
            break

    if kernel_at_all_samples:
        bad = 0
        for g in policy.float_points(gm.total.coords, f"{name}:allg"):
            rows = np.vstack(
                [
                    deta.matrix_at(g).T,
                    pd.eta.covector_at(g)[None, :],
                    gm.source.jacobian_at(g),
                    gm.target.jacobian_at(g),
                ]
            )
            if _kernel_dimension(rows) != 0:
                bad += 1
        details.append(f"kernel condition off units: {bad} degenerate of {policy.count} sampled")

    seen: list[str] = []
    for d in details:
        if d not in seen:
            seen.append(d)
    return passfail(name, ok, mode="sampled", stats=stats, details=tuple(seen), witness=witness)


def check_presymplectic(
    gm: GroupoidModel,
    pd: PresymplecticData,
    policy: SamplingPolicy,
    name: str = "presymplectic",
) -> CheckResult:
    """Closedness, multiplicativity, kernel nondegeneracy at units, and (when a
    field is supplied) homogeneity L_Z omega = omega."""
    if gm.total.dim != 2 * gm.base.dim:
        return error_result(
            name,
            f"dim(G) = {gm.total.dim} but presymplectic needs 2 dim(M) = {2 * gm.base.dim}",
        )
    if pd.omega.chart != gm.total:
        return error_result(name, "omega does not live on the total chart")

    details: list[str] = []
    stats = ResidualStats()
    ok = True
    witness = None

    closed = check_zero_all(
        exterior_derivative(pd.omega).coefficients(),
        policy,
        coords=gm.total.coords,
        label=f"{name}:closed",
    )
    stats.add(closed.max_abs)
    if not closed.is_zero:
        ok = False
        details.append("omega is not closed")
        witness = witness or {
            "condition": "closed",
            "point": closed.witness_point,
            "value": closed.witness_value,
        }

    diff = (
        pullback(gm.multiplication, pd.omega)
        - pullback(gm.pair_left, pd.omega)
        - pullback(gm.pair_right, pd.omega)
    )
    mult = check_zero_all(
        diff.coefficients(), policy, coords=gm.pair_chart.coords, label=f"{name}:mult"
    )
    stats.add(mult.max_abs)
    if not mult.is_zero:
        ok = False
        details.append("omega is not multiplicative")
        witness = witness or {
            "condition": "multiplicative",
            "point": mult.witness_point,
            "value": mult.witness_value,
        }

    for x in policy.float_points(gm.base.coords, f"{name}:units"):
        gx = gm.unit.evaluate(x)
        rows = np.vstack(
            [
                pd.omega.matrix_at(gx).T,
                gm.source.jacobian_at(gx),
                gm.target.jacobian_at(gx),
            ]
        )
        kdim = _kernel_dimension(rows)
        if kdim != 0:
            ok = False
            details.append("kernel condition fails at a unit point")
            if witness is None:
                witness = {"condition": "non-degeneracy", "base_point": x, "kernel_dim": kdim}
            break

    if pd.homogeneity_field is not None:
        hom = check_zero_all(
            (lie_derivative(pd.homogeneity_field, pd.omega) - pd.omega).coefficients(),
            policy,
            coords=gm.total.coords,
            label=f"{name}:homogeneous",
        )
        stats.add(hom.max_abs)
        if not hom.is_zero:
            ok = False
            details.append("omega is not homogeneous for the supplied field")
            witness = witness or {
                "condition": "homogeneous",
                "point": hom.witness_point,
                "value": hom.witness_value,
            }

    return passfail(name, ok, mode="sampled", stats=stats, details=tuple(details), witness=witness)


# --------------------------------------------------------------------------
# the action groupoid G x_sigma R
# --------------------------------------------------------------------------


def build_action_groupoid(
    gm: GroupoidModel,
    sigma: Expr,
    policy: SamplingPolicy,
    time: str = "t",
    fiber: str = "u",
) -> GroupoidModel:
    """The action groupoid over base x R twisted by a multiplicative sigma:

    source(g, u) = (source(g), sigma(g) + u), target(h, s) = (target(h), s),
    m((g, u), (h, s)) = (gh, u), unit(x, t) = (unit(x), t),
    inversion(g, u) = (inversion(g), sigma(g) + u).
    """
    sigma = normalize(as_expr(sigma))
    mult = check_multiplicative_function(gm, sigma, policy)
    if not mult.passed:
        raise GroupoidModelError("sigma is not multiplicative; no action groupoid exists")

    base2 = product_chart(gm.base, time)
    total2 = product_chart(gm.total, fiber)
    pair2 = product_chart(gm.pair_chart, fiber)
    u = coord(fiber)

    def extend(m: SmoothMap, new_source: Chart, new_target: Chart, last: Expr) -> SmoothMap:
        return SmoothMap(new_source, new_target, tuple(m.components) + (normalize(last),))

    source2 = extend(gm.source, total2, base2, sigma + u)
    target2 = extend(gm.target, total2, base2, u)
    unit2 = extend(gm.unit, base2, total2, coord(time))
    inversion2 = extend(gm.inversion, total2, total2, sigma + u)
    left2 = extend(gm.pair_left, pair2, total2, u)
    right2 = extend(gm.pair_right, pair2, total2, gm.pair_left.pull_expr(sigma) + u)
    mult2 = extend(gm.multiplication, pair2, total2, u)
    return GroupoidModel(
        total2, base2, source2, target2, unit2, inversion2, pair2, left2, right2, mult2
    )


# --------------------------------------------------------------------------
# eta <-> omega correspondence
# --------------------------------------------------------------------------


class HomogeneityError(ValueError):
    """omega_to_eta was fed a 2-form that is not homogeneous along the fiber."""


def eta_to_omega(pd: PrecontactData, fiber: str = "u") -> PresymplecticData:
    """omega = d(e^u eta) on total x R, homogeneous for d/du."""
    chart = product_chart(pd.eta.chart, fiber)
    lifted = DifferentialForm(chart, 1, {idx: v for idx, v in pd.eta.entries})
    omega = exterior_derivative(lifted.scale(normalize(Exp(coord(fiber)))))
    return PresymplecticData(omega, coordinate_field(chart, fiber))


def omega_to_eta(
    ps: PresymplecticData,
    sigma: Expr,
    policy: SamplingPolicy,
    fiber: str = "u",
) -> PrecontactData:
    """Recover eta = i_{d/du} omega, descended along the fiber coordinate.

    Requires L_{d/du} omega = omega (else HomogeneityError); the descended
    form e^{-u} i_{d/du} omega is checked to be fiber-independent before the
    fiber coordinate is stripped.
    """
    chart = ps.omega.chart
    if fiber not in chart.coords:
        raise ChartError(f"chart '{chart.name}' has no fiber coordinate '{fiber}'")
    Z = coordinate_field(chart, fiber)
    hom = check_zero_all(
        (lie_derivative(Z, ps.omega) - ps.omega).coefficients(),
        policy,
        coords=chart.coords,
        label="omega-to-eta:homogeneous",
    )
    if not hom.is_zero:
        raise HomogeneityError("omega is not homogeneous along the fiber coordinate")

    eta_hat = interior_product(Z, ps.omega)
    decay = normalize(as_expr(1) / normalize(Exp(coord(fiber))))
    eta0 = eta_hat.scale(decay)

    fiber_index = chart.index(fiber)
    du_coeff = eta0.coefficient((fiber_index,))
    residuals = [du_coeff] + [differentiate(v, fiber) for _, v in eta0.entries]
    rep = check_zero_all(residuals, policy, coords=chart.coords, label="omega-to-eta:descent")
    if not rep.is_zero:
        raise HomogeneityError("e^{-u} i_{d/du} omega does not descend along the fiber")

    base_coords = tuple(c for c in chart.coords if c != fiber)
    base = Chart(chart.name.removesuffix(f"x{fiber}") or "base", base_coords)
    table = {}
    for (i,), v in eta0.entries:
        if i == fiber_index:
            continue
        new_i = i if i < fiber_index else i - 1
        table[(new_i,)] = substitute(v, {fiber: ZERO})
    return PrecontactData(DifferentialForm(base, 1, table), normalize(as_expr(sigma)))


# --------------------------------------------------------------------------
# base-structure extraction (fiberwise linear algebra)
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ExtractionResult:
    result: CheckResult
    fibers: tuple[tuple[dict, np.ndarray], ...]


def extract_LM(
    gm: GroupoidModel,
    pd: PrecontactData,
    policy: SamplingPolicy,
    expected: FrameSubbundle | None = None,
    fiber_samples: int = 5,
    name: str = "extract-base-structure",
) -> ExtractionResult:
    """Assemble the base E1 fibers solving, over points g of each target fiber,

        target*(xi)|_g = i_X d eta + F eta,   G = -eta(X),

    and map (X, F, xi, G) -> ((d target) X, F, xi, G).  PASS iff every
    assembled fiber has rank dim M + 1 (constant across base points) and, if
    an expected frame is supplied, equals its fiber as a subspace pointwise.
    """
    n = gm.base.dim
    N = gm.total.dim
    deta = exterior_derivative(pd.eta)
    rng = policy.rng(f"{name}:fibers")
    details: list[str] = []
    stats = ResidualStats()
    ok = True
    witness = None
    fibers: list[tuple[dict, np.ndarray]] = []
    ranks: dict[int, dict] = {}

    base_points = policy.float_points(gm.base.coords, f"{name}:base", min(policy.count, 20))
    try:
        for y in base_points:
            collected: list[np.ndarray] = []
            for g in sample_fiber(gm.target, y, rng, policy.box, fiber_samples):
                W = deta.matrix_at(g)  # W[i, j] = d eta(e_i, e_j)
                eta_vec = pd.eta.covector_at(g)
                Jb = gm.target.jacobian_at(g)
                rows = np.zeros((N + 1, N + n + 2))
                # rows j: sum_m Jb[m, j] xi_m - sum_i W[i, j] X_i - eta_j F = 0
                rows[:N, :N] = -W.T
                rows[:N, N] = -eta_vec
                rows[:N, N + 1 : N + 1 + n] = Jb.T
                # row N: G + eta(X) = 0
                rows[N, :N] = eta_vec
                rows[N, N + 1 + n] = 1.0
                sols = null_space(rows, DEFAULT_RTOL)
                push = np.zeros((2 * n + 2, N + n + 2))
                push[:n, :N] = Jb
                push[n, N] = 1.0
                push[n + 1 : 2 * n + 1, N + 1 : N + 1 + n] = np.eye(n)
                push[2 * n + 1, N + 1 + n] = 1.0
                collected.append(push @ sols)
            stacked = np.hstack(collected)
            basis = orthonormal_columns(stacked, DEFAULT_RTOL)
            r = basis.shape[1]
            fibers.append((y, basis))
            ranks.setdefault(r, y)
            if r > n + 1:
                ok = False
                details.append(
                    f"fiber span has rank {r} > {n + 1}: the fiber points are inconsistent "
                    "(this usually signals non-multiplicative data upstream)"
                )
                witness = witness or {"base_point": y, "rank": r}
            if expected is not None:
                Bexp = expected.fiber_matrix_at(y)
                if not spans_equal(basis, Bexp, DEFAULT_RTOL):
                    ok = False
                    details.append("extracted fiber differs from the expected structure")
                    witness = witness or {"base_point": y, "rank": r, "expected_rank": expected.rank}
    except SolveError as exc:
        return ExtractionResult(
            error_result(name, f"target-fiber sampling failed: {exc}"), tuple(fibers)
        )

    if len(ranks) > 1:
        ok = False
        pts = list(ranks.values())[:2]
        details.append(f"rank jumps across base points: {sorted(ranks)}")
        witness = witness or {"points": pts, "ranks": sorted(ranks)}
    elif ranks and next(iter(ranks)) != n + 1:
        r = next(iter(ranks))
        ok = False
        details.append(f"extracted rank {r} differs from dim M + 1 = {n + 1}")
        witness = witness or {"base_point": ranks[r], "rank": r}

    seen: list[str] = []
    for d in details:
        if d not in seen:
            seen.append(d)
    return ExtractionResult(
        passfail(name, ok, mode="sampled", stats=stats, details=tuple(seen), witness=witness),
        tuple(fibers),
    )


# --------------------------------------------------------------------------
# conformal equivalence of precontact data
# --------------------------------------------------------------------------


def equivalence_transform(
    pd: PrecontactData, factor: ConformalFactor, gm: GroupoidModel
) -> PrecontactData:
    """eta' = (phi o target) eta,  sigma' = sigma + ln((phi o target)/(phi o source)).

    The conformal factor composes with the map whose fibers the base
    extraction uses (the target); under the composability convention
    m(g, h) for source(g) = target(h) this is the orientation that keeps the
    twisted pullback identity and makes the transform commute with
    extract_LM through conformal_change.  phi has constant sign on the box
    (it is nowhere vanishing), so the ratio inside the logarithm is positive
    and no absolute value is needed.
    """
    if factor.chart != gm.base:
        raise ChartError("conformal factor must live on the base chart")
    phi_t = gm.target.pull_expr(factor.phi)
    phi_s = gm.source.pull_expr(factor.phi)
    eta2 = pd.eta.scale(phi_t)
    sigma2 = pd.sigma + normalize(Ln(Quotient(phi_t, phi_s)))
    return PrecontactData(eta2, sigma2)


def check_contact_form(
    eta: DifferentialForm, policy: SamplingPolicy, name: str = "contact-nondegenerate"
) -> CheckResult:
    """eta ^ (d eta)^k has a nowhere-vanishing top coefficient (sampled)."""
    chart = eta.chart
    if chart.dim % 2 == 0:
        return error_result(name, "contact forms need an odd-dimensional chart")
    k = (chart.dim - 1) // 2
    vol = eta
    deta = exterior_derivative(eta)
    for _ in range(k):
        vol = wedge(vol, deta)
    top = vol.coefficient(tuple(range(chart.dim)))
    if is_structurally_zero(top):
        return passfail(name, False, mode="symbolic", details=("volume form vanishes identically",))
    stats = ResidualStats()
    ok = True
    witness = None
    for p in policy.float_points(chart.coords, f"{name}:points"):
        v = float(evaluate(top, p))
        stats.add(v)
        if abs(v) <= policy.tol_abs:
            ok = False
            witness = {"point": p, "value": v}
            break
    return passfail(name, ok, mode="sampled", stats=stats, witness=witness)


# --------------------------------------------------------------------------
# model builders
# --------------------------------------------------------------------------


def _suffixed(chart: Chart, suffix: str) -> tuple[str, ...]:
    return tuple(f"{c}{suffix}" for c in chart.coords)


def pair_groupoid(M: Chart) -> GroupoidModel:
    """The pair groupoid M x M: source(x, y) = y, target(x, y) = x,
    m((x, y), (y, z)) = (x, z)."""
    c1, c2, c3 = (_suffixed(M, s) for s in ("1", "2", "3"))
    G = Chart(f"{M.name}_pair", c1 + c2)
    P = Chart(f"{M.name}_pair_comp", c1 + c2 + c3)
    e = lambda names: tuple(coord(n) for n in names)
    return GroupoidModel(
        total=G,
        base=M,
        source=SmoothMap(G, M, e(c2)),
        target=SmoothMap(G, M, e(c1)),
        unit=SmoothMap(M, G, e(M.coords) + e(M.coords)),
        inversion=SmoothMap(G, G, e(c2) + e(c1)),
        pair_chart=P,
        pair_left=SmoothMap(P, G, e(c1) + e(c2)),
        pair_right=SmoothMap(P, G, e(c2) + e(c3)),
        multiplication=SmoothMap(P, G, e(c1) + e(c3)),
    )


def pair_groupoid_with_line(M: Chart, time: str = "t") -> GroupoidModel:
    """The product of the pair groupoid with (R, +):

    G = M x M x R, source(x, y, t) = y, target(x, y, t) = x,
    m((x, y, t), (y, z, s)) = (x, z, t + s), unit(x) = (x, x, 0),
    inversion(x, y, t) = (y, x, -t).
    """
    c1, c2, c3 = (_suffixed(M, s) for s in ("1", "2", "3"))
    second = f"{time}s" if f"{time}s" not in c1 + c2 + c3 + (time,) else f"{time}ss"
    G = Chart(f"{M.name}_pairline", c1 + c2 + (time,))
    P = Chart(f"{M.name}_pairline_comp", c1 + c2 + c3 + (time, second))
    e = lambda names: tuple(coord(n) for n in names)
    t, s = coord(time), coord(second)
    return GroupoidModel(
        total=G,
        base=M,
        source=SmoothMap(G, M, e(c2)),
        target=SmoothMap(G, M, e(c1)),
        unit=SmoothMap(M, G, e(M.coords) + e(M.coords) + (ZERO,)),
        inversion=SmoothMap(G, G, e(c2) + e(c1) + (normalize(as_expr(-1) * t),)),
        pair_chart=P,
        pair_left=SmoothMap(P, G, e(c1) + e(c2) + (t,)),
        pair_right=SmoothMap(P, G, e(c2) + e(c3) + (s,)),
        multiplication=SmoothMap(P, G, e(c1) + e(c3) + (t + s,)),
    )


def eta_from_precontact_form(
    gm: GroupoidModel, theta: DifferentialForm, time: str = "t"
) -> PrecontactData:
    """The 1-form pi_1* theta - e^sigma pi_2* theta with sigma the time slot.

    Built against the pair_groupoid_with_line model: pi_1 is the target-copy
    projection and pi_2 the source-copy projection.
    """
    if theta.chart != gm.base:
        raise ChartError("theta must live on the base chart")
    sigma = coord(time)
    eta = pullback(gm.target, theta) - pullback(gm.source, theta).scale(normalize(Exp(sigma)))
    return PrecontactData(eta, sigma)
