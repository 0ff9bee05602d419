"""Independent numeric oracles for the derived expected values.

Everything here avoids the package's symbolic differentiation and sparse
index bookkeeping: derivatives come from central finite differences, flows
from RK4 integration, and alternating tensors from dense sign tables, so a
bug in the symbolic path cannot hide in the oracle.
"""

from __future__ import annotations

from itertools import permutations

import numpy as np

from diracjacobi.symcalc import evaluate

H = 1e-6


def fd_partial(fn, point: dict, name: str, h: float = H) -> float:
    """Central finite difference of a point-function of a coordinate dict."""
    up = dict(point)
    dn = dict(point)
    up[name] = up[name] + h
    dn[name] = dn[name] - h
    return (fn(up) - fn(dn)) / (2 * h)


def expr_fn(e):
    return lambda point: float(evaluate(e, point))


def fd_gradient(fn, point: dict, coords) -> np.ndarray:
    return np.array([fd_partial(fn, point, c) for c in coords])


def fd_jacobian(component_fns, point: dict, coords) -> np.ndarray:
    return np.array([[fd_partial(f, point, c) for c in coords] for f in component_fns])


def dense_form(form, point: dict) -> np.ndarray:
    """Dense fully antisymmetric array of a sparse form/multivector at a point."""
    n = form.chart.dim
    k = form.degree
    A = np.zeros((n,) * k) if k else np.array(float(form.at(point).get((), 0.0)))
    if k == 0:
        vals = form.at(point)
        return np.array(vals.get((), 0.0))
    for idx, v in form.at(point).items():
        for perm in permutations(range(k)):
            sign = _perm_sign(perm)
            A[tuple(idx[p] for p in perm)] = sign * v
    return A


def _perm_sign(perm) -> int:
    sign = 1
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j = i
        length = 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def dense_exterior_derivative(form, point: dict) -> np.ndarray:
    """(d w)_{J} = sum_p (-1)^p  d/dx_{J_p} w_{J \\ p}, via finite differences."""
    chart = form.chart
    n = chart.dim
    k = form.degree

    def coeff_fn(idx):
        return lambda p: dense_form(form, p)[idx] if k else float(dense_form(form, p))

    out = np.zeros((n,) * (k + 1))
    for J in permutations(range(n), k + 1):
        total = 0.0
        for pos in range(k + 1):
            rest = J[:pos] + J[pos + 1 :]
            if k == 0:
                fn = lambda p: float(dense_form(form, p))
            else:
                fn = coeff_fn(tuple(rest))
            total += (-1) ** pos * fd_partial(fn, point, chart.coords[J[pos]])
        out[J] = total
    return out


def dense_interior(Xvals: np.ndarray, A: np.ndarray) -> np.ndarray:
    """First-slot contraction of a dense antisymmetric array."""
    return np.tensordot(Xvals, A, axes=(0, 0))


def rk4_flow(field, point: dict, t: float, steps: int = 8) -> dict:
    """Integrate a vector field for time t with classical RK4."""
    coords = field.chart.coords
    z = np.array([float(point[c]) for c in coords])
    h = t / steps

    def rhs(zv):
        return field.at({c: v for c, v in zip(coords, zv)})

    for _ in range(steps):
        k1 = rhs(z)
        k2 = rhs(z + h / 2 * k1)
        k3 = rhs(z + h / 2 * k2)
        k4 = rhs(z + h * k3)
        z = z + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return {c: v for c, v in zip(coords, z)}


def flow_commutator(X, Y, point: dict, t: float = 5e-3) -> np.ndarray:
    """[X, Y](p) from the flow square, Richardson-extrapolated in t.

    Phi^Y_{-t} Phi^X_{-t} Phi^Y_t Phi^X_t (p) = p + t^2 [X, Y](p) + O(t^3).
    """
    coords = X.chart.coords

    def square(tau):
        q = rk4_flow(X, point, tau)
        q = rk4_flow(Y, q, tau)
        q = rk4_flow(X, q, -tau)
        q = rk4_flow(Y, q, -tau)
        base = np.array([point[c] for c in coords], dtype=float)
        return (np.array([q[c] for c in coords]) - base) / tau**2

    # E(t) = [X, Y] + t C + O(t^2), so 2 E(t/2) - E(t) cancels the linear term
    e1 = square(t)
    e2 = square(t / 2)
    return 2 * e2 - e1


def fd_courant_bracket(a, b, point: dict):
    """The bracket [X1 + xi1, X2 + xi2] evaluated with FD calculus.

    Returns (vector components, covector components) at the point.  Every
    term is computed from finite differences of the component functions:
    [X1,X2]^i = X1(X2^i) - X2(X1^i);
    (L_{X1} xi2)_j = X1^i d_i xi2_j + xi2_i d_j X1^i;
    (i_{X2} d xi1)_j = X2^i (d_i xi1_j - d_j xi1_i).
    """
    chart = a.X.chart
    coords = chart.coords
    n = chart.dim
    X1 = a.X.at(point)
    X2 = b.X.at(point)
    x1fn = [expr_fn(c) for c in a.X.components]
    x2fn = [expr_fn(c) for c in b.X.components]
    xi1fn = [expr_fn(a.xi.coefficient((i,))) for i in range(n)]
    xi2fn = [expr_fn(b.xi.coefficient((i,))) for i in range(n)]

    dX1 = fd_jacobian(x1fn, point, coords)  # dX1[i, j] = d_j X1^i
    dX2 = fd_jacobian(x2fn, point, coords)
    dxi1 = fd_jacobian(xi1fn, point, coords)  # dxi1[i, j] = d_j xi1_i
    dxi2 = fd_jacobian(xi2fn, point, coords)
    xi1 = np.array([f(point) for f in xi1fn])
    xi2 = np.array([f(point) for f in xi2fn])

    vec = dX2 @ X1 - dX1 @ X2
    lie = dxi2 @ X1 + dX1.T @ xi2  # (L_{X1} xi2)_j = X1^i d_i xi2_j + xi2_i d_j X1^i
    curl1 = dxi1.T - dxi1  # (d xi1)_{ij} = d_i xi1_j - d_j xi1_i at [i, j] -> transpose care
    # (i_{X2} d xi1)_j = X2^i (d_i xi1_j - d_j xi1_i)
    ix2dxi1 = np.array(
        [sum(X2[i] * (dxi1[j, i] - dxi1[i, j]) for i in range(n)) for j in range(n)]
    )
    return vec, lie - ix2dxi1
