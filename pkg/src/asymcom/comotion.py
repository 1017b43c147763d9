# comotion.py
"""
R-domain constants of motion

    C_n(y, x) = -x + a log x + F_0(y) + sum_{k=1..n} F_k(y) / x^k

The F_k are never written in closed form. They are the state of a coupled
linear system in y, integrated along y-paths; values therefore depend on
the homotopy class of the path used to reach y.
"""
from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .algebra import ComplexPoly, Contour, Path, contour_path, deform_path, poly_eval, residue
from .errors import MathError
from .model import (
    RDOMAIN,
    SINGULAR,
    BranchState,
    ConstantSeries,
    FVector,
    OdeSpec,
    RkTrajectory,
)
from .quadrature import checked_integral, transport
from .ui.console import get_console

RTOL = 1e-10
ATOL = 1e-12
LOOP_RTOL = 1e-12
LOOP_ATOL = 1e-14
GAUSS_CHECK_TOL = 1e-9


# ---------------------------------------------------------------------------
# The F-system
# ---------------------------------------------------------------------------

def f_derivative(ode: OdeSpec, kind: str, a: complex, c: Sequence[complex], y: complex,
                 F: Sequence[complex], near_tol: float = 1e-13) -> list[complex]:
    """
    F'_0 = ±1/P_0 and, in ascending k,

        F'_k = [(k-1) F_{k-1} - sum_{j<k} P_{k-j} F'_j - a δ_{k1}] / P_0

    `c` is accepted for symmetry with the other operations; the constants are
    already folded into F.
    """
    pv = ode.P_values(y)
    p0 = pv[0]
    if abs(p0) < near_tol * ode.P0.scale:
        raise MathError("NearRoot", "P_0(y) vanishes on the integration path", {"y": y, "P_0": p0})
    m = len(F) - 1
    d = [0j] * (m + 1)
    d[0] = (1.0 if kind == RDOMAIN else -1.0) / p0
    for k in range(1, m + 1):
        acc = (k - 1) * F[k - 1]
        for j in range(k):
            if k - j < len(pv):
                acc -= pv[k - j] * d[j]
        if k == 1 and kind == RDOMAIN:
            acc -= a
        d[k] = acc / p0
    return d


def _field(ode: OdeSpec, kind: str, a: complex):
    def field(y, F):
        return f_derivative(ode, kind, a, (), y, F)
    return field


def _fvector(ode: OdeSpec, kind: str, a: complex, y: complex, values) -> FVector:
    vals = tuple(complex(v) for v in values)
    return FVector(complex(y), vals, tuple(f_derivative(ode, kind, a, (), y, vals)))


def integrate_F(ode: OdeSpec, series: ConstantSeries, path: Path, F_start: FVector,
                rtol: float = RTOL, atol: float = ATOL, samples: int = 0) -> list[FVector]:
    """Analytic continuation of F along `path`; one FVector per recorded point."""
    if abs(path.start - F_start.y) > 1e-12 * (1.0 + abs(F_start.y)):
        raise MathError(
            "StepFailure",
            "path does not start at the point where F is known",
            {"path_start": path.start, "F_at": F_start.y},
        )
    res = transport(_field(ode, series.kind, series.a), path, F_start.values,
                    rtol=rtol, atol=atol, samples=samples)
    return [_fvector(ode, series.kind, series.a, z, u) for z, u in zip(res.points, res.states)]


def _straight(series: ConstantSeries, nodes: Sequence[complex]) -> Path:
    pts = [complex(nodes[0])]
    for z in nodes[1:]:
        if complex(z) != pts[-1]:
            pts.append(complex(z))
    return deform_path(Path.polyline(pts), series.ode.roots, series.eps_root or series.ode.eps_root)


def F_at(series: ConstantSeries, y: complex, y_history: Optional[Sequence[complex]] = None,
         start: Optional[FVector] = None, rtol: float = RTOL, atol: float = ATOL) -> FVector:
    """
    F at y, continued from `start` (default: the series base point) through the
    nodes of `y_history` and then straight to y.
    """
    origin = start or series.base
    nodes = [origin.y] + [complex(z) for z in (() if y_history is None else y_history)] + [complex(y)]
    if all(z == origin.y for z in nodes):
        return _fvector(series.ode, series.kind, series.a, origin.y, origin.values)
    path = _straight(series, nodes)
    return integrate_F(series.ode, series, path, origin, rtol, atol)[-1]


# ---------------------------------------------------------------------------
# Monodromy and the constants a, c_k
# ---------------------------------------------------------------------------

def _loop_base(ode: OdeSpec, contour: Contour) -> complex:
    roots = ode.roots
    radii = contour.resolved_radii(roots)
    j = next(i for i, w in enumerate(contour.winding) if w)
    return roots.roots[j] + 2.0 * radii[j]


def monodromy(ode: OdeSpec, kind: str, a: complex, c: Sequence[complex], contour: Contour, *,
              base_y: Optional[complex] = None, anchors: Sequence[complex] = (),
              order: Optional[int] = None, rtol: float = LOOP_RTOL,
              atol: float = LOOP_ATOL) -> list[complex]:
    """
    (ΔF_0, ..., ΔF_order) after continuation around the closed loop of
    `contour`, starting from F_k(base_y) = anchor_k + c_k.
    """
    order = len(c) + 1 if order is None else order
    base = _loop_base(ode, contour) if base_y is None else complex(base_y)
    F0 = _initial_values(order, c, anchors)
    loop = contour_path(contour, ode.roots, base, ode.eps_root)
    res = transport(_field(ode, kind, a), loop, F0, rtol=rtol, atol=atol)
    return [complex(v) for v in res.final - np.asarray(F0)]


def _initial_values(order: int, c: Sequence[complex], anchors: Sequence[complex]) -> list[complex]:
    vals = [0j] * (order + 1)
    for k in range(order + 1):
        if k < len(anchors):
            vals[k] += complex(anchors[k])
        if 1 <= k <= len(c):
            vals[k] += complex(c[k - 1])
    return vals


def _residue_sum(ode: OdeSpec, contour: Contour) -> tuple[complex, complex]:
    """2πi-weighted residue sums for ∮1/P_0 and ∮P_1/P_0²."""
    one = ComplexPoly((1.0,))
    m0 = m1 = 0j
    for w, p in zip(contour.winding, ode.roots.roots):
        if w:
            m0 += w * residue(one, p, ode.P0, 1)
            m1 += w * residue(ode.poly(1), p, ode.P0, 2)
    s = 2j * math.pi * contour.orientation
    return s * m0, s * m1


def solve_a(ode: OdeSpec, contour: Contour, base_y: Optional[complex] = None) -> complex:
    """
    a = -∮P_1/P_0² / ∮1/P_0, read off from one loop integration with a = 0
    (ΔF_1 is affine in a with slope -∮1/P_0).
    """
    console = get_console()
    M = monodromy(ode, RDOMAIN, 0j, (), contour, base_y=base_y, order=1)
    if abs(M[0]) < 1e-10:
        raise MathError(
            "ZeroDenominator",
            "contour integral of 1/P_0 vanishes",
            {"M_0": M[0], "winding": contour.winding},
        )
    a = M[1] / M[0]

    r0, r1 = _residue_sum(ode, contour)
    if abs(r0) > 0:
        a_res = -r1 / r0
        console.print_debug(f"a = {a:.15g} (residues: {a_res:.15g})")
        if abs(a - a_res) > 1e-8 * (1.0 + abs(a)):
            console.print_warning(f"a from quadrature {a} disagrees with residue sum {a_res}")

    if ode.K >= 1:
        loop = contour_path(contour, ode.roots, _loop_base(ode, contour) if base_y is None else base_y, ode.eps_root)
        p0, p1 = ode.P0, ode.poly(1)
        m0, err0 = checked_integral(lambda z: 1.0 / poly_eval(p0, z), loop)
        m1, err1 = checked_integral(lambda z: poly_eval(p1, z) / poly_eval(p0, z) ** 2, loop)
        console.print_debug(f"Gauss check: M_0={m0:.12g} ({err0:.1e}), M_1={m1:.12g} ({err1:.1e})")
        a_gauss = -m1 / m0 if m0 != 0 else complex("nan")
        gap = abs(a - a_gauss) / (1.0 + abs(a))
        if not max(gap, err0, err1) <= GAUSS_CHECK_TOL:
            console.print_warning(f"a = {complex(a)} vs -M_1/M_0 = {a_gauss} (gap {gap:.1e}, "
                                  f"quadrature errors {err0:.1e}, {err1:.1e})")
    return complex(a)


def solve_c(ode: OdeSpec, contour: Contour, a: complex, k: int, c_prev: Sequence[complex] = (), *,
            base_y: Optional[complex] = None, anchors: Sequence[complex] = ()) -> complex:
    """c_k such that ΔF_{k+1} vanishes; ΔF_{k+1} is affine in c_k with slope k∮1/P_0."""
    if len(c_prev) != k - 1:
        raise MathError("InvalidContour", "c_1..c_{k-1} must be fixed first", {"k": k, "given": len(c_prev)})
    m_zero = monodromy(ode, RDOMAIN, a, list(c_prev) + [0j], contour,
                       base_y=base_y, anchors=anchors, order=k + 1)
    m_one = monodromy(ode, RDOMAIN, a, list(c_prev) + [1.0 + 0j], contour,
                      base_y=base_y, anchors=anchors, order=k + 1)
    slope = m_one[k + 1] - m_zero[k + 1]
    expected = k * m_zero[0]
    if abs(slope) < 1e-10:
        raise MathError("ZeroDenominator", "c_k does not enter the monodromy", {"k": k, "slope": slope})
    if abs(slope - expected) > 1e-6 * abs(expected):
        get_console().print_warning(f"c_{k}: slope {slope} differs from k*M_0 = {expected}")
    return complex(-m_zero[k + 1] / slope)


def build_constant(ode: OdeSpec, contour: Contour, base_y: complex, n: Optional[int] = None, *,
                   anchors: Sequence[complex] = (), close_top: bool = False) -> ConstantSeries:
    """
    Fix a and c_1..c_{n-1} (c_n as well with `close_top`) on the contour and
    anchor F_k(base_y) = anchor_k + c_k.
    """
    console = get_console()
    n = ode.n if n is None else n
    roots = ode.roots
    base_y = complex(base_y)
    j, d = roots.nearest(base_y)
    if d < ode.eps_root:
        raise MathError("NearRoot", "base point lies within eps_root of a root",
                        {"base_y": base_y, "root": roots.roots[j]})
    anchors = tuple(complex(v) for v in anchors)

    a = solve_a(ode, contour, base_y)
    c: list[complex] = []
    top = n if close_top else n - 1
    for k in range(1, top + 1):
        c.append(solve_c(ode, contour, a, k, c, base_y=base_y, anchors=anchors))
        console.print_debug(f"c_{k} = {c[-1]:.15g}")

    closure = monodromy(ode, RDOMAIN, a, c, contour, base_y=base_y, anchors=anchors, order=len(c) + 1)
    worst = max(abs(v) for v in closure[1:])
    if worst > 1e-9:
        console.print_warning(f"monodromy closure {worst:.2e} exceeds 1e-9")

    base_F = _initial_values(n, c, anchors)
    series = ConstantSeries(RDOMAIN, ode.with_order(n), a, tuple(c), base_y, tuple(base_F),
                            contour, anchors, (), ode.eps_root)
    return series.with_spine([_fvector(ode, RDOMAIN, a, base_y, base_F)])


def extend_spine(series: ConstantSeries, ys: Sequence[complex]) -> ConstantSeries:
    """Cache F at each y reached straight from the base point."""
    return series.with_spine(F_at(series, y) for y in ys)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def combine(series: ConstantSeries, x: complex, log_x: complex, F: Sequence[complex]) -> complex:
    acc = 0j
    for Fk in reversed(F[1:series.n + 1]):
        acc = (acc + Fk) / x
    if series.kind == SINGULAR:
        return x + F[0] + acc
    return -x + series.a * log_x + F[0] + acc


def eval_C(series: ConstantSeries, x: complex, branch: Optional[BranchState], y: complex,
           y_history: Optional[Sequence[complex]] = None, F: Optional[FVector] = None) -> complex:
    """C_n at (x, y), with F continued along y_history and log x on `branch`."""
    if branch is None:
        branch = BranchState.start(x)
    elif branch.x != complex(x):
        branch = branch.advance(x)
    if F is None:
        F = F_at(series, y, y_history)
    return combine(series, complex(x), branch.log_x, F.values)


def residual(series: ConstantSeries, ode: OdeSpec, x: complex, y: complex,
             F: Optional[FVector] = None, y_history: Optional[Sequence[complex]] = None) -> complex:
    """D_x C_n = ∂_x C_n + ∂_y C_n · Q evaluated directly."""
    if F is None:
        F = F_at(series, y, y_history)
    n = series.n
    vals = F.values[:n + 1]
    ders = f_derivative(ode, series.kind, series.a, series.c, y, vals)
    dx = -1.0 if series.kind == RDOMAIN else 1.0
    if series.kind == RDOMAIN:
        dx += series.a / x
    dx -= sum(k * vals[k] * x ** (-k - 1) for k in range(1, n + 1))
    dy = sum(ders[k] * x ** (-k) for k in range(n + 1))
    return complex(dx + dy * ode.Q(y, x))


def residual_remainder(ode: OdeSpec, n: int, x: complex, F: FVector) -> complex:
    """
    The same quantity in cancellation-free form:
    sum_{m=n+1}^{n+K} x^-m sum_{k+j=m, k<=n} F'_k P_j(y) - n F_n x^-(n+1).
    """
    pv = ode.P_values(F.y)
    dF = F.derivatives or tuple(f_derivative(ode, RDOMAIN, 0j, (), F.y, F.values))
    return complex(_remainder(ode, n, x, pv, F.values, dF))


def _remainder(ode: OdeSpec, n: int, x: complex, pv: Sequence[complex], F: Sequence[complex],
               dF: Sequence[complex]) -> complex:
    total = -n * F[n] * x ** (-n - 1)
    for m in range(n + 1, n + len(pv)):
        s = 0j
        for k in range(max(0, m - len(pv) + 1), n + 1):
            s += dF[k] * pv[m - k]
        total += s * x ** (-m)
    return total


# ---------------------------------------------------------------------------
# Transport along trajectories
# ---------------------------------------------------------------------------

def conserved_along(series: ConstantSeries, x_path: Path, y0: complex, *,
                    y_history: Optional[Sequence[complex]] = None,
                    samples: int = 200, rtol: float = 1e-11, atol: float = 1e-13,
                    atol_drift: float = 1e-16) -> tuple[RkTrajectory, np.ndarray]:
    """
    Integrate y together with F_1..F_n and the accumulated drift ∫D_xC_n dx
    along x_path; returns the trajectory and C_n(x) at every sample.
    """
    ode, n = series.ode, series.n
    start = F_at(series, y0, y_history)
    x_start = x_path.start
    C0 = eval_C(series, x_start, None, y0, F=start)

    def field(x, u):
        y = u[0]
        F = np.concatenate(([0j], u[1:n + 1]))
        pv = ode.P_values(y)
        dF = f_derivative(ode, series.kind, series.a, series.c, y, F)
        q = 0j
        for p in reversed(pv):
            q = q / x + p
        out = np.empty_like(u)
        out[0] = q
        out[1:n + 1] = np.asarray(dF[1:]) * q
        out[n + 1] = _remainder(ode, n, x, pv, F, dF)
        return out

    u0 = np.concatenate(([y0], start.values[1:n + 1], [0j]))
    tol = np.full(n + 2, atol)
    tol[-1] = atol_drift
    res = transport(field, x_path, u0, rtol=rtol, atol=tol, samples=samples)
    traj = RkTrajectory(res.points, res.states[:, 0], rtol, atol, res.nfev)
    return traj, C0 + res.states[:, -1]


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------

def path_admissibility(ode: OdeSpec, xs: Sequence[complex], ys: Sequence[complex]) -> float:
    """
    sup over sample pairs of |Re ∫ ∂_yQ dx| / log(|x_j / x_i| + 1) along a
    sampled trajectory. O(1) values indicate an admissible path.
    """
    xs = np.asarray(xs, dtype=complex)
    ys = np.asarray(ys, dtype=complex)
    g = ode.dQ_dy(ys, xs)
    I = np.concatenate(([0j], cumulative_trapezoid(g, xs)))
    num = np.abs(np.real(I[None, :] - I[:, None]))
    den = np.log(np.abs(xs[None, :] / xs[:, None]) + 1.0)
    iu = np.triu_indices(len(xs), k=1)
    return float(np.max(num[iu] / den[iu]))


def growth_constant(series: ConstantSeries, points: Sequence[complex]) -> float:
    """Smallest A with |F'_k| <= A k! and |F_k| <= A k!(|y|+1) on the sample points."""
    A = 0.0
    for y in points:
        F = F_at(series, y)
        for k, (v, dv) in enumerate(zip(F.values, F.derivatives)):
            f = math.factorial(k)
            A = max(A, abs(dv) / f, abs(v) / (f * (abs(y) + 1.0)))
    return A
