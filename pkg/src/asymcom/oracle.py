# oracle.py
"""
Ground truth and local representations near the roots of P_0.

rk_integrate is the reference solver every other module is checked
against. Close to a root p the solution is described by the power series
p + sum b_k x^-k plus a leading transseries term C x^nu e^(mu x); the
functions below fit C, tag trajectory samples by region and match the
near-root description against the R-domain constant on the overlap band.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.integrate import solve_ivp

from .algebra import ComplexPoly, Contour, Path, poly_eval
from .comotion import build_constant, combine
from .errors import MathError
from .model import (
    BranchState,
    Equilibrium,
    HandoffRecord,
    OdeSpec,
    PhaseField,
    RegionTag,
    RkTrajectory,
    RootExpansion,
    TransseriesFit,
)
from .quadrature import gauss_integral
from .ui.console import get_console

EPS_NEAR = 0.05
OVERLAP = 0.1
R0 = 10.0
BLOWUP = 1e6

FRAME_ORDER = 8
FRAME_ATOL = 1e-250


# ---------------------------------------------------------------------------
# Power series at a root
# ---------------------------------------------------------------------------

def _taylor(poly: ComplexPoly, p: complex) -> list[complex]:
    out = []
    q = poly
    for r in range(poly.degree + 1):
        out.append(complex(poly_eval(q, p)) / math.factorial(r))
        q = q.derivative()
    return out


def power_series_at_root(ode: OdeSpec, p: complex, M: int = 6) -> RootExpansion:
    """
    Solve p + sum_{k=1..M} b_k x^-k order by order; mu = P_0'(p) and nu is the
    coefficient of δ/x in the linearization about p + b_1/x:
    nu = P_1'(p) + P_0''(p) b_1.
    """
    tay = [_taylor(P, p) for P in ode.P]
    mu = tay[0][1] if len(tay[0]) > 1 else 0j
    if abs(mu) < 1e-8 * ode.P0.scale * (1.0 + abs(p)) ** max(ode.P0.degree - 1, 0):
        raise MathError("MultipleRoot", "P_0'(p) vanishes", {"root": p})

    b = np.zeros(M + 1, dtype=complex)
    for m in range(1, M + 1):
        lhs = -(m - 1) * b[m - 1] if m >= 2 else 0j
        powers = [np.eye(1, M + 1, 0, dtype=complex)[0]]
        for _ in range(max(len(t) for t in tay) - 1):
            powers.append(np.convolve(powers[-1], b)[:M + 1])
        rhs = 0j
        for j, t in enumerate(tay):
            order = m - j
            if order < 0:
                continue
            rhs += sum(t[r] * powers[r][order] for r in range(len(t)))
        b[m] = (lhs - rhs) / mu

    b1 = b[1] if M >= 1 else 0j
    p1_prime = tay[1][1] if len(tay) > 1 and len(tay[1]) > 1 else 0j
    p0_second = 2.0 * tay[0][2] if len(tay[0]) > 2 else 0j
    nu = p1_prime + p0_second * b1
    return RootExpansion(complex(p), tuple(complex(v) for v in b[1:]), complex(mu), complex(nu))


def expansion_residual(ode: OdeSpec, expansion: RootExpansion, x: complex) -> complex:
    """ỹ' - Q(ỹ, x) for the truncated power series."""
    dy = sum(-k * bk * x ** (-k - 1) for k, bk in enumerate(expansion.b, start=1))
    return complex(dy - ode.Q(expansion.value(x), x))


def forcing_coefficients(ode: OdeSpec, expansion: RootExpansion) -> np.ndarray:
    """
    Q(ỹ, x) - ỹ'(x) as a polynomial in t = 1/x (ascending). ỹ is a polynomial
    in t, so the result is exact; the coefficients through the expansion
    order vanish and are set to zero.
    """
    M = expansion.order
    u = np.concatenate(([0j], np.asarray(expansion.b, dtype=complex)))
    size = max(max(k + P.degree * M for k, P in enumerate(ode.P)), M + 1) + 1
    out = np.zeros(size, dtype=complex)
    powers = [np.ones(1, dtype=complex)]
    for _ in range(max(P.degree for P in ode.P)):
        powers.append(np.convolve(powers[-1], u))
    for k, P in enumerate(ode.P):
        for r, coef in enumerate(_taylor(P, expansion.root)):
            term = coef * powers[r]
            out[k:k + len(term)] += term
    for m, bm in enumerate(expansion.b, start=1):
        out[m + 1] += m * bm
    out[:M + 1] = 0
    return out


# ---------------------------------------------------------------------------
# Runge-Kutta oracle
# ---------------------------------------------------------------------------

def _rhs(ode: OdeSpec):
    P = ode.P

    def field(x, u):
        y = u[0]
        acc = 0j
        for p in reversed(P):
            acc = acc / x + poly_eval(p, y)
        return [acc]
    return field


def _scaled_derivatives(poly: ComplexPoly) -> tuple[ComplexPoly, ...]:
    """P^(r) / r! for r = 0..deg P."""
    out = [poly]
    q = poly
    for r in range(1, poly.degree + 1):
        q = q.derivative()
        f = math.factorial(r)
        out.append(ComplexPoly(tuple(c / f for c in q.coeffs)))
    return tuple(out)


@dataclass(frozen=True, eq=False)
class RootFrame:
    """
    Coordinates δ = y - ỹ(x) about one root, ỹ the truncated power series.

        δ' = sum_{r>=1} (∂_y^r Q(ỹ, x) / r!) δ^r + (Q(ỹ, x) - ỹ')

    Both parts are evaluated without subtracting nearly equal numbers, so δ
    keeps its relative accuracy however close y comes to the root.
    """
    index: int
    expansion: RootExpansion
    taylor: tuple[tuple[ComplexPoly, ...], ...]
    forcing: np.ndarray

    @classmethod
    def at(cls, ode: OdeSpec, index: int, order: int = FRAME_ORDER) -> "RootFrame":
        exp_ = power_series_at_root(ode, ode.roots.roots[index], order)
        return cls(index, exp_, tuple(_scaled_derivatives(P) for P in ode.P),
                   forcing_coefficients(ode, exp_))

    @property
    def root(self) -> complex:
        return self.expansion.root

    def base(self, x):
        return self.expansion.value(x)

    def field(self, x, u):
        d = u[0]
        t = 1.0 / x
        yb = self.expansion.value(x)
        acc = 0j
        for row in reversed(self.taylor):
            inner = 0j
            for c in reversed(row[1:]):
                inner = (inner + poly_eval(c, yb)) * d
            acc = acc * t + inner
        return [acc + npoly.polyval(t, self.forcing)]


def _step_failure(piece, sol, s0: float, y_last: complex) -> MathError:
    z = complex(piece.point(sol.t[-1] if sol.t.size else s0))
    if abs(y_last) > 1e3:
        return MathError("BlowupDetected", "solution blows up (step size underflow)", {"x": z, "y": y_last})
    return MathError("StepUnderflow", "step size underflow away from a blow-up",
                     {"x": z, "y": y_last, "solver": sol.message})


def rk_integrate(ode: OdeSpec, x_path: Path, y0: complex, tol: float = 1e-10, *,
                 atol: float = 1e-12, samples: int = 50, blowup: float = BLOWUP,
                 frames: Optional[tuple[float, float]] = (EPS_NEAR, OVERLAP),
                 frame_order: int = FRAME_ORDER) -> RkTrajectory:
    """
    Adaptive DOP853 along each piece of x_path with complex state; each
    piece records `samples` interior points plus its end.

    Once y comes within frames[0] of a root the state becomes δ = y - ỹ(x)
    about that root (RootFrame), integrated under relative error control
    only, until |y - p| exceeds frames[1]. Samples always report y.
    Raises BlowupDetected (details carry the last x and y) once |y| > blowup.
    """
    roots = ode.roots
    direct = _rhs(ode)
    cache: dict[int, RootFrame] = {}

    def frame_at(j: int) -> RootFrame:
        if j not in cache:
            cache[j] = RootFrame.at(ode, j, frame_order)
        return cache[j]

    t_eval = np.linspace(0.0, 1.0, samples + 2)[1:] if samples else None
    xs = [complex(x_path.start)]
    ys = [complex(y0)]
    nfev = 0
    y = complex(y0)
    j0, d0 = roots.nearest(y)
    frame = frame_at(j0) if frames is not None and d0 < frames[0] else None

    def partial() -> RkTrajectory:
        return RkTrajectory(np.asarray(xs), np.asarray(ys), tol, atol, nfev)

    for piece in x_path.pieces:
        s0 = 0.0
        while s0 < 1.0:
            fr = frame
            if fr is None:
                state = y
                field = direct

                def blown(s, v, piece=piece):
                    return abs(v[0]) - blowup
                blown.terminal = True
                events = [blown]
                if frames is not None:
                    def enter(s, v):
                        return roots.nearest(v[0])[1] - frames[0]
                    enter.terminal = True
                    enter.direction = -1
                    events.append(enter)
            else:
                state = y - fr.base(complex(piece.point(s0)))
                field = fr.field

                def leave(s, v, piece=piece, fr=fr):
                    return abs(fr.base(piece.point(s)) + v[0] - fr.root) - frames[1]
                leave.terminal = True
                leave.direction = 1
                events = [leave]

            def rhs(s, v, piece=piece, field=field):
                return np.asarray(field(piece.point(s), v), dtype=complex) * piece.tangent(s)

            te = None if t_eval is None else t_eval[t_eval > s0]
            sol = solve_ivp(rhs, (s0, 1.0), np.array([state], dtype=complex), method="DOP853",
                            rtol=tol, atol=atol if fr is None else FRAME_ATOL,
                            t_eval=te, events=events)
            nfev += sol.nfev

            def to_y(s, v, fr=fr, piece=piece):
                return complex(v) if fr is None else complex(fr.base(piece.point(s)) + v)

            if sol.status == -1:
                last = to_y(sol.t[-1], sol.y[0, -1]) if sol.t.size else y
                raise _step_failure(piece, sol, s0, last)
            if te is not None:
                for s, v in zip(sol.t, sol.y[0]):
                    xs.append(complex(piece.point(s)))
                    ys.append(to_y(s, v))
            if sol.status == 1:
                fired = next(i for i, t in enumerate(sol.t_events) if t.size)
                s_hit = float(sol.t_events[fired][0])
                y_hit = to_y(s_hit, sol.y_events[fired][0][0])
                if fr is None and fired == 0:
                    x_hit = complex(piece.point(s_hit))
                    xs.append(x_hit)
                    ys.append(y_hit)
                    raise MathError("BlowupDetected", f"|y| exceeded {blowup:g}",
                                    {"x": x_hit, "y": y_hit, "trajectory": partial()})
                frame = frame_at(roots.nearest(y_hit)[0]) if fr is None else None
                y, s0 = y_hit, s_hit
                continue
            y = to_y(1.0, sol.y[0, -1])
            if t_eval is None:
                xs.append(complex(piece.end))
                ys.append(y)
            break

    traj = partial()
    get_console().print_debug(f"rk: {len(traj)} samples, {nfev} evaluations, "
                              f"{len(cache)} root frame(s)")
    return traj


# ---------------------------------------------------------------------------
# Transseries constant
# ---------------------------------------------------------------------------

def _log_branch(xs: np.ndarray) -> np.ndarray:
    return np.log(np.abs(xs)) + 1j * np.unwrap(np.angle(xs))


def _complex_median(z: np.ndarray) -> complex:
    return complex(np.median(z.real), np.median(z.imag))


def _phi(ode: OdeSpec, p: complex, mu: complex, y: complex, nodes: int = 32) -> complex:
    """Φ(y) = (y-p) exp(mu ∫_p^y [1/P_0(s) - 1/(mu (s-p))] ds), with Φ' = mu Φ / P_0."""
    if y == p:
        return 0j
    P0 = ode.P0
    integral = gauss_integral(lambda s: 1.0 / poly_eval(P0, s) - 1.0 / (mu * (s - p)),
                              Path.polyline([p, y]), nodes)
    return complex((y - p) * np.exp(mu * integral))


def _phi_inverse(ode: OdeSpec, p: complex, mu: complex, xi: complex, tol: float = 1e-14,
                 max_iter: int = 50) -> complex:
    """δ with Φ(p + δ) = xi, by Newton from δ = xi."""
    d = complex(xi)
    for _ in range(max_iter):
        phi = _phi(ode, p, mu, p + d)
        step = (phi - xi) / (mu * phi / poly_eval(ode.P0, p + d))
        d -= step
        if abs(step) <= tol * abs(d):
            return d
    raise MathError("NewtonDiverged", "normalizing map could not be inverted", {"root": p, "xi": xi})


def transseries_fit(expansion: RootExpansion, traj: RkTrajectory,
                    window: Optional[tuple[int, int]] = None, *, near: float = OVERLAP,
                    min_gap: float = 1e-8, max_spread: float = 0.05,
                    ode: Optional[OdeSpec] = None) -> TransseriesFit:
    """
    Per-sample estimates (y - ỹ) x^-nu e^(-mu x) over a window of trajectory
    samples; C_trans is their median and `stability` the median relative
    deviation from it. With `ode`, y - ỹ is first passed through the
    normalizing map Φ of P_0 at the root.
    """
    i0, i1 = window if window is not None else (0, len(traj))
    xs = np.asarray(traj.xs[i0:i1], dtype=complex)
    ys = np.asarray(traj.ys[i0:i1], dtype=complex)
    if xs.size == 0:
        raise MathError("NotInRootRegion", "empty fit window", {"window": (i0, i1)})
    far = np.abs(ys - expansion.root)
    if np.any(far >= near):
        raise MathError(
            "NotInRootRegion",
            f"samples leave the |y - p| < {near} disk",
            {"root": expansion.root, "max_distance": float(far.max())},
        )
    delta = ys - expansion.value(xs)
    keep = np.abs(delta) >= min_gap
    if not np.any(keep):
        raise MathError("UnstableFit", "no sample separates from the power series", {"min_gap": min_gap})
    delta = delta[keep]
    if ode is not None:
        p, mu = expansion.root, expansion.mu
        delta = np.array([_phi(ode, p, mu, p + d) for d in delta])
    logx = _log_branch(xs)[keep]
    est = delta * np.exp(-expansion.nu * logx - expansion.mu * xs[keep])
    C = _complex_median(est)
    stability = float(np.median(np.abs(est - C)) / abs(C)) if C != 0 else math.inf
    if not stability < max_spread:
        raise MathError(
            "UnstableFit",
            "transseries estimates do not settle",
            {"C_trans": C, "stability": stability, "samples": int(keep.sum())},
        )
    return TransseriesFit(C, (complex(xs[0]), complex(xs[-1])), stability, int(keep.sum()))


# ---------------------------------------------------------------------------
# Regions
# ---------------------------------------------------------------------------

def detect_region(ode: OdeSpec, x: complex, y: complex, eps_near: float = EPS_NEAR,
                  overlap: float = OVERLAP, r0: float = R0) -> RegionTag:
    """
    NearRoot(j) inside eps_near of root j; RDomain at least `overlap` from every
    root with |x| >= r0; Unknown in between (the overlap band) or for small |x|.
    """
    j, d = ode.roots.nearest(y)
    if d < eps_near:
        return RegionTag("NearRoot", j)
    if d < overlap or abs(x) < r0:
        return RegionTag("Unknown")
    return RegionTag("RDomain")


def region_sequence(ode: OdeSpec, xs: Sequence[complex], ys: Sequence[complex], *,
                    eps_near: float = EPS_NEAR, overlap: float = OVERLAP,
                    r0: float = R0) -> tuple[list[RegionTag], list[int]]:
    """
    Region tag per sample and the order in which the roots are first
    approached, i.e. their overlap bands (|y - p| < overlap) first entered.
    """
    tags = [detect_region(ode, x, y, eps_near, overlap, r0) for x, y in zip(xs, ys)]
    order: list[int] = []
    for y in ys:
        j, d = ode.roots.nearest(complex(y))
        if d < overlap and j not in order:
            order.append(j)
    return tags, order


def near_root_visits(tags: Sequence[RegionTag]) -> list[int]:
    """Roots in the order of their first NearRoot sample."""
    out: list[int] = []
    for tag in tags:
        if tag.kind == "NearRoot" and tag.root not in out:
            out.append(tag.root)
    return out


def _episodes(tags: Sequence[RegionTag]) -> list[tuple[int, int, int]]:
    out = []
    i = 0
    while i < len(tags):
        if tags[i].kind == "NearRoot":
            j = tags[i].root
            k = i
            while k < len(tags) and tags[k].kind == "NearRoot" and tags[k].root == j:
                k += 1
            out.append((j, i, k))
            i = k
        else:
            i += 1
    return out


def _band(tags: Sequence[RegionTag], ys: np.ndarray, p: complex, k: int, step: int,
          overlap: float) -> list[int]:
    """Unknown samples inside the overlap disk, walking away from an episode."""
    out = []
    while 0 <= k < len(tags) and tags[k].kind == "Unknown" and abs(ys[k] - p) < overlap:
        out.append(k)
        k += step
    return out


def _rdomain_band(ode: OdeSpec, j: int, n: int, xs: np.ndarray, ys: np.ndarray, args: np.ndarray,
                  band: Sequence[int]) -> dict[int, complex]:
    """
    y from C_n(y, x) = K on the band. C_n is built on a loop around root j
    based at the outermost band sample, K is its value there, and F is
    continued inward through the band samples.
    """
    from .inversion import newton_invert

    path = list(reversed(band))
    outer = path[0]
    series = build_constant(ode, Contour.around(j, len(ode.roots)), ys[outer], n)
    K = combine(series, complex(xs[outer]), complex(math.log(abs(xs[outer])), args[outer]),
                series.base.values)
    out = {}
    for m, k in enumerate(path):
        branch = BranchState(complex(xs[k]), float(args[k]))
        out[k] = newton_invert(series, K, xs[k], ys[k], branch=branch,
                               y_history=[ys[q] for q in path[1:m]])
    return out


def handoff(ode: OdeSpec, traj: RkTrajectory, tags: Sequence[RegionTag], *, M: int = FRAME_ORDER,
            n: int = 1, overlap: float = OVERLAP) -> list[HandoffRecord]:
    """
    Compare the two representations on the overlap band next to every
    NearRoot episode. An episode is split at its deepest sample and each
    side is fitted and matched separately:

        y_R  Newton inversion of the R-domain constant C_n (loop around the root)
        y_T  ỹ(x) + Φ^-1(C_trans x^nu e^(mu x))

    residual = max |y_R - y_T| / |y_T - ỹ| over the band samples and
    bound = max(2|x|^-n, 2 * stability) at the smallest |x| of the band.
    """
    console = get_console()
    roots = ode.roots.roots
    xs = np.asarray(traj.xs, dtype=complex)
    ys = np.asarray(traj.ys, dtype=complex)
    args = _log_branch(xs).imag
    records: list[HandoffRecord] = []

    for j, i0, i1 in _episodes(tags):
        p = roots[j]
        exp_ = power_series_at_root(ode, p, M)
        deep = i0 + int(np.argmin(np.abs(ys[i0:i1] - exp_.value(xs[i0:i1]))))
        sides = (
            ("entry", (i0, deep + 1), _band(tags, ys, p, i0 - 1, -1, overlap)),
            ("exit", (deep, i1), _band(tags, ys, p, i1, 1, overlap)),
        )
        for side, window, band in sides:
            if not band:
                continue
            try:
                fit = transseries_fit(exp_, traj, window, near=overlap, ode=ode)
                y_R = _rdomain_band(ode, j, n, xs, ys, args, band)
            except MathError as e:
                console.print_debug(f"handoff root {j} ({side}) skipped: {e.kind}")
                continue

            worst = 0.0
            for k in band:
                y_base = exp_.value(xs[k])
                xi = fit.C_trans * np.exp(exp_.nu * complex(math.log(abs(xs[k])), args[k]) + exp_.mu * xs[k])
                d_T = _phi_inverse(ode, p, exp_.mu, complex(xi))
                worst = max(worst, abs(y_R[k] - (y_base + d_T)) / abs(d_T))
            x_min = float(np.min(np.abs(xs[band])))
            bound = max(2.0 * x_min ** (-n), 2.0 * fit.stability)
            lo, hi = min(band), max(band)
            records.append(HandoffRecord(j, (complex(xs[lo]), complex(xs[hi])), fit.C_trans,
                                         worst, bound, side))
            console.print_debug(f"handoff root {j} ({side}): residual {worst:.3e} bound {bound:.3e}")
    return records


# ---------------------------------------------------------------------------
# Phase portraits
# ---------------------------------------------------------------------------

def classify(ode: OdeSpec, t: float, tol: float = 1e-9) -> tuple[Equilibrium, ...]:
    e = np.exp(1j * t)
    out = []
    dP0 = ode.P0.derivative()
    for j, p in enumerate(ode.roots.roots):
        lam = complex(e * poly_eval(dP0, p))
        if lam.real < -tol * abs(lam):
            kind = "stable"
        elif lam.real > tol * abs(lam):
            kind = "unstable"
        else:
            kind = "marginal"
        out.append(Equilibrium(j, p, lam, kind))
    return tuple(out)


def phase_field(ode: OdeSpec, x0: complex, t: float, grid: tuple[Sequence[float], Sequence[float]],
                s: float = 0.0) -> PhaseField:
    """
    Real field of dy/ds = e^(it) Q(y, x0 + s e^(it)) on the grid of
    (Re y, Im y) values, with the roots of P_0 as equilibria.
    """
    re, im = np.meshgrid(np.asarray(grid[0], float), np.asarray(grid[1], float))
    Y = re + 1j * im
    e = np.exp(1j * t)
    V = e * ode.Q(Y, x0 + s * e)
    points = np.stack([re.ravel(), im.ravel()], axis=1)
    vectors = np.stack([V.real.ravel(), V.imag.ravel()], axis=1)
    return PhaseField(float(t), complex(x0), points, vectors, classify(ode, t))


def attractor(ode: OdeSpec, x0: complex, t: float, y0: complex, length: float = 60.0,
              eps_near: float = EPS_NEAR) -> Optional[int]:
    """Index of the root the solution settles on along x = x0 + s e^(it), if any."""
    path = Path.polyline([x0, x0 + length * np.exp(1j * t)], plane="x")
    traj = rk_integrate(ode, path, y0, samples=0)
    j, d = ode.roots.nearest(complex(traj.ys[-1]))
    return j if d < eps_near else None
