# singular.py
"""
Singular-domain constants of motion, based at y = ∞:

    C(y, x) = x + F_0(y) + sum_k F_k(y) / x^k,   F_k(∞) = 0

A movable singularity (y = ∞) therefore sits at x_sing = C(y0, x0).
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import replace
from typing import Optional, Sequence

import numpy as np

from .algebra import Arc, Contour, Path, Ray, Segment, contour_path, poly_eval
from .comotion import F_at, _fvector, combine, f_derivative, integrate_F
from .errors import AsymError, MathError, VerificationError
from .model import SINGULAR, OdeSpec, SingularityReport, SingularSeries
from .oracle import BLOWUP, rk_integrate
from .quadrature import transport
from .ui.console import get_console


# ---------------------------------------------------------------------------
# Building the series
# ---------------------------------------------------------------------------

def _decay_q(ode: OdeSpec, direction: complex, y_max: float) -> int:
    r = np.geomspace(y_max, 4.0 * y_max, 16)
    y = direction * r
    p0 = np.abs(poly_eval(ode.P0, y))
    qs = []
    for k in range(1, len(ode.P)):
        if ode.P[k].is_zero:
            continue
        ratio = np.abs(poly_eval(ode.P[k], y)) / p0
        slope = np.polyfit(np.log(r), np.log(ratio), 1)[0]
        if -slope < -0.1:
            raise MathError(
                "DecayViolation",
                f"|P_{k}/P_0| grows along the singular direction",
                {"k": k, "fitted_q": float(-slope)},
            )
        qs.append(-slope)
    return int(round(min(qs))) if qs else 0


def _tail(ode: OdeSpec, n: int, z: complex) -> tuple[np.ndarray, tuple[int, ...]]:
    """
    F_0..F_n at z from the leading power of each F'_k, F'_k ~ z^-s:
    ∫_∞^z F'_k = F'_k(z) z / (1 - s). Exponents are read off a ladder z 2^j.
    """
    ladder = z * 2.0 ** np.arange(3)
    vals = np.zeros((len(ladder), n + 1), dtype=complex)
    decay = []
    for k in range(n + 1):
        d = np.array([f_derivative(ode, SINGULAR, 0j, (), pt, vals[i, :k + 1])[k]
                      for i, pt in enumerate(ladder)])
        if np.all(d == 0):
            decay.append(0)
            continue
        s1 = -math.log2(abs(d[1] / d[0]))
        s2 = -math.log2(abs(d[2] / d[1]))
        s = int(round(s1))
        if s <= 1 or abs(s1 - s2) > 0.1:
            raise MathError(
                "DecayViolation",
                f"F'_{k} does not decay fast enough at infinity",
                {"k": k, "exponent": -s1},
            )
        vals[:, k] = d * ladder / (1 - s)
        decay.append(1 - s)
    return vals[0], tuple(decay)


def build_singular(ode: OdeSpec, direction: complex = 1.0, n: Optional[int] = None,
                   y_max: float = 1e3, *, far: float = 1e4) -> SingularSeries:
    """
    F_k normalized to vanish at ∞ along `direction`. The tail beyond
    y_max * far is taken from the leading asymptotics; the stretch down to
    y_max is integrated on a log-scaled ray.
    """
    m0 = ode.P0.degree
    if m0 < 2:
        raise MathError("DegreeTooLow", "singular constants need deg P_0 >= 2", {"degree": m0})
    n = ode.n if n is None else n
    direction = complex(direction) / abs(complex(direction))
    q = _decay_q(ode, direction, y_max)

    z_far = direction * y_max * far
    base_y = direction * y_max
    F_far, decay = _tail(ode, n, z_far)
    field = lambda y, F: f_derivative(ode, SINGULAR, 0j, (), y, F)
    res = transport(field, Path((Ray(z_far, base_y),)), F_far, rtol=1e-12, atol=1e-30)
    base_F = tuple(complex(v) for v in res.final)
    get_console().print_debug(f"singular tail: q={q}, decay={decay}, F(y_max)={base_F}")

    base = _fvector(ode, SINGULAR, 0j, base_y, base_F)
    return SingularSeries(SINGULAR, ode.with_order(n), 0j, (), base_y, base_F, None, (),
                          (base,), ode.eps_root, direction, q, float(y_max), decay)


def decay_exponent(sing: SingularSeries, k: int, span: float = 4.0, samples: int = 9) -> float:
    """Fitted exponent of |F_k| on |y| in [y_max, span * y_max] along the ray."""
    outer = sing.base_y * span
    pts = integrate_F(sing.ode, sing, Path((Ray(sing.base_y, outer),)), sing.base,
                      rtol=1e-12, atol=1e-30, samples=samples)
    r = np.array([abs(f.y) for f in pts])
    v = np.array([abs(f.values[k]) for f in pts])
    if np.all(v == 0):
        return -math.inf
    return float(np.polyfit(np.log(r), np.log(v), 1)[0])


# ---------------------------------------------------------------------------
# Locating singularities
# ---------------------------------------------------------------------------

def _check_y0(sing: SingularSeries, y0: complex) -> None:
    j, d = sing.ode.roots.nearest(y0)
    if d < sing.eps_root:
        raise MathError(
            "PathThroughRoot",
            "y0 is too close to a root of P_0",
            {"y0": y0, "root": sing.ode.roots.roots[j], "distance": d},
        )


def locate_singularity(sing: SingularSeries, x0: complex, y0: complex,
                       y_history: Optional[Sequence[complex]] = None) -> SingularityReport:
    """x_sing = x0 + F_0(y0) + sum F_k(y0) / x0^k with F continued from ∞."""
    x0, y0 = complex(x0), complex(y0)
    _check_y0(sing, y0)
    F = F_at(sing, y0, y_history)
    x_sing = combine(sing, x0, 0j, F.values)
    return SingularityReport(x_sing, tuple(0 for _ in sing.ode.roots.roots), sing.n, x0, y0)


def singularity_array(sing: SingularSeries, x0: complex, y0: complex,
                      shifts: Sequence[Sequence[int]]) -> list[SingularityReport]:
    """
    One prediction per shift vector m: F is continued around m_j loops of
    root p_j (based at y0) before evaluating at x0, so each shift adds the full
    period of F_0 + F_1/x0 + ... rather than just the residue of F_0.
    """
    x0, y0 = complex(x0), complex(y0)
    _check_y0(sing, y0)
    ode = sing.ode
    F0 = F_at(sing, y0)
    out = []
    for shift in shifts:
        shift = tuple(int(m) for m in shift)
        if not any(shift):
            F = F0
        else:
            loop = contour_path(Contour(shift), ode.roots, y0, sing.eps_root)
            F = integrate_F(ode, sing, loop, F0, rtol=1e-12, atol=1e-14)[-1]
        out.append(SingularityReport(combine(sing, x0, 0j, F.values), shift, sing.n, x0, y0))
    return out


# ---------------------------------------------------------------------------
# Verification by RK blow-up march
# ---------------------------------------------------------------------------

def local_estimate(ode: OdeSpec, x: complex, y: complex) -> complex:
    """
    x - g/g' with g = y/y'. Exact for y ∝ (x - x_s)^-α, so it converges to
    poles and algebraic branch points alike.
    """
    f = ode.Q(y, x)
    if f == 0:
        return x
    fy = ode.dQ_dy(y, x)
    fx = ode.dQ_dx(y, x)
    g = y / f
    dg = 1.0 - y * (fx + fy * f) / f**2
    if dg == 0:
        return x
    return complex(x - g / dg)


def _shoot(ode: OdeSpec, xa: complex, ya: complex, route, tol: float,
           blowup: float) -> tuple[complex, complex, bool]:
    path = route if isinstance(route, Path) else Path.polyline([xa, route], plane="x")
    try:
        traj = rk_integrate(ode, path, ya, tol, samples=0, blowup=blowup)
    except MathError as e:
        if e.kind == "BlowupDetected":
            return complex(e.details["x"]), complex(e.details["y"]), True
        raise
    return complex(traj.xs[-1]), complex(traj.ys[-1]), False


def candidate_routes(report: SingularityReport, avoid: Sequence[complex] = (),
                     detour: complex = 0j) -> list[tuple[str, Optional[Path]]]:
    """
    Lead-in paths tried before the march, in order. An explicit detour is
    the only route; otherwise: straight, then sideways offsets of width w on
    either side, then one loop (either sense) around every other predicted
    singularity that lies closer to x0 than half the way to the target.
    """
    x0, target = complex(report.x0), complex(report.x_sing)
    if detour:
        return [("detour", Path.polyline([x0, 0.5 * (x0 + target) + detour], plane="x"))]
    span = abs(target - x0)
    others = [complex(o) for o in avoid if abs(o - target) > 1e-9 * (1.0 + abs(target))]
    spacing = min((abs(o - target) for o in others), default=span)
    routes: list[tuple[str, Optional[Path]]] = [("straight", None)]
    if span == 0:
        return routes

    normal = -1j * (target - x0) / span
    w = 0.5 * min(spacing, span)
    for scale in (1.0, 0.5):
        for side in (1, -1):
            off = side * scale * w * normal
            routes.append((f"side {side * scale * w:+.3g}",
                           Path.polyline([x0, x0 + off, target + off], plane="x")))
    for o in sorted(others, key=lambda o: abs(o - x0)):
        gap = abs(x0 - o)
        if not 0 < gap < 0.5 * span:
            continue
        r = min(2.0 * gap, 0.5 * spacing)
        theta = float(np.angle(x0 - o))
        rim = o + r * np.exp(1j * theta)
        for sweep in (2 * math.pi, -2 * math.pi):
            sense = "ccw" if sweep > 0 else "cw"
            routes.append((f"loop {sense} around {o:.6g}",
                           Path((Segment(x0, rim), Arc(o, r, theta, sweep)), plane="x")))
    return routes


def _march(ode: OdeSpec, report: SingularityReport, lead_in: Optional[Path], rk_tol: float,
           blowup: float, max_legs: int) -> complex:
    x, y = report.x0, report.y0
    target = report.x_sing
    scale = abs(target - x) + 1.0
    hit = False
    if lead_in is not None:
        x, y, hit = _shoot(ode, x, y, lead_in, rk_tol, blowup)

    aim = target
    settled = False
    for _ in range(max_legs):
        if hit:
            break
        x, y, hit = _shoot(ode, x, y, x + 0.9 * (aim - x), rk_tol, blowup)
        aim = local_estimate(ode, x, y)
        if abs(aim - x) > 100.0 * scale:
            break
        if abs(aim - x) < 1e-13 * (1.0 + abs(x)):
            settled = True
            break
    if not (hit or settled):
        raise VerificationError(
            "NoBlowup",
            "RK march did not reach a singularity",
            {"x_sing": target, "last_x": x, "last_y": y},
        )
    return local_estimate(ode, x, y)


def verify_singularity(ode: OdeSpec, report: SingularityReport, rk_tol: float = 1e-12, *,
                       detour: complex = 0j, avoid: Sequence[complex] = (), blowup: float = BLOWUP,
                       max_legs: int = 80, confirm_digits: float = 4.0) -> SingularityReport:
    """
    March from (x0, y0) towards the singularity: each RK leg covers 90% of the
    way to the current aim, the first aim is the prediction and later ones
    the local estimate. Stops when |y| > blowup or the estimate settles.
    digits = -log10(|x_found - x_sing| / |x_sing|).

    Routes from candidate_routes are tried until one confirms; the best one
    is reported and named in `note`.
    """
    console = get_console()
    target = report.x_sing
    best: Optional[tuple[float, complex, str]] = None
    last_error: Optional[AsymError] = None
    for label, lead_in in candidate_routes(report, avoid, detour):
        try:
            x_found = _march(ode, report, lead_in, rk_tol, blowup, max_legs)
        except AsymError as e:
            console.print_debug(f"verify {list(report.branch_shift)} via {label}: {e.kind}")
            last_error = e
            continue
        delta = abs(x_found - target)
        digits = 16.0 if delta == 0 else -math.log10(delta / abs(target))
        console.print_debug(f"verify {list(report.branch_shift)} via {label}: "
                            f"found {x_found}, digits {digits:.2f}")
        if best is None or digits > best[0]:
            best = (digits, x_found, label)
        if digits >= confirm_digits:
            break
    if best is None:
        raise last_error

    digits, x_found, label = best
    status = "confirmed" if digits >= confirm_digits else "mismatch"
    return replace(report, status=status, verified=status == "confirmed", x_found=x_found,
                   digits=digits, note=label)


def verify_all(ode: OdeSpec, reports: Sequence[SingularityReport], max_workers: Optional[int] = None,
               **kwargs) -> list[SingularityReport]:
    """
    Verify independent predictions concurrently, each steering clear of the
    others; failures are recorded, not raised.
    """
    results: dict[int, SingularityReport] = {}
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        futures = {
            pool.submit(verify_singularity, ode, r,
                        avoid=tuple(o.x_sing for o in reports if o is not r), **kwargs): i
            for i, r in enumerate(reports)
        }
        for fut in as_completed(futures):
            i = futures[fut]
            try:
                results[i] = fut.result()
            except AsymError as e:
                get_console().print_warning(f"singularity {i}: {e.kind}: {e.message}")
                results[i] = replace(reports[i], status="failed", verified=False, note=e.kind)
    return [results[i] for i in range(len(reports))]
