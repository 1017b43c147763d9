# inversion.py
"""Trajectories from constants of motion: solve C_n(y, x) = K for y."""
from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .algebra import Path, RootSet, Segment
from .comotion import F_at, combine, eval_C, integrate_F
from .errors import MathError
from .model import BranchState, ConstantSeries, FVector, TrajectorySample
from .oracle import EPS_NEAR, OVERLAP, R0, detect_region
from .ui.console import get_console

NEWTON_TOL = 1e-10


# ---------------------------------------------------------------------------
# Newton
# ---------------------------------------------------------------------------

def _clear(roots: RootSet, ya: complex, yb: complex) -> bool:
    """The straight step ya -> yb keeps at least half the endpoint clearance from every root."""
    seg = Segment(ya, yb)
    for p in roots.roots:
        if seg.distance_to(p) < 0.5 * min(abs(ya - p), abs(yb - p)):
            return False
    return True


def _dG(series: ConstantSeries, x: complex, F: FVector) -> complex:
    acc = 0j
    for d in reversed(F.derivatives[:series.n + 1]):
        acc = acc / x + d
    return acc


def _step(series: ConstantSeries, F: FVector, y_new: complex) -> FVector:
    return integrate_F(series.ode, series, Path.polyline([F.y, y_new]), F)[-1]


def newton_solve(series: ConstantSeries, K: complex, x: complex, log_x: complex, F: FVector, *,
                 tol: float = NEWTON_TOL, max_iter: int = 50, max_halvings: int = 8) -> FVector:
    """
    Damped Newton on G(y) = C_n(y, x) - K, continuing F step by step from
    the seed so the result stays on the seed's sheet. G'(y) = sum F'_k x^-k.
    """
    roots = series.ode.roots
    G = combine(series, x, log_x, F.values) - K
    for _ in range(max_iter):
        if abs(G) <= tol:
            return F
        dG = _dG(series, x, F)
        if dG == 0:
            break
        step = -G / dG
        lam = 1.0
        evaluated = False
        accepted = None
        for _halving in range(max_halvings + 1):
            y_new = F.y + lam * step
            if y_new != F.y and _clear(roots, F.y, y_new):
                evaluated = True
                F_new = _step(series, F, y_new)
                G_new = combine(series, x, log_x, F_new.values) - K
                if abs(G_new) < abs(G):
                    accepted = (F_new, G_new)
                    break
            lam *= 0.5
        if accepted is None:
            if not evaluated:
                raise MathError(
                    "JumpedBranch",
                    "every Newton step would pass too close to a root",
                    {"x": x, "y": F.y, "step": step},
                )
            break
        F, G = accepted
    raise MathError(
        "NewtonDiverged",
        f"|G| = {abs(G):.3e} after Newton iterations",
        {"x": x, "y": F.y, "K": K, "max_iter": max_iter},
    )


def newton_invert(series: ConstantSeries, K: complex, x: complex, y_guess: complex, *,
                  branch: Optional[BranchState] = None, start: Optional[FVector] = None,
                  y_history: Optional[Sequence[complex]] = None, tol: float = NEWTON_TOL,
                  max_iter: int = 50) -> complex:
    """y with C_n(y, x) = K, on the sheet reached through y_history (or from `start`)."""
    x = complex(x)
    branch = BranchState.start(x) if branch is None else branch.advance(x)
    F = F_at(series, y_guess, y_history, start)
    return newton_solve(series, complex(K), x, branch.log_x, F, tol=tol, max_iter=max_iter).y


# ---------------------------------------------------------------------------
# Continuation
# ---------------------------------------------------------------------------

def _refine(nodes: Sequence[complex], h_max: float) -> list[complex]:
    out = [complex(nodes[0])]
    for a, b in zip(nodes, nodes[1:]):
        m = max(1, int(np.ceil(abs(b - a) / h_max)))
        out.extend(complex(a + (b - a) * (i / m)) for i in range(1, m + 1))
    return out


def continue_trajectory(series: ConstantSeries, K: complex, x_path: Path, y_start: complex, *,
                        start: Optional[FVector] = None, y_history: Optional[Sequence[complex]] = None,
                        h_max: float = 0.5, max_subdiv: int = 12, tol: float = NEWTON_TOL,
                        eps_near: float = EPS_NEAR, overlap: float = OVERLAP,
                        r0: float = R0) -> list[TrajectorySample]:
    """
    March along the nodes of x_path (refined to spacing <= h_max), seeding each
    Newton solve with the previous point. A step is accepted when
    |Δy| <= 0.2 * distance to the nearest root; otherwise it is halved.
    """
    console = get_console()
    ode = series.ode
    roots = ode.roots
    K = complex(K)
    nodes = _refine(x_path.nodes, h_max)

    branch = BranchState.start(nodes[0], complex(y_start), roots)
    F = F_at(series, y_start, y_history, start)
    F = newton_solve(series, K, nodes[0], branch.log_x, F, tol=tol)

    def sample(br: BranchState, Fv: FVector) -> TrajectorySample:
        K_check = combine(series, br.x, br.log_x, Fv.values)
        return TrajectorySample(br.x, Fv.y, K_check, detect_region(ode, br.x, Fv.y, eps_near, overlap, r0))

    out = [sample(branch, F)]
    for target in nodes[1:]:
        pending = [(target, 0)]
        while pending:
            xb, depth = pending[-1]
            try:
                br_b = branch.advance(xb, None, roots)
                F_b = newton_solve(series, K, xb, br_b.log_x, F, tol=tol)
                if abs(F_b.y - F.y) > 0.2 * roots.nearest(F.y)[1]:
                    raise MathError("StepTooLarge", "|Δy| exceeds the clearance budget", {})
            except MathError as e:
                if e.kind not in ("StepTooLarge", "NewtonDiverged", "JumpedBranch"):
                    raise
                if depth >= max_subdiv:
                    raise MathError(
                        "StepTooLarge",
                        "continuation step could not be subdivided further",
                        {"x_from": branch.x, "x_to": xb, "cause": e.kind},
                    ) from e
                pending.append((0.5 * (branch.x + xb), depth + 1))
                continue
            pending.pop()
            branch = branch.advance(xb, F_b.y, roots)
            F = F_b
        out.append(sample(branch, F))
    console.print_debug(f"continuation: {len(out)} samples")
    return out


def constant_from_ic(series: ConstantSeries, x0: complex, y0: complex,
                     y_history: Optional[Sequence[complex]] = None) -> complex:
    """K = C_n(y0, x0) on a fresh branch of log x."""
    return eval_C(series, complex(x0), None, complex(y0), y_history)


def handover_constant(series: ConstantSeries, xs: Sequence[complex], ys: Sequence[complex],
                      i0: int) -> tuple[complex, FVector]:
    """
    K = C_n at the reference sample i0, with F carried through the earlier
    samples; also returns that F for seeding the continuation.
    """
    start = F_at(series, ys[i0], ys[:i0])
    return eval_C(series, complex(xs[i0]), None, complex(ys[i0]), F=start), start
