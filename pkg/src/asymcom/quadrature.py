# quadrature.py
"""Transport of complex states along paths, and fixed-node contour quadrature."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import solve_ivp

from .algebra import Path
from .errors import MathError

Field = Callable[[complex, np.ndarray], np.ndarray]
Event = Callable[[complex, np.ndarray], float]


@dataclass(frozen=True, eq=False)
class Transport:
    points: np.ndarray
    states: np.ndarray
    nfev: int
    stopped_at: Optional[tuple[complex, np.ndarray]] = None

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def transport(
    field: Field,
    path: Path,
    state,
    *,
    rtol: float = 1e-10,
    atol=1e-12,
    samples: int = 0,
    event: Optional[Event] = None,
) -> Transport:
    """
    Integrate du/dz = field(z, u) along every piece of `path` with an
    adaptive DOP853 pair over the piece parameter s in [0, 1].

    With `samples` > 0 each piece also records that many interior points.
    A terminal `event` (real-valued, sign change) stops the integration
    and is reported through `stopped_at`.
    """
    u = np.asarray(state, dtype=complex).copy()
    points = [complex(path.start)]
    states = [u.copy()]
    nfev = 0
    t_eval = np.linspace(0.0, 1.0, samples + 2)[1:] if samples else None

    for piece in path.pieces:
        def rhs(s, v, piece=piece):
            return np.asarray(field(piece.point(s), v), dtype=complex) * piece.tangent(s)

        events = None
        if event is not None:
            def ev(s, v, piece=piece):
                return event(piece.point(s), v)
            ev.terminal = True
            events = [ev]

        sol = solve_ivp(rhs, (0.0, 1.0), u, method="DOP853", rtol=rtol, atol=atol,
                        t_eval=t_eval, events=events)
        nfev += sol.nfev
        if sol.status == -1:
            raise MathError(
                "StepFailure",
                "integration step size underflow",
                {"solver": sol.message, "z": complex(piece.point(sol.t[-1] if sol.t.size else 0.0)),
                 "state": sol.y[:, -1] if sol.y.size else u},
            )
        if t_eval is not None:
            for t, col in zip(sol.t, sol.y.T):
                points.append(complex(piece.point(t)))
                states.append(col.copy())
        elif sol.status == 0:
            points.append(complex(piece.end))
            states.append(sol.y[:, -1].copy())
        if sol.status == 1:
            s_hit = float(sol.t_events[0][0])
            u_hit = sol.y_events[0][0]
            points.append(complex(piece.point(s_hit)))
            states.append(u_hit.copy())
            return Transport(np.asarray(points), np.asarray(states), nfev,
                             (complex(piece.point(s_hit)), u_hit))
        u = sol.y[:, -1].copy()

    return Transport(np.asarray(points), np.asarray(states), nfev)


def gauss_integral(func: Callable[[np.ndarray], np.ndarray], path: Path, nodes: int = 64) -> complex:
    """Gauss-Legendre quadrature of func(z) dz along each piece."""
    t, w = leggauss(nodes)
    s = 0.5 * (t + 1.0)
    total = 0j
    for piece in path.pieces:
        z = np.asarray(piece.point(s), dtype=complex)
        dz = np.broadcast_to(np.asarray(piece.tangent(s), dtype=complex), z.shape)
        total += complex(0.5 * np.sum(w * func(z) * dz))
    return total


def checked_integral(func: Callable[[np.ndarray], np.ndarray], path: Path,
                     nodes: int = 64, tol: float = 1e-9) -> tuple[complex, float]:
    """Integral plus the disagreement with a doubled node count."""
    coarse = gauss_integral(func, path, nodes)
    fine = gauss_integral(func, path, 2 * nodes)
    return fine, abs(fine - coarse) / max(1.0, abs(fine))
