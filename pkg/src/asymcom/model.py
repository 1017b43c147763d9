# model.py
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Iterable, Optional, Sequence

import numpy as np

from .algebra import ZERO, ComplexPoly, Contour, RootSet, poly_eval, poly_roots
from .errors import ConfigError, MathError

RDOMAIN = "RDomain"
SINGULAR = "Singular"

MAX_ORDER = 8


# ---------------------------------------------------------------------------
# ODE
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OdeSpec:
    """
    y' = sum_k P_k(y) / x^k with finitely many P_k, truncated at order n.
    """
    P: tuple[ComplexPoly, ...]
    n: int = 2

    def __post_init__(self) -> None:
        polys = tuple(p if isinstance(p, ComplexPoly) else ComplexPoly.of(p) for p in self.P)
        object.__setattr__(self, "P", polys)
        if not polys:
            raise ConfigError("InvalidConfig", "the ODE needs at least P_0", {})
        if not 1 <= self.n <= MAX_ORDER:
            raise ConfigError(
                "InvalidConfig",
                f"truncation order must lie in 1..{MAX_ORDER}",
                {"n": self.n},
            )

    @classmethod
    def from_coeffs(cls, coeffs: Sequence[Iterable[complex]], n: int = 2) -> "OdeSpec":
        return cls(tuple(ComplexPoly.of(c) for c in coeffs), n)

    def with_order(self, n: int) -> "OdeSpec":
        return replace(self, n=n)

    @property
    def K(self) -> int:
        return len(self.P) - 1

    @property
    def P0(self) -> ComplexPoly:
        return self.P[0]

    def poly(self, k: int) -> ComplexPoly:
        return self.P[k] if 0 <= k < len(self.P) else ZERO

    @cached_property
    def roots(self) -> RootSet:
        return poly_roots(self.P0)

    @cached_property
    def derivatives(self) -> tuple[ComplexPoly, ...]:
        return tuple(p.derivative() for p in self.P)

    @property
    def eps_root(self) -> float:
        return 0.05 * self.roots.min_separation

    def P_values(self, y) -> list:
        return [poly_eval(p, y) for p in self.P]

    def Q(self, y, x):
        """Right-hand side sum_k P_k(y) x^-k."""
        inv = 1.0 / x
        acc = 0 * y
        for p in reversed(self.P):
            acc = acc * inv + poly_eval(p, y)
        return acc

    def dQ_dy(self, y, x):
        inv = 1.0 / x
        acc = 0 * y
        for p in reversed(self.derivatives):
            acc = acc * inv + poly_eval(p, y)
        return acc

    def dQ_dx(self, y, x):
        return sum(-k * poly_eval(p, y) * x ** (-k - 1) for k, p in enumerate(self.P) if k > 0)


# ---------------------------------------------------------------------------
# Constants of motion
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FVector:
    y: complex
    values: tuple[complex, ...]
    derivatives: tuple[complex, ...] = ()

    @property
    def order(self) -> int:
        return len(self.values) - 1


@dataclass(frozen=True)
class BranchState:
    """Continuous arg of x along an x-path, plus the winding of y around each root."""
    x: complex
    arg: float
    y: Optional[complex] = None
    winding: tuple[float, ...] = ()

    @classmethod
    def start(cls, x: complex, y: Optional[complex] = None, roots: Optional[RootSet] = None) -> "BranchState":
        w = tuple(0.0 for _ in roots.roots) if roots is not None else ()
        return cls(complex(x), math.atan2(complex(x).imag, complex(x).real), y, w)

    @property
    def log_x(self) -> complex:
        return complex(math.log(abs(self.x)), self.arg)

    def advance(self, x_new: complex, y_new: Optional[complex] = None,
                roots: Optional[RootSet] = None) -> "BranchState":
        x_new = complex(x_new)
        if x_new == self.x and y_new is None:
            return self
        step = float(np.angle(x_new / self.x))
        if abs(step) >= math.pi - 1e-12:
            raise MathError(
                "BranchDiscontinuity",
                "arg x jumps by pi or more in one step",
                {"from": self.x, "to": x_new},
            )
        winding = self.winding
        if y_new is not None and self.y is not None and roots is not None and winding:
            winding = tuple(
                w + float(np.angle((y_new - p) / (self.y - p))) / (2 * math.pi)
                for w, p in zip(winding, roots.roots)
            )
        return BranchState(x_new, self.arg + step, y_new if y_new is not None else self.y, winding)


@dataclass(frozen=True)
class ConstantSeries:
    """
    A computed constant of motion

        RDomain:  C_n = -x + a log x + F_0(y) + sum_k F_k(y) / x^k
        Singular: C_n =  x           + F_0(y) + sum_k F_k(y) / x^k

    `base_F` holds F_0..F_n at `base_y` with all constants folded in.
    """
    kind: str
    ode: OdeSpec
    a: complex
    c: tuple[complex, ...]
    base_y: complex
    base_F: tuple[complex, ...]
    contour: Optional[Contour] = None
    anchors: tuple[complex, ...] = ()
    spine: tuple[FVector, ...] = ()
    eps_root: float = 0.0

    @property
    def n(self) -> int:
        return len(self.base_F) - 1

    @property
    def base(self) -> FVector:
        return FVector(self.base_y, self.base_F)

    def with_spine(self, points: Iterable[FVector]) -> "ConstantSeries":
        return replace(self, spine=self.spine + tuple(points))


@dataclass(frozen=True)
class SingularSeries(ConstantSeries):
    direction: complex = 1 + 0j
    q: int = 0
    y_max: float = 1e3
    decay: tuple[int, ...] = ()


# ---------------------------------------------------------------------------
# Trajectories and reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RegionTag:
    kind: str
    root: Optional[int] = None

    def __str__(self) -> str:
        return f"NearRoot({self.root})" if self.kind == "NearRoot" else self.kind


@dataclass(frozen=True)
class TrajectorySample:
    x: complex
    y: complex
    K_check: complex
    region: RegionTag


@dataclass(frozen=True)
class SingularityReport:
    x_sing: complex
    branch_shift: tuple[int, ...]
    order_used: int
    x0: complex
    y0: complex
    status: str = "predicted"
    verified: bool = False
    x_found: Optional[complex] = None
    digits: Optional[float] = None
    note: str = ""


@dataclass(frozen=True, eq=False)
class RkTrajectory:
    xs: np.ndarray
    ys: np.ndarray
    rtol: float
    atol: float
    nfev: int = 0

    def __len__(self) -> int:
        return len(self.xs)


@dataclass(frozen=True)
class RootExpansion:
    root: complex
    b: tuple[complex, ...]
    mu: complex
    nu: complex

    @property
    def order(self) -> int:
        return len(self.b)

    def value(self, x):
        acc = 0 * x
        for bk in reversed(self.b):
            acc = (acc + bk) / x
        return self.root + acc


@dataclass(frozen=True)
class TransseriesFit:
    C_trans: complex
    window: tuple[complex, complex]
    stability: float
    samples: int


@dataclass(frozen=True)
class HandoffRecord:
    root: int
    x_range: tuple[complex, complex]
    C_trans: complex
    residual: float
    bound: float
    side: str = "exit"

    @property
    def within_bound(self) -> bool:
        return self.residual <= self.bound


@dataclass(frozen=True)
class Equilibrium:
    index: int
    root: complex
    eigenvalue: complex
    stability: str


@dataclass(frozen=True, eq=False)
class PhaseField:
    t: float
    x0: complex
    points: np.ndarray
    vectors: np.ndarray
    equilibria: tuple[Equilibrium, ...] = ()
