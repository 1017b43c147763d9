# algebra.py
"""Complex polynomials, root sets, residues and the geometric path types.

Paths are sequences of pieces (straight segments, circular arcs and
log-scaled rays). Every piece is parameterized over s in [0, 1] so the
integrators in `asymcom.quadrature` can treat them uniformly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .errors import MathError

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# Polynomials
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ComplexPoly:
    """Polynomial with complex coefficients in ascending degree."""
    coeffs: tuple[complex, ...]

    def __post_init__(self) -> None:
        cs = [complex(c) for c in self.coeffs] or [0j]
        while len(cs) > 1 and cs[-1] == 0:
            cs.pop()
        object.__setattr__(self, "coeffs", tuple(cs))

    @classmethod
    def of(cls, coeffs: Iterable[complex]) -> "ComplexPoly":
        return cls(tuple(coeffs))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return self.degree == 0 and self.coeffs[0] == 0

    @property
    def scale(self) -> float:
        return max(abs(c) for c in self.coeffs)

    def derivative(self) -> "ComplexPoly":
        if self.degree == 0:
            return ComplexPoly((0j,))
        return ComplexPoly(tuple(k * c for k, c in enumerate(self.coeffs) if k > 0))

    def __call__(self, y):
        return poly_eval(self, y)


ZERO = ComplexPoly((0j,))


def poly_eval(p: ComplexPoly, y):
    """Horner evaluation; works on scalars and numpy arrays."""
    acc = p.coeffs[-1] + 0 * y
    for c in reversed(p.coeffs[:-1]):
        acc = acc * y + c
    return acc


# ---------------------------------------------------------------------------
# Roots
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RootSet:
    roots: tuple[complex, ...]
    min_separation: float
    margins: tuple[float, ...] = ()

    def __len__(self) -> int:
        return len(self.roots)

    def distances(self, y: complex) -> np.ndarray:
        return np.abs(np.asarray(self.roots) - y)

    def nearest(self, y: complex) -> tuple[int, float]:
        d = self.distances(y)
        j = int(np.argmin(d))
        return j, float(d[j])


def _arg_key(z: complex) -> tuple[float, float]:
    a = math.atan2(z.imag, z.real)
    if a < -1e-12:
        a += TWO_PI
    elif a < 0:
        a = 0.0
    return (round(a, 12), abs(z))


def _clean(z: complex, size: float) -> complex:
    re, im = z.real, z.imag
    if abs(im) < 1e-14 * size:
        im = 0.0
    if abs(re) < 1e-14 * size:
        re = 0.0
    return complex(re, im)


def poly_roots(p: ComplexPoly, tol: float = 1e-14, max_iter: int = 500) -> RootSet:
    """
    Find all roots of p by Aberth iteration, polish with Newton and verify
    that they are simple. Roots are ordered by argument in [0, 2π).
    """
    deg = p.degree
    if deg < 1:
        raise MathError(
            "DegreeTooLow",
            "P_0 must have degree >= 1",
            {"degree": deg},
        )
    a = np.asarray(p.coeffs, dtype=complex)
    monic = a / a[-1]
    dp = p.derivative()

    if deg == 1:
        z = np.array([-monic[0]])
        converged = True
    else:
        # Cauchy bound for the initial circle
        radius = 1.0 + float(np.max(np.abs(monic[:-1])))
        k = np.arange(deg)
        z = radius * np.exp(1j * (TWO_PI * k / deg + 0.4))
        converged = False
        for _ in range(max_iter):
            pv = poly_eval(p, z)
            dv = poly_eval(dp, z)
            diff = z[:, None] - z[None, :]
            np.fill_diagonal(diff, 1.0)
            inv = 1.0 / diff
            np.fill_diagonal(inv, 0.0)
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = pv / dv
                w = ratio / (1.0 - ratio * inv.sum(axis=1))
            w = np.where(np.isfinite(w), w, 0.0)
            z = z - w
            if np.all(np.abs(w) <= tol * (1.0 + np.abs(z))):
                converged = True
                break

    # Newton polish
    for _ in range(3):
        dv = poly_eval(dp, z)
        ok = np.abs(dv) > 0
        z = np.where(ok, z - poly_eval(p, z) / np.where(ok, dv, 1.0), z)

    size = 1.0 + float(np.max(np.abs(z)))
    scale = p.scale
    margins = np.abs(poly_eval(dp, z))
    for r, m in zip(z, margins):
        if m < 1e-8 * scale * (1.0 + abs(r)) ** (deg - 1):
            raise MathError(
                "MultipleRoot",
                "P_0 has a multiple root",
                {"root": complex(r), "|P_0'|": float(m)},
            )
    if deg > 1:
        gaps = np.abs(z[:, None] - z[None, :])
        np.fill_diagonal(gaps, np.inf)
        if gaps.min() < 1e-6 * size:
            raise MathError(
                "MultipleRoot",
                "two roots of P_0 coincide",
                {"separation": float(gaps.min())},
            )
    if not converged:
        raise MathError("NoConvergence", "root iteration did not converge", {"iterations": max_iter})

    roots = sorted((_clean(complex(r), size) for r in z), key=_arg_key)
    if len(roots) > 1:
        arr = np.asarray(roots)
        gaps = np.abs(arr[:, None] - arr[None, :])
        np.fill_diagonal(gaps, np.inf)
        min_sep = float(gaps.min())
    else:
        # single root: unit separation by convention
        min_sep = 1.0
    margins = tuple(float(abs(poly_eval(dp, r))) for r in roots)
    return RootSet(tuple(roots), min_sep, margins)


def residue(num: ComplexPoly, den_root: complex, den: ComplexPoly, pole_order: int = 1) -> complex:
    """Residue of num/den (order 1) or num/den² (order 2) at a simple root of den."""
    d1 = poly_eval(den.derivative(), den_root)
    if abs(d1) < 1e-12 * den.scale:
        raise MathError("DegeneratePole", "den'(p) vanishes", {"root": den_root, "den'": d1})
    if pole_order == 1:
        return complex(poly_eval(num, den_root) / d1)
    if pole_order == 2:
        d2 = poly_eval(den.derivative().derivative(), den_root)
        n0 = poly_eval(num, den_root)
        n1 = poly_eval(num.derivative(), den_root)
        return complex(n1 / d1**2 - n0 * d2 / d1**3)
    raise MathError("DegeneratePole", "pole_order must be 1 or 2", {"pole_order": pole_order})


# ---------------------------------------------------------------------------
# Path pieces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Segment:
    start: complex
    end: complex

    def point(self, s):
        return self.start + s * (self.end - self.start)

    def tangent(self, s):
        return self.end - self.start

    @property
    def length(self) -> float:
        return abs(self.end - self.start)

    def reversed(self) -> "Segment":
        return Segment(self.end, self.start)

    def project(self, p: complex) -> tuple[float, float]:
        """(t, distance) of the closest point of the infinite line to p."""
        d = self.end - self.start
        t = ((p - self.start) * d.conjugate()).real / abs(d) ** 2
        return t, abs(self.start + t * d - p)

    def distance_to(self, p: complex) -> float:
        t, _ = self.project(p)
        t = min(1.0, max(0.0, t))
        return abs(self.point(t) - p)


@dataclass(frozen=True)
class Arc:
    center: complex
    radius: float
    theta0: float
    sweep: float

    def point(self, s):
        return self.center + self.radius * np.exp(1j * (self.theta0 + s * self.sweep))

    def tangent(self, s):
        return 1j * self.sweep * self.radius * np.exp(1j * (self.theta0 + s * self.sweep))

    @property
    def start(self) -> complex:
        return complex(self.point(0.0))

    @property
    def end(self) -> complex:
        return complex(self.point(1.0))

    @property
    def length(self) -> float:
        return abs(self.sweep) * self.radius

    def reversed(self) -> "Arc":
        return Arc(self.center, self.radius, self.theta0 + self.sweep, -self.sweep)

    def distance_to(self, p: complex) -> float:
        s = np.linspace(0.0, 1.0, 257)
        return float(np.min(np.abs(self.point(s) - p)))


@dataclass(frozen=True)
class Ray:
    """Straight segment on a ray through the origin, traversed log-uniformly."""
    start: complex
    end: complex

    def point(self, s):
        return self.start * np.exp(s * np.log(self.end / self.start))

    def tangent(self, s):
        return self.point(s) * np.log(self.end / self.start)

    @property
    def length(self) -> float:
        return abs(self.end - self.start)

    def reversed(self) -> "Ray":
        return Ray(self.end, self.start)

    def distance_to(self, p: complex) -> float:
        return Segment(self.start, self.end).distance_to(p)


Piece = Union[Segment, Arc, Ray]


@dataclass(frozen=True)
class Path:
    pieces: tuple[Piece, ...]
    plane: str = "y"

    def __post_init__(self) -> None:
        if not self.pieces:
            raise MathError("DegeneratePath", "a path needs at least one piece", {})
        if self.plane not in ("x", "y"):
            raise MathError("DegeneratePath", f"unknown plane {self.plane!r}", {})

    @classmethod
    def polyline(cls, nodes: Sequence[complex], plane: str = "y") -> "Path":
        pts = [complex(z) for z in nodes]
        if len(pts) < 2:
            raise MathError("DegeneratePath", "a polyline needs two nodes", {"nodes": len(pts)})
        for a, b in zip(pts, pts[1:]):
            if a == b:
                raise MathError("DegeneratePath", "consecutive nodes coincide", {"node": a})
        return cls(tuple(Segment(a, b) for a, b in zip(pts, pts[1:])), plane)

    @property
    def start(self) -> complex:
        return complex(self.pieces[0].start)

    @property
    def end(self) -> complex:
        return complex(self.pieces[-1].end)

    @property
    def nodes(self) -> list[complex]:
        return [complex(p.start) for p in self.pieces] + [self.end]

    @property
    def length(self) -> float:
        return sum(p.length for p in self.pieces)

    def then(self, other: "Path") -> "Path":
        return Path(self.pieces + other.pieces, self.plane)

    def reversed(self) -> "Path":
        return Path(tuple(p.reversed() for p in reversed(self.pieces)), self.plane)

    def sample(self, per_piece: int = 64) -> np.ndarray:
        s = np.linspace(0.0, 1.0, per_piece + 1)
        return np.concatenate([np.atleast_1d(p.point(s)) for p in self.pieces])

    def distance_to(self, p: complex) -> float:
        return min(piece.distance_to(p) for piece in self.pieces)


# ---------------------------------------------------------------------------
# Deformation around roots
# ---------------------------------------------------------------------------

def _cw_sweep(theta1: float, theta2: float) -> float:
    return -((theta1 - theta2) % TWO_PI)


def _ccw_sweep(theta1: float, theta2: float) -> float:
    return (theta2 - theta1) % TWO_PI


def deform_path(
    path: Path,
    roots: RootSet,
    eps_root: float,
    sides: Optional[dict[int, str]] = None,
) -> Path:
    """
    Replace the parts of straight segments that come closer than eps_root to
    a root by circular arcs of radius eps_root. By default the arc passes on
    the left of the travel direction; `sides` overrides that per root index
    ("left" or "right").
    """
    sides = sides or {}
    for end in (path.start, path.end):
        j, d = roots.nearest(end)
        if d < eps_root:
            raise MathError(
                "EndpointTooClose",
                "path endpoint lies within eps_root of a root",
                {"endpoint": end, "root": roots.roots[j], "distance": d, "eps_root": eps_root},
            )

    out: list[Piece] = []
    for piece in path.pieces:
        if isinstance(piece, Arc):
            out.append(piece)
            continue
        seg = Segment(piece.start, piece.end)
        hits = []
        for j, p in enumerate(roots.roots):
            t, h = seg.project(p)
            if h < eps_root and seg.distance_to(p) < eps_root:
                half = math.sqrt(eps_root**2 - h**2) / seg.length
                if t - half <= 0.0 or t + half >= 1.0:
                    raise MathError(
                        "EndpointTooClose",
                        "segment node lies within eps_root of a root",
                        {"root": p, "segment": (seg.start, seg.end)},
                    )
                hits.append((t - half, t + half, j, p))
        if not hits:
            out.append(piece)
            continue
        hits.sort()
        cursor = seg.start
        for t1, t2, j, p in hits:
            entry, exit_ = seg.point(t1), seg.point(t2)
            if entry != cursor:
                out.append(Segment(cursor, entry))
            th1 = math.atan2((entry - p).imag, (entry - p).real)
            th2 = math.atan2((exit_ - p).imag, (exit_ - p).real)
            side = sides.get(j, "left")
            sweep = _ccw_sweep(th1, th2) if side == "right" else _cw_sweep(th1, th2)
            out.append(Arc(p, eps_root, th1, sweep))
            cursor = exit_
        if cursor != seg.end:
            out.append(Segment(cursor, seg.end))
    return Path(tuple(out), path.plane)


def winding_number(path: Path, point: complex, per_piece: int = 256) -> float:
    """Total change of arg(z - point) along the path, in turns."""
    total = 0.0
    for piece in path.pieces:
        if isinstance(piece, (Segment, Ray)):
            total += float(np.angle((piece.end - point) / (piece.start - point)))
        else:
            z = piece.point(np.linspace(0.0, 1.0, per_piece + 1)) - point
            total += float(np.sum(np.angle(z[1:] / z[:-1])))
    return total / TWO_PI


# ---------------------------------------------------------------------------
# Contours (loops of type alpha)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Contour:
    winding: tuple[int, ...]
    radii: tuple[float, ...] = ()
    orientation: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "winding", tuple(int(w) for w in self.winding))
        object.__setattr__(self, "radii", tuple(float(r) for r in self.radii))
        if not any(self.winding):
            raise MathError("InvalidContour", "winding vector is all zero", {"winding": self.winding})
        if self.orientation not in (1, -1):
            raise MathError("InvalidContour", "orientation must be +1 or -1", {"orientation": self.orientation})
        if self.radii and len(self.radii) != len(self.winding):
            raise MathError("InvalidContour", "one radius per root", {"radii": self.radii})

    @classmethod
    def around(cls, index: int, nroots: int, winding: int = 1, orientation: int = 1) -> "Contour":
        w = [0] * nroots
        w[index] = winding
        return cls(tuple(w), (), orientation)

    def resolved_radii(self, roots: RootSet) -> tuple[float, ...]:
        if not self.radii:
            return tuple(roots.min_separation / 3.0 for _ in roots.roots)
        for r in self.radii:
            if not 0 < r < roots.min_separation / 2.0:
                raise MathError(
                    "InvalidContour",
                    "contour radius must lie in (0, min_separation/2)",
                    {"radius": r, "min_separation": roots.min_separation},
                )
        return self.radii

    def reversed(self) -> "Contour":
        return Contour(self.winding, self.radii, -self.orientation)


def loop_path(base: complex, center: complex, radius: float, turns: float, eps_root: float,
              roots: RootSet) -> Path:
    """base -> circle around center -> `turns` full turns -> back to base."""
    d = base - center
    if abs(d) == 0:
        raise MathError("NearRoot", "loop base coincides with a root", {"base": base})
    entry = center + radius * d / abs(d)
    theta = math.atan2(d.imag, d.real)
    arc = Path((Arc(center, radius, theta, TWO_PI * turns),))
    if abs(entry - base) < 1e-15 * (1.0 + abs(base)):
        return arc
    leg = Path.polyline([base, entry])
    others = RootSet(
        tuple(p for p in roots.roots if p != center),
        roots.min_separation,
    )
    if others.roots:
        leg = deform_path(leg, others, eps_root)
    return leg.then(arc).then(leg.reversed())


def contour_path(contour: Contour, roots: RootSet, base: complex, eps_root: float) -> Path:
    """Concatenate the loops of a contour into one closed y-path based at `base`."""
    if len(contour.winding) != len(roots.roots):
        raise MathError(
            "InvalidContour",
            "winding vector length differs from the number of roots",
            {"winding": contour.winding, "roots": len(roots.roots)},
        )
    radii = contour.resolved_radii(roots)
    path: Optional[Path] = None
    for j, w in enumerate(contour.winding):
        if w == 0:
            continue
        loop = loop_path(base, roots.roots[j], radii[j], w * contour.orientation, eps_root, roots)
        path = loop if path is None else path.then(loop)
    assert path is not None
    return path
