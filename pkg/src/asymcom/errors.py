# errors.py
from __future__ import annotations

from dataclasses import dataclass, field
from typing import ClassVar


# ---------------------------------------------------------------------------
# Structured errors
# ---------------------------------------------------------------------------

@dataclass
class AsymError(Exception):
    """
    Structured error with enough context for clean CLI output and debugging.

    `kind` is the stable error name (e.g. "NearRoot"); `details` holds the
    numbers a caller may need to recover or report.
    """
    kind: str
    message: str
    details: dict = field(default_factory=dict)

    exit_code: ClassVar[int] = 1
    category: ClassVar[str] = "error"

    def __str__(self) -> str:
        lines = [f"{self.kind}: {self.message}"]
        for k, v in self.details.items():
            lines.append(f"  {k}: {v}")
        return "\n".join(lines)


@dataclass
class ConfigError(AsymError):
    exit_code: ClassVar[int] = 2
    category: ClassVar[str] = "config"


@dataclass
class MathError(AsymError):
    exit_code: ClassVar[int] = 3
    category: ClassVar[str] = "math"


@dataclass
class VerificationError(AsymError):
    exit_code: ClassVar[int] = 4
    category: ClassVar[str] = "verification"


# ---------------------------------------------------------------------------
# Hints (used in CLI error messages)
# ---------------------------------------------------------------------------

KIND_HINTS = {
    "MultipleRoot":        "P_0 must have simple roots; perturb the coefficients.",
    "DegreeTooLow":        "P_0 needs degree >= 1 (>= 2 for singular constants).",
    "ZeroDenominator":     "The contour integral of 1/P_0 vanishes; wind around a single root.",
    "NearRoot":            "Keep y paths away from the roots of P_0 (see eps_root).",
    "EndpointTooClose":    "Move the path endpoints away from the roots of P_0.",
    "PathThroughRoot":     "y0 is too close to a root of P_0 for a singular constant.",
    "NewtonDiverged":      "Seed Newton closer to the solution or increase |x|.",
    "JumpedBranch":        "Shorten the x-steps so continuation keeps its branch.",
    "StepTooLarge":        "Add intermediate nodes to the x-path.",
    "NoBlowup":            "Try another branch shift or a detour for the RK shoot.",
    "ConstantMismatch":    "The quoted K disagrees with the constant of the initial data; drop K or fix it.",
    "HandoffMismatch":     "Tighten rtol or move the x-path further out before it nears a root.",
    "InvalidConfig":       "Check the job file against configs/*.json.",
}
