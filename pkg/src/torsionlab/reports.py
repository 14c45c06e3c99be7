"""Verification report container shared by every suite."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any


@dataclass
class VerificationReport:
    """Named residuals checked against a tolerance.

    ``tolerances`` overrides the default ``tolerance`` for individual labels.
    ``details`` carries auxiliary numbers (fitted slopes, negative-control
    values, mode counts) that are reported but not gated.
    """

    suite: str
    residuals: dict[str, float]
    tolerance: float
    tolerances: dict[str, float] = field(default_factory=dict)
    details: dict[str, Any] = field(default_factory=dict)

    def limit(self, label: str) -> float:
        return self.tolerances.get(label, self.tolerance)

    @property
    def failures(self) -> list[str]:
        return [k for k, v in self.residuals.items()
                if not (math.isfinite(v) and v <= self.limit(k))]

    @property
    def passed(self) -> bool:
        return not self.failures

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)

    def to_dict(self) -> dict[str, Any]:
        return {
            "suite": self.suite,
            "passed": self.passed,
            "tolerance": self.tolerance,
            "tolerances": dict(sorted(self.tolerances.items())),
            "residuals": dict(sorted(self.residuals.items())),
            "details": self.details,
        }


def merge_reports(suite: str, reports: list[VerificationReport],
                  tolerance: float | None = None) -> VerificationReport:
    """Combine reports, keeping the worst residual per label."""
    residuals: dict[str, float] = {}
    tolerances: dict[str, float] = {}
    for rep in reports:
        for k, v in rep.residuals.items():
            residuals[k] = max(residuals.get(k, 0.0), v)
            tolerances[k] = rep.limit(k)
    tol = tolerance if tolerance is not None else max(
        (r.tolerance for r in reports), default=0.0)
    tolerances = {k: v for k, v in tolerances.items() if v != tol}
    return VerificationReport(suite, residuals, tol, tolerances,
                              {"merged": len(reports)})
