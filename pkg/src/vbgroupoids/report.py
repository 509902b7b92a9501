"""Validation reports: violations are data, not exceptions.

Checkers (``validate_groupoid``, ``check_ruth``, ``check_vbgroupoid``, ...)
return a :class:`Report` listing every violated axiom together with a witness.
Construction preconditions that must hold call :meth:`Report.require`, which
raises :class:`InvalidStructureError` carrying the report.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class InvalidStructureError(ValueError):
    """A structural precondition failed; carries the offending report."""

    def __init__(self, context: str, report: "Report"):
        self.context = context
        self.report = report
        lines = [f"{context}: {len(report.violations)} violation(s)"]
        lines += [f"  - {v}" for v in report.violations[:8]]
        if len(report.violations) > 8:
            lines.append(f"  ... and {len(report.violations) - 8} more")
        super().__init__("\n".join(lines))


@dataclass(frozen=True)
class Violation:
    check: str
    witness: tuple
    detail: str = ""

    def __str__(self) -> str:
        w = ", ".join(repr(x) for x in self.witness)
        msg = f"{self.check} at ({w})"
        return f"{msg}: {self.detail}" if self.detail else msg


@dataclass
class Report:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, check: str, witness: tuple, detail: str = "") -> None:
        self.violations.append(Violation(check, witness, detail))

    def extend(self, other: "Report") -> None:
        self.violations.extend(other.violations)

    def require(self, context: str) -> None:
        if not self.ok:
            raise InvalidStructureError(context, self)

    def to_json(self) -> list[dict]:
        return [
            {"check": v.check, "witness": [repr(x) for x in v.witness], "detail": v.detail}
            for v in self.violations
        ]
