"""Named inequality/identity check entries and their aggregation."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict


@dataclass
class ReportEntry:
    """One measured check: an identity, an inequality, or a report-only value.

    Pass rule: identities need |lhs - rhs| <= tolerance, inequalities need
    lhs <= rhs + tolerance.  Report-only entries are never gated.
    """

    name: str
    lhs: float
    rhs: float
    tolerance: float
    kind: str = "inequality"  # "identity" | "inequality" | "report"
    context: str = ""

    @property
    def passed(self) -> bool:
        if self.kind == "identity":
            return abs(self.lhs - self.rhs) <= self.tolerance
        if self.kind == "inequality":
            return self.lhs <= self.rhs + self.tolerance
        return True


@dataclass
class EstimateReport:
    entries: list[ReportEntry] = field(default_factory=list)
    empirical_constants: dict[str, float] = field(default_factory=dict)

    def add(self, entry: ReportEntry | list[ReportEntry]) -> None:
        if isinstance(entry, list):
            self.entries.extend(entry)
        else:
            self.entries.append(entry)

    def constant(self, name: str, value: float) -> None:
        self.empirical_constants[name] = float(value)

    def sorted_entries(self) -> list[ReportEntry]:
        return sorted(self.entries, key=lambda e: e.name)

    def all_passed(self) -> bool:
        return all(e.passed for e in self.sorted_entries() if e.kind != "report")

    def to_json(self) -> str:
        payload = {
            "entries": [dict(asdict(e), passed=e.passed) for e in self.sorted_entries()],
            "empirical_constants": self.empirical_constants,
            "all_passed": self.all_passed(),
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    def to_table(self) -> str:
        rows = [("name", "kind", "lhs", "rhs", "tol", "pass")]
        for e in self.sorted_entries():
            rows.append((e.name, e.kind, f"{e.lhs:.6e}", f"{e.rhs:.6e}",
                         f"{e.tolerance:.1e}", "ok" if e.passed else "FAIL"))
        widths = [max(len(r[i]) for r in rows) for i in range(6)]
        lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows]
        if self.empirical_constants:
            lines.append("")
            for k in sorted(self.empirical_constants):
                lines.append(f"{k} = {self.empirical_constants[k]:.10g}")
        return "\n".join(lines)
