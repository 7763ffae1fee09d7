"""Structured experiment reports: named estimates with standard errors and
checks with explicit tolerances, serializable to JSON and CSV."""

import json
import math
from dataclasses import dataclass, field

__all__ = ["Estimate", "Check", "ExperimentReport"]


@dataclass(frozen=True)
class Estimate:
    label: str
    value: float
    std_error: float

    def to_row(self):
        return [self.label, self.value, self.std_error]


@dataclass(frozen=True)
class Check:
    label: str
    value: float
    target: float
    tolerance: float

    @property
    def passed(self):
        if math.isinf(self.tolerance):
            return True
        return abs(self.value - self.target) <= self.tolerance

    def to_row(self):
        return [self.label, self.value, self.target, self.tolerance,
                "pass" if self.passed else "fail"]


@dataclass
class ExperimentReport:
    """Outcome of a seeded experiment: config echo, estimates, checks."""

    name: str
    config: dict = field(default_factory=dict)
    estimates: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    master_seed: int = 0
    replicate_count: int = 0
    # named tabular outputs: {table_name: {"columns": [...], "rows": [[...]]}}
    tables: dict = field(default_factory=dict)

    def add_table(self, name, columns, rows):
        self.tables[name] = {"columns": list(columns),
                             "rows": [list(r) for r in rows]}

    def add_estimate(self, label, value, std_error):
        self.estimates.append(Estimate(label, float(value), float(std_error)))

    def add_check(self, label, value, target, tolerance):
        self.checks.append(Check(label, float(value), float(target),
                                 float(tolerance)))

    @property
    def all_passed(self):
        return all(c.passed for c in self.checks)

    def to_dict(self):
        return {
            "name": self.name,
            "config": self.config,
            "master_seed": self.master_seed,
            "replicate_count": self.replicate_count,
            "estimates": [{"label": e.label, "value": e.value,
                           "std_error": e.std_error} for e in self.estimates],
            "checks": [{"label": c.label, "value": c.value, "target": c.target,
                        "tolerance": c.tolerance, "pass": c.passed}
                       for c in self.checks],
            "tables": self.tables,
            "all_passed": self.all_passed,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)
