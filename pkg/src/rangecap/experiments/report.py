"""Structured experiment results."""

from __future__ import annotations

from dataclasses import dataclass, field

SCHEMA_VERSION = 1


@dataclass
class Check:
    name: str
    value: object
    threshold: str
    passed: bool

    def to_dict(self) -> dict:
        return {"value": self.value, "threshold": self.threshold, "passed": bool(self.passed)}


@dataclass
class ExperimentReport:
    """Per-experiment results.

    ``payload()`` is a pure function of the inputs (group, grid, seeds,
    estimator); wall-clock time lives in ``runtime`` and is written to the run
    manifest instead.
    """

    experiment: str
    group: dict
    grid: list
    seeds: list
    estimator: dict
    series: list = field(default_factory=list)
    fits: dict = field(default_factory=dict)
    normality: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)
    runtime: float = 0.0

    def add_check(self, name: str, value, threshold: str, passed: bool) -> Check:
        c = Check(name, value, threshold, bool(passed))
        self.checks[name] = c
        return c

    def add_row(self, n, seed, statistic: str, value) -> None:
        self.rows.append((n, seed, statistic, value))

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values())

    def payload(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "experiment": self.experiment,
            "group": self.group,
            "grid": list(self.grid),
            "seeds": list(self.seeds),
            "estimator": self.estimator,
            "series": self.series,
            "fits": self.fits,
            "normality": self.normality,
            "checks": {k: c.to_dict() for k, c in self.checks.items()},
            "diagnostics": self.diagnostics,
        }

    def csv_rows(self) -> list:
        return [("n", "seed", "statistic", "value")] + list(self.rows)
