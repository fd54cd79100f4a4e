"""Experiment reports whose verdicts can be recomputed from the tables alone."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .errors import ConfigError


def _plain(obj):
    """JSON-ready copy with numpy scalars and tuples normalized."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def canonical_json(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def digest(config: dict) -> str:
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()


def render(v) -> str:
    """Fixed text form: 17 significant digits for reals, lowercase booleans."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(v)


@dataclass
class Table:
    columns: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)

    def add(self, *values):
        if len(values) != len(self.columns):
            raise ValueError(f"row has {len(values)} values for {len(self.columns)} columns")
        self.rows.append(tuple(_plain(v) for v in values))

    def column(self, name: str, select: dict | None = None) -> list:
        j = self.columns.index(name)
        return [r[j] for r in self.select(select)]

    def select(self, select: dict | None) -> list[tuple]:
        if not select:
            return list(self.rows)
        idx = {k: self.columns.index(k) for k in select}
        return [r for r in self.rows if all(r[idx[k]] == v for k, v in select.items())]

    def to_dict(self) -> dict:
        return {"columns": list(self.columns), "rows": [list(r) for r in self.rows]}

    @classmethod
    def from_dict(cls, d: dict) -> "Table":
        return cls(tuple(d["columns"]), [tuple(r) for r in d["rows"]])


# ---------------------------------------------------------------------------
# verdict rules: each maps (list of column value lists, tolerance) -> bool

RULES: dict[str, Callable[[list[list], Any], bool]] = {}


def _rule(name):
    def deco(fn):
        RULES[name] = fn
        return fn
    return deco


def _num(v) -> float:
    if v == "inf":
        return math.inf
    if v == "-inf":
        return -math.inf
    return float(v)


@_rule("max_at_most")
def _max_at_most(cols, tol) -> bool:
    return all(_num(v) <= _num(tol) for c in cols for v in c)


@_rule("all_zero")
def _all_zero(cols, tol=None) -> bool:
    return all(_num(v) == 0.0 for c in cols for v in c)


@_rule("all_true")
def _all_true(cols, tol=None) -> bool:
    return all(v is True for c in cols for v in c)


@_rule("in_range")
def _in_range(cols, tol) -> bool:
    lo, hi = (_num(t) for t in tol)
    return all(lo <= _num(v) <= hi for c in cols for v in c)


@_rule("decreasing")
def _decreasing(cols, tol=None) -> bool:
    return all(all(_num(b) < _num(a) for a, b in zip(c, c[1:])) for c in cols)


@_rule("eventually_decreasing")
def _eventually_decreasing(cols, tol=None) -> bool:
    """Last three nonincreasing, last entry the minimum, and below tol if given."""
    for c in cols:
        v = [_num(x) for x in c]
        if len(v) < 3:
            return False
        a, b, d = v[-3:]
        if not (a >= b >= d and d == min(v)):
            return False
        if tol is not None and not d < _num(tol):
            return False
    return True


@_rule("last_three_within")
def _last_three_within(cols, tol) -> bool:
    return all(len(c) >= 3 and all(_num(v) <= _num(tol) for v in c[-3:]) for c in cols)


@_rule("plateau")
def _plateau(cols, tol) -> bool:
    """Last three within a relative spread tol of their largest magnitude."""
    for c in cols:
        v = [_num(x) for x in c[-3:]]
        if len(v) < 3 or not all(math.isfinite(x) for x in v):
            return False
        top = max(abs(x) for x in v)
        if max(v) - min(v) > _num(tol) * top:
            return False
    return True


@_rule("le_column")
def _le_column(cols, tol=None) -> bool:
    """First column entrywise at most the second."""
    a, b = cols
    return all(_num(x) <= _num(y) for x, y in zip(a, b))


@dataclass(frozen=True)
class Check:
    name: str
    rule: str
    table: str
    columns: tuple[str, ...]
    tolerance: str | None = None     # key into the report's tolerances
    select: tuple[tuple[str, Any], ...] = ()

    def evaluate(self, tables: dict[str, Table], tolerances: dict) -> bool:
        if self.rule not in RULES:
            raise ConfigError(f"unknown rule {self.rule!r}")
        t = tables[self.table]
        sel = dict(self.select)
        cols = [t.column(c, sel) for c in self.columns]
        if not cols or not cols[0]:
            return False
        tol = tolerances[self.tolerance] if self.tolerance is not None else None
        return bool(RULES[self.rule](cols, tol))

    def to_dict(self) -> dict:
        return {"name": self.name, "rule": self.rule, "table": self.table,
                "columns": list(self.columns), "tolerance": self.tolerance,
                "select": [[k, v] for k, v in self.select]}

    @classmethod
    def from_dict(cls, d: dict) -> "Check":
        return cls(d["name"], d["rule"], d["table"], tuple(d["columns"]), d.get("tolerance"),
                   tuple((k, v) for k, v in d.get("select", [])))


@dataclass
class ExperimentReport:
    experiment: str
    config: dict
    tables: dict[str, Table]
    tolerances: dict
    checks: list[Check]
    verdicts: dict[str, bool] = field(default_factory=dict)
    wall_clock: float = 0.0
    notes: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.config = _plain(self.config)
        self.tolerances = _plain(self.tolerances)
        if not self.verdicts:
            self.verdicts = self.recheck()

    @property
    def config_digest(self) -> str:
        return digest({"experiment": self.experiment, "config": self.config})

    @property
    def passed(self) -> bool:
        return all(self.verdicts.values())

    def recheck(self) -> dict[str, bool]:
        return {c.name: c.evaluate(self.tables, self.tolerances) for c in self.checks}

    def failures(self) -> list[str]:
        return [k for k, v in self.verdicts.items() if not v]

    # -- serialization -------------------------------------------------------
    def to_dict(self, timing: bool = False) -> dict:
        d = {
            "experiment": self.experiment,
            "config_digest": self.config_digest,
            "config": self.config,
            "tables": {k: t.to_dict() for k, t in self.tables.items()},
            "tolerances": self.tolerances,
            "checks": [c.to_dict() for c in self.checks],
            "verdicts": self.verdicts,
            "passed": self.passed,
            "notes": list(self.notes),
        }
        if timing:
            d["wall_clock"] = self.wall_clock
        return d

    def to_json(self, timing: bool = False) -> str:
        return json.dumps(_plain(self.to_dict(timing)), sort_keys=True, indent=2,
                          ensure_ascii=False) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentReport":
        tables = {k: Table.from_dict(v) for k, v in d["tables"].items()}
        checks = [Check.from_dict(c) for c in d["checks"]]
        return cls(d["experiment"], d["config"], tables, d["tolerances"], checks,
                   dict(d["verdicts"]), d.get("wall_clock", 0.0), list(d.get("notes", [])))

    def table_csv(self, name: str) -> str:
        t = self.tables[name]
        buf = io.StringIO()
        buf.write(f"# experiment={self.experiment}\n# config_digest={self.config_digest}\n"
                  f"# table={name}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(t.columns)
        for r in t.rows:
            w.writerow([render(v) for v in r])
        return buf.getvalue()

    def csv_bundle(self) -> str:
        return "".join(self.table_csv(k) for k in sorted(self.tables))

    def summary_lines(self) -> list[str]:
        return [f"{self.experiment}: {k} {'PASS' if v else 'FAIL'}" for k, v in self.verdicts.items()]


def merge_reports(experiment: str, reports: Sequence[ExperimentReport]) -> ExperimentReport:
    """One report holding the tables and checks of several, names prefixed."""
    tables, tol, checks, notes = {}, {}, [], []
    for r in reports:
        p = r.experiment + "."
        tables.update({p + k: t for k, t in r.tables.items()})
        tol.update({p + k: v for k, v in r.tolerances.items()})
        for c in r.checks:
            checks.append(Check(p + c.name, c.rule, p + c.table, c.columns,
                                None if c.tolerance is None else p + c.tolerance, c.select))
        notes.extend(r.notes)
    cfg = {r.experiment: r.config for r in reports}
    rep = ExperimentReport(experiment, cfg, tables, tol, checks, notes=notes)
    rep.wall_clock = sum(r.wall_clock for r in reports)
    return rep
