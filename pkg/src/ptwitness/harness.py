"""Evaluate scenarios into report rows and serialise them deterministically."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Any, Iterable, Sequence

from .oracle import is_npt
from .scenario import Scenario, ScenarioError, _fmt
from .witnesses import DEFAULT_TOL, WitnessReport

COLUMNS = ("scenario_id", "state", "witness", "params", "lhs", "rhs", "margin", "violated", "oracle_min_eig")


@dataclass(frozen=True)
class Row:
    scenario_id: str
    state: str
    witness: str
    params: tuple[tuple[str, Any], ...]
    lhs: float | None
    rhs: float | None
    margin: float | None
    violated: bool | None
    oracle_min_eig: float | None = None

    def params_text(self) -> str:
        return ";".join(f"{k}={_fmt(v)}" for k, v in self.params)

    def cells(self) -> list[str]:
        def num(x):
            return "" if x is None else _fmt(float(x))

        return [
            self.scenario_id,
            self.state,
            self.witness,
            self.params_text(),
            num(self.lhs),
            num(self.rhs),
            num(self.margin),
            "" if self.violated is None else _fmt(self.violated),
            num(self.oracle_min_eig),
        ]

    def record(self) -> dict:
        def num(x):
            return None if x is None else float(_fmt(float(x)))

        return {
            "scenario_id": self.scenario_id,
            "state": self.state,
            "witness": self.witness,
            "params": {k: _fmt(v) for k, v in self.params},
            "lhs": num(self.lhs),
            "rhs": num(self.rhs),
            "margin": num(self.margin),
            "violated": self.violated,
            "oracle_min_eig": num(self.oracle_min_eig),
        }


@dataclass(frozen=True)
class RunOptions:
    oracle: bool | None = None
    cutoff: int | None = None
    tolerance: float = DEFAULT_TOL


def _oracle_eig(scenario: Scenario, state, modes, options: RunOptions) -> float | None:
    enabled = scenario.oracle if options.oracle is None else options.oracle
    if not enabled or not modes:
        return None
    if options.cutoff is not None:
        cutoffs = [options.cutoff] * state.mode_count
    elif scenario.cutoffs is not None:
        if len(scenario.cutoffs) != state.mode_count:
            raise ScenarioError("oracle.cutoffs", f"expected {state.mode_count} entries")
        cutoffs = scenario.cutoffs
    else:
        cutoffs = None
    return is_npt(state, modes, cutoffs, method="auto").min_eig


def _row(scenario: Scenario, report: WitnessReport, extra: Sequence[tuple[str, Any]], eig) -> Row:
    params = list(report.params.items())
    if report.reason:
        params.append(("reason", report.reason))
    params.extend(extra)
    return Row(scenario.id, scenario.state.label(), report.witness_name, tuple(params),
               report.lhs, report.rhs, report.margin, report.violated, eig)


def evaluate(scenario: Scenario, options: RunOptions = RunOptions()) -> list[tuple[WitnessReport, Row]]:
    state = scenario.state.build()
    out = []
    for spec in scenario.witnesses:
        report, modes = spec.evaluate(state, options.tolerance)
        out.append((report, _row(scenario, report, (), _oracle_eig(scenario, state, modes, options))))
    return out


def run_scenario(scenario: Scenario, options: RunOptions = RunOptions()) -> list[Row]:
    """Rows in witness declaration order, or the scan rows if the scenario has a scan."""
    if scenario.scan is not None:
        return scan(scenario, options)
    return [row for _, row in evaluate(scenario, options)]


def scan(scenario: Scenario, options: RunOptions = RunOptions()) -> list[Row]:
    """One row per (witness, outer grid point), best margin over the inner grid, then a threshold row.

    The threshold is the first outer value (ascending) whose best row is violated.
    """
    spec = scenario.scan
    if spec is None:
        raise ScenarioError("scan", "scenario has no scan section")
    outer = sorted(spec.values)
    inner = spec.inner.values if spec.inner is not None else [None]
    per_witness: list[list[Row]] = [[] for _ in scenario.witnesses]
    for x in outer:
        best: list[tuple[WitnessReport, Row] | None] = [None] * len(scenario.witnesses)
        for y in inner:
            assign = [(spec.param, x)]
            extra = [(f"scan:{spec.param}", x)]
            if y is not None:
                assign.append((spec.inner.param, y))
                extra.append((f"inner:{spec.inner.param}", y))
            point = scenario.at(assign)
            for i, (report, row) in enumerate(evaluate(point, options)):
                row = Row(row.scenario_id, row.state, row.witness, row.params + tuple(extra),
                          row.lhs, row.rhs, row.margin, row.violated, row.oracle_min_eig)
                if best[i] is None or report.margin < best[i][0].margin:
                    best[i] = (report, row)
        for i, pair in enumerate(best):
            per_witness[i].append(pair[1])

    # A scanned state parameter makes the base label misleading; keep only the family name.
    scans_state = spec.param.startswith("state.")
    base_label = (scenario.state.builtin or "explicit") if scans_state else scenario.state.label()
    rows = []
    for spec_w, wrows in zip(scenario.witnesses, per_witness):
        rows.extend(wrows)
        hit = next((x for x, r in zip(outer, wrows) if r.violated), None)
        rows.append(Row(scenario.id, base_label, f"{spec_w.name}:threshold",
                        ((f"scan:{spec.param}", "none" if hit is None else hit),),
                        None, None, None, None, None))
    return rows


def format_rows(rows: Iterable[Row], fmt: str = "csv") -> str:
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(COLUMNS)
        for row in rows:
            writer.writerow(row.cells())
        return buf.getvalue()
    if fmt == "records":
        return "".join(json.dumps(row.record(), sort_keys=False) + "\n" for row in rows)
    raise ValueError(f"unknown format {fmt!r}")
