"""Benchmark pipeline: run method grids over instances, measure, report.

Speedup and relative energy change are always quoted against a baseline
method on the same instance; recall is the fraction of variables fixed by
pre-processing and precision is judged on the subset of variables whose
optimal label is known from the un-preprocessed subproblem solution.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .bounds import expansion_factor, per_instance_additive, worst_case_additive, worst_case_multiplicative
from .energy import EnergyFunction, PartialLabeling, evaluate, load_instance
from .errors import MrfError, NoCertificateError, NoFactorError
from .generators import generate
from .inference import (
    BinaryPartialSolution,
    InferenceReport,
    SolveOptions,
    Stopwatch,
    alpha_expansion,
    direct_multilabel_preprocess_solve,
)
from .oracle import brute_force_minimize
from .preprocess import PreprocessConfig

CSV_COLUMNS = [
    "instance_id",
    "method_id",
    "wall_time",
    "final_energy",
    "labeled_fraction",
    "precision",
    "recall",
    "certificate",
    "error",
]

__all__ = [
    "BenchRecord",
    "measure",
    "precision_recall",
    "run_suite",
    "summarize",
    "build_method_options",
    "CSV_COLUMNS",
]


@dataclass
class BenchRecord:
    """One (instance, method) cell of a benchmark run."""

    instance_id: str
    method_id: str
    wall_time: float = 0.0
    final_energy: float = math.nan
    labeled_fraction: float | None = None
    precision: float | None = None
    recall: float | None = None
    certificate: str | None = None
    error: str | None = None

    def to_row(self) -> list:
        return [
            self.instance_id,
            self.method_id,
            self.wall_time,
            self.final_energy,
            _opt(self.labeled_fraction),
            _opt(self.precision),
            _opt(self.recall),
            self.certificate or "",
            self.error or "",
        ]

    def to_dict(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "method_id": self.method_id,
            "wall_time": self.wall_time,
            "final_energy": self.final_energy,
            "labeled_fraction": self.labeled_fraction,
            "precision": self.precision,
            "recall": self.recall,
            "certificate": self.certificate,
            "error": self.error,
        }


def _opt(v: float | None) -> str | float:
    return "" if v is None else v


def measure(baseline: BenchRecord, candidate: BenchRecord) -> tuple[float, float]:
    """(speedup, relative energy change) of a candidate over a baseline."""
    if baseline.instance_id != candidate.instance_id:
        raise MrfError(
            f"cannot compare records of instances {baseline.instance_id!r} and {candidate.instance_id!r}"
        )
    speedup = baseline.wall_time / candidate.wall_time
    energy_change = (candidate.final_energy - baseline.final_energy) / baseline.final_energy
    return speedup, energy_change


def precision_recall(
    ground: BinaryPartialSolution, fixed: PartialLabeling
) -> tuple[float | None, float]:
    """Precision/recall of a pre-processed partial labeling.

    Recall is the fraction of all variables that were fixed. Precision is
    judged only on fixed variables whose ground-truth label is known and is
    absent when there are none.
    """
    total = int(ground.states.size)
    recall = len(fixed) / total if total else 0.0
    known = 0
    correct = 0
    for i, ell in fixed.items():
        if ground.states[i] >= 0:
            known += 1
            if int(ground.states[i]) == ell:
                correct += 1
    precision = correct / known if known else None
    return precision, recall


def build_method_options(spec: Mapping) -> tuple[str, SolveOptions, PreprocessConfig | None]:
    """Translate a method spec dict into solver options."""
    method = spec.get("method", "expansion")
    pre = None
    if method in ("expansion-pre", "multilabel-pre"):
        eps_raw = spec.get("eps", "inf")
        eps = math.inf if str(eps_raw) in ("inf", "infinity") else float(eps_raw)
        pre = PreprocessConfig(
            kappa=float(spec.get("kappa", 0.8)),
            tau=int(spec.get("tau", 3)),
            epsilon=eps,
            q_mode=str(spec.get("q", "unary")),
            check_mode=str(spec.get("check", "approx")),
        )
    opts = SolveOptions(
        pre=pre if method == "expansion-pre" else None,
        max_epochs=int(spec.get("max_epochs", 5)),
        reject_uphill=bool(spec.get("reject_uphill", False)),
        keep_label_only_after_epoch1=bool(spec.get("keep_label_only_after_epoch1", False)),
        collect_truth=bool(spec.get("collect_precision", False)),
    )
    return method, opts, pre


def _certificate_summary(report: InferenceReport) -> str | None:
    if not report.certificates:
        return None
    return "; ".join(c.statement() for c in report.certificates)


def _attach_certificates(energy: EnergyFunction, report: InferenceReport) -> None:
    res = report.preprocess
    if res is None:
        return
    report.certificates.append(per_instance_additive(res))
    if not math.isinf(res.config.epsilon):
        report.certificates.append(worst_case_additive(res))
        try:
            factor = expansion_factor(energy)
            report.certificates.append(worst_case_multiplicative(res, factor))
        except NoFactorError:
            pass


def run_method(energy: EnergyFunction, spec: Mapping) -> InferenceReport:
    """Run one method spec on one instance."""
    method, opts, pre = build_method_options(spec)
    if method == "expansion":
        return alpha_expansion(energy, opts)
    if method == "expansion-pre":
        return alpha_expansion(energy, opts)
    if method == "multilabel-pre":
        assert pre is not None
        report = direct_multilabel_preprocess_solve(energy, pre, opts)
        _attach_certificates(energy, report)
        return report
    if method == "bruteforce":
        watch = Stopwatch()
        watch.start()
        found = brute_force_minimize(energy)
        labeling = found.minimizers[0]
        return InferenceReport(
            method="bruteforce",
            labeling=labeling,
            energy=found.min_energy,
            trace=[(watch.elapsed(), found.min_energy)],
            epochs=1,
            wall_time=watch.elapsed(),
        )
    raise MrfError(f"unknown method {method!r}")


def _record_from_report(instance_id: str, method_id: str, report: InferenceReport) -> BenchRecord:
    return BenchRecord(
        instance_id=instance_id,
        method_id=method_id,
        wall_time=report.wall_time,
        final_energy=report.energy,
        labeled_fraction=report.recall,
        precision=report.precision,
        recall=report.recall,
        certificate=_certificate_summary(report),
    )


def _load_suite_instance(spec: Mapping, base_dir: Path) -> tuple[str, EnergyFunction]:
    instance_id = str(spec["id"])
    if "path" in spec:
        path = Path(spec["path"])
        if not path.is_absolute():
            path = base_dir / path
        return instance_id, load_instance(path)
    return instance_id, generate(spec["kind"], spec.get("params"), int(spec.get("seed", 0)))


def run_suite(manifest: Mapping, out_dir: str | Path, base_dir: str | Path | None = None) -> list[BenchRecord]:
    """Execute every (instance, method) cell of a manifest.

    Writes ``records.csv`` / ``records.json`` plus one energy-over-time trace
    CSV per cell under ``traces/``. Failures of single cells are recorded in
    their record and do not stop the suite.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    traces_dir = out / "traces"
    traces_dir.mkdir(exist_ok=True)
    base = Path(base_dir) if base_dir is not None else Path.cwd()

    records: list[BenchRecord] = []
    for inst_spec in manifest["instances"]:
        try:
            instance_id, energy = _load_suite_instance(inst_spec, base)
        except Exception as exc:  # noqa: BLE001 - suite must keep going
            for m in manifest["methods"]:
                records.append(
                    BenchRecord(str(inst_spec.get("id", "?")), str(m["id"]), error=f"instance: {exc}")
                )
            continue
        for m in manifest["methods"]:
            method_id = str(m["id"])
            try:
                report = run_method(energy, m)
                rec = _record_from_report(instance_id, method_id, report)
                _write_trace(traces_dir / f"{instance_id}__{method_id}.csv", report.trace)
            except Exception as exc:  # noqa: BLE001
                rec = BenchRecord(instance_id, method_id, error=str(exc))
            records.append(rec)

    records.sort(key=lambda r: (r.instance_id, r.method_id))
    _write_records(out, records)
    return records


def _write_trace(path: Path, trace: Sequence[tuple[float, float]]) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["time_seconds", "energy"])
        for t, e in trace:
            w.writerow([f"{t:.9f}", repr(float(e))])


def _write_records(out: Path, records: Sequence[BenchRecord]) -> None:
    with (out / "records.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for r in records:
            w.writerow(r.to_row())
    (out / "records.json").write_text(
        json.dumps([r.to_dict() for r in records], indent=2), encoding="utf-8"
    )


def summarize(
    records: Sequence[BenchRecord], baseline_method: str, mode: str = "per-instance"
) -> dict[str, dict[str, float]]:
    """Aggregate speedup / energy change per method against a baseline.

    ``per-instance`` averages the per-instance ratios; ``per-dataset``
    takes the ratio of summed times and energies.
    """
    if mode not in ("per-instance", "per-dataset"):
        raise ValueError("mode must be 'per-instance' or 'per-dataset'")
    by_instance: dict[str, dict[str, BenchRecord]] = {}
    for r in records:
        if r.error is None:
            by_instance.setdefault(r.instance_id, {})[r.method_id] = r

    methods = sorted({r.method_id for r in records if r.error is None})
    out: dict[str, dict[str, float]] = {}
    for m in methods:
        pairs = [
            (cell[baseline_method], cell[m])
            for cell in by_instance.values()
            if baseline_method in cell and m in cell
        ]
        if not pairs:
            continue
        if mode == "per-instance":
            ratios = [measure(b, c) for b, c in pairs]
            speedup = float(np.mean([s for s, _ in ratios]))
            echange = float(np.mean([e for _, e in ratios]))
        else:
            tb = sum(b.wall_time for b, _ in pairs)
            tc = sum(c.wall_time for _, c in pairs)
            eb = sum(b.final_energy for b, _ in pairs)
            ec = sum(c.final_energy for _, c in pairs)
            speedup = tb / tc
            echange = (ec - eb) / eb
        out[m] = {"speedup": speedup, "energy_change": echange, "cells": float(len(pairs))}
    return out
