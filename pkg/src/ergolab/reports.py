"""Experiment reports and their CSV, JSON and text renderings.

The CSV carries only deterministic columns so that two runs of one config
produce byte-identical files; wall-clock timings live in the JSON and text
outputs only.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

from ergolab.errors import ValidationError

CSV_COLUMNS = (
    "experiment", "model", "scheme", "n", "trial", "estimate", "limit_estimate", "within_epsilon", "seed",
)
FORMATS = ("csv", "json", "text")


@dataclass(frozen=True)
class Row:
    experiment: str
    model: str
    scheme: str
    n: int
    trial: int
    estimate: float
    limit_estimate: float
    within_epsilon: bool
    seed: int

    def key(self):
        return (self.experiment, self.model, self.scheme, self.n, self.trial, self.seed)


@dataclass(frozen=True)
class Verdict:
    name: str  # the invariant or criterion the verdict checks
    passed: bool
    detail: str = ""


@dataclass
class ExperimentReport:
    config: dict
    rows: list = field(default_factory=list)
    verdicts: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    errors: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    artifacts: dict = field(default_factory=dict, repr=False)  # in-memory only, never serialized

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def sorted_rows(self):
        return sorted(self.rows, key=Row.key)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "rows": [asdict(r) for r in self.sorted_rows()],
            "verdicts": [asdict(v) for v in self.verdicts],
            "summary": self.summary,
            "errors": list(self.errors),
            "timings": self.timings,
            "passed": self.passed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentReport":
        return cls(
            config=d.get("config", {}),
            rows=[_row_from_mapping(r) for r in d.get("rows", [])],
            verdicts=[Verdict(**v) for v in d.get("verdicts", [])],
            timings=d.get("timings", {}),
            errors=list(d.get("errors", [])),
            summary=d.get("summary", {}),
        )


def _num(x: float) -> str:
    """Shortest text that reads back as the same double."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    return repr(x)


def _row_from_mapping(r) -> Row:
    within = r["within_epsilon"]
    if isinstance(within, str):
        within = within.strip().lower() == "true"
    return Row(
        experiment=str(r["experiment"]),
        model=str(r["model"]),
        scheme=str(r["scheme"]),
        n=int(r["n"]),
        trial=int(r["trial"]),
        estimate=float(r["estimate"]),
        limit_estimate=float(r["limit_estimate"]),
        within_epsilon=bool(within),
        seed=int(r["seed"]),
    )


def to_csv(report: ExperimentReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in report.sorted_rows():
        writer.writerow([
            r.experiment, r.model, r.scheme, r.n, r.trial, _num(r.estimate), _num(r.limit_estimate),
            "true" if r.within_epsilon else "false", r.seed,
        ])
    return buf.getvalue()


def rows_from_csv(text: str) -> list:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
        raise ValidationError(f"CSV header must be {','.join(CSV_COLUMNS)}")
    return [_row_from_mapping(r) for r in reader]


def to_json(report: ExperimentReport) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"


def to_text(report: ExperimentReport) -> str:
    lines = [f"experiment: {report.config.get('experiment', '?')}"]
    groups = {}
    for r in report.sorted_rows():
        groups.setdefault((r.model, r.scheme, r.n), []).append(r)
    if groups:
        header = f"{'model':<24} {'scheme':<22} {'n':>9} {'rows':>5} {'median':>10} {'limit':>10} {'within':>7}"
        lines += [header, "-" * len(header)]
        for (model, scheme, n), rows in groups.items():
            est = sorted(r.estimate for r in rows)
            mid = est[len(est) // 2] if len(est) % 2 else 0.5 * (est[len(est) // 2 - 1] + est[len(est) // 2])
            within = sum(r.within_epsilon for r in rows) / len(rows)
            lines.append(
                f"{model[:24]:<24} {scheme[:22]:<22} {n:>9} {len(rows):>5} {mid:>10.6f} "
                f"{rows[0].limit_estimate:>10.6f} {within:>7.2f}"
            )
    for key, value in report.summary.items():
        lines.append(f"{key}: {value}")
    lines.append("verdicts:")
    for v in report.verdicts:
        lines.append(f"  [{'PASS' if v.passed else 'FAIL'}] {v.name}" + (f": {v.detail}" if v.detail else ""))
    for e in report.errors:
        lines.append(f"  error: {e}")
    if report.timings:
        lines.append("timings (s): " + ", ".join(f"{k}={v:.3f}" for k, v in sorted(report.timings.items())))
    return "\n".join(lines) + "\n"


def emit_reports(report: ExperimentReport, fmt: str, out_dir=None) -> str:
    """Render ``report`` in ``fmt``; write ``report.<ext>`` to ``out_dir`` when given.

    Returns the rendered text.
    """
    if fmt not in FORMATS:
        raise ValidationError(f"format must be one of {', '.join(FORMATS)}")
    text = {"csv": to_csv, "json": to_json, "text": to_text}[fmt](report)
    if out_dir is not None:
        path = Path(out_dir)
        try:
            path.mkdir(parents=True, exist_ok=True)
            ext = {"csv": "csv", "json": "json", "text": "txt"}[fmt]
            (path / f"report.{ext}").write_text(text)
        except OSError as exc:
            raise OSError(f"cannot write reports to {path}: {exc}") from exc
    return text
