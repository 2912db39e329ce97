"""Aggregation of findings into file, project and corpus reports.

Densities are kept as exact fractions; rounding (half-up, two decimals)
happens only when a value is presented or serialized.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import statistics
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal, localcontext
from fractions import Fraction

from .detect import SMELL_ORDER, Smell, SmellFinding
from .syntax import SourceSpan

log = logging.getLogger(__name__)

FORMATS = ("json", "csv", "table")
CSV_COLUMNS = ["Project", "NumFiles", "LOCs", *[s.value for s in SMELL_ORDER], "Total"]


def round_half_up(value: Fraction | float | int, places: int = 2) -> float:
    if isinstance(value, Fraction):
        with localcontext() as ctx:
            ctx.prec = 60
            dec = Decimal(value.numerator) / Decimal(value.denominator)
    else:
        dec = Decimal(str(value))
    return float(dec.quantize(Decimal(1).scaleb(-places), rounding=ROUND_HALF_UP))


def _zero_counts() -> dict[Smell, int]:
    return {s: 0 for s in SMELL_ORDER}


def _coerce_counts(counts: Mapping) -> dict[Smell, int]:
    out = _zero_counts()
    for key, value in counts.items():
        out[Smell(key)] = int(value)
    return out


def density_of(findings: int, loc: int) -> Fraction:
    return Fraction(100 * findings, loc) if loc > 0 else Fraction(0)


@dataclass
class FileReport:
    path: str
    loc: int
    parse_status: str = "ok"
    findings: list[SmellFinding] = field(default_factory=list)

    @property
    def counts_by_smell(self) -> dict[Smell, int]:
        counts = _zero_counts()
        for f in self.findings:
            counts[f.smell] += 1
        return counts


@dataclass
class ProjectReport:
    project_name: str
    num_files: int
    total_loc: int
    counts_by_smell: dict[Smell, int]
    files: list[FileReport] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @classmethod
    def from_counts(cls, name: str, num_files: int, total_loc: int, counts) -> ProjectReport:
        """Build a report from summary numbers alone, e.g. a published table row.

        ``counts`` is a mapping keyed by smell or a sequence in column order.
        """
        if not isinstance(counts, Mapping):
            counts = dict(zip(SMELL_ORDER, counts, strict=True))
        report = cls(name, num_files, total_loc, _coerce_counts(counts))
        if total_loc <= 0:
            report.warnings.append("density undefined: project has no lines of code")
        return report

    @property
    def total_findings(self) -> int:
        return sum(self.counts_by_smell.values())

    @property
    def density(self) -> Fraction:
        """Findings per 100 lines of code, exact."""
        return density_of(self.total_findings, self.total_loc)

    @property
    def density_pct(self) -> float:
        return round_half_up(self.density)

    @property
    def density_undefined(self) -> bool:
        return self.total_loc <= 0


def aggregate_project(name: str, file_reports: Iterable[FileReport]) -> ProjectReport:
    files = list(file_reports)
    counts = _zero_counts()
    for fr in files:
        for smell, n in fr.counts_by_smell.items():
            counts[smell] += n
    report = ProjectReport(name, len(files), sum(fr.loc for fr in files), counts, files)
    if not files:
        report.warnings.append("no analyzable files")
    if report.density_undefined:
        report.warnings.append("density undefined: project has no lines of code")
    for w in report.warnings:
        log.warning("%s: %s", name, w)
    return report


@dataclass
class CorpusSummary:
    projects: list[ProjectReport]
    mean_density: Fraction
    stddev_density: float
    degenerate_sample: bool
    max_density_project: str

    @property
    def counts_by_smell(self) -> dict[Smell, int]:
        counts = _zero_counts()
        for p in self.projects:
            for smell, n in p.counts_by_smell.items():
                counts[smell] += n
        return counts

    @property
    def total_files(self) -> int:
        return sum(p.num_files for p in self.projects)

    @property
    def total_loc(self) -> int:
        return sum(p.total_loc for p in self.projects)

    @property
    def total_findings(self) -> int:
        return sum(p.total_findings for p in self.projects)

    @property
    def mean_density_pct(self) -> float:
        return round_half_up(self.mean_density)

    @property
    def stddev_density_pct(self) -> float:
        return round_half_up(self.stddev_density)

    @property
    def findings_per_file(self) -> float:
        return self.total_findings / self.total_files if self.total_files else 0.0


def summarize_corpus(reports: Iterable[ProjectReport]) -> CorpusSummary:
    """Unweighted mean and sample standard deviation of per-project densities."""
    projects = list(reports)
    if not projects:
        raise ValueError("cannot summarize an empty corpus")
    densities = [p.density for p in projects]
    mean = statistics.mean(densities)
    degenerate = len(projects) < 2
    stddev = 0.0 if degenerate else float(statistics.stdev(densities, mean))
    # Highest density wins; equal densities go to the alphabetically first name.
    top = min(projects, key=lambda p: (-p.density, p.project_name))
    return CorpusSummary(projects, Fraction(mean), stddev, degenerate, top.project_name)


def rank_smells(report) -> list[tuple[Smell, int]]:
    """Smells by descending count, ties in report column order."""
    counts = report if isinstance(report, Mapping) else report.counts_by_smell
    counts = _coerce_counts(counts)
    return sorted(counts.items(), key=lambda kv: (-kv[1], SMELL_ORDER.index(kv[0])))


def file_breakdown(report: ProjectReport, smell: Smell | str) -> list[tuple[str, int]]:
    """Per-file counts of one smell, largest first, files without it omitted."""
    smell = Smell(smell)
    rows = [(fr.path, fr.counts_by_smell[smell]) for fr in report.files]
    return sorted(((p, n) for p, n in rows if n), key=lambda r: (-r[1], r[0]))


# -- serialization -----------------------------------------------------------


def _smells_dict(counts: Mapping[Smell, int]) -> dict[str, int]:
    return {s.value: counts[s] for s in SMELL_ORDER}


def finding_to_dict(f: SmellFinding) -> dict:
    return {
        "smell": f.smell.value,
        "line": f.span.start_line,
        "col": f.span.start_col,
        "measured": f.measured,
        "threshold": f.threshold,
        "entity": f.entity_name,
    }


def project_to_dict(report: ProjectReport) -> dict:
    return {
        "project": report.project_name,
        "num_files": report.num_files,
        "total_loc": report.total_loc,
        "smells": _smells_dict(report.counts_by_smell),
        "total_findings": report.total_findings,
        "density_pct": report.density_pct,
        "files": [
            {
                "path": fr.path,
                "loc": fr.loc,
                "parse_status": fr.parse_status,
                "findings": [finding_to_dict(f) for f in fr.findings],
            }
            for fr in report.files
        ],
    }


def project_from_dict(data: Mapping) -> ProjectReport:
    """Inverse of :func:`project_to_dict`. Spans keep only their start point."""
    files = []
    for fd in data["files"]:
        findings = [
            SmellFinding(
                Smell(d["smell"]),
                fd["path"],
                SourceSpan(d["line"], d["col"], d["line"], d["col"], 0),
                d["entity"],
                d["measured"],
                d["threshold"],
            )
            for d in fd["findings"]
        ]
        files.append(FileReport(fd["path"], fd["loc"], fd["parse_status"], findings))
    return ProjectReport(
        data["project"], data["num_files"], data["total_loc"], _coerce_counts(data["smells"]), files
    )


def corpus_to_dict(summary: CorpusSummary) -> dict:
    return {
        "projects": [project_to_dict(p) for p in summary.projects],
        "summary": {
            "num_projects": len(summary.projects),
            "num_files": summary.total_files,
            "total_loc": summary.total_loc,
            "smells": _smells_dict(summary.counts_by_smell),
            "total_findings": summary.total_findings,
            "mean_density_pct": summary.mean_density_pct,
            "stddev_density_pct": summary.stddev_density_pct,
            "degenerate_sample": summary.degenerate_sample,
            "max_density_project": summary.max_density_project,
            "findings_per_file": round_half_up(summary.findings_per_file),
        },
    }


def _csv_row(name, files, loc, counts, total) -> list:
    return [name, files, loc, *(counts[s] for s in SMELL_ORDER), total]


def to_csv(report: ProjectReport | CorpusSummary) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    projects = report.projects if isinstance(report, CorpusSummary) else [report]
    for p in projects:
        writer.writerow(_csv_row(p.project_name, p.num_files, p.total_loc, p.counts_by_smell, p.total_findings))
    if isinstance(report, CorpusSummary):
        writer.writerow(
            _csv_row("Total", report.total_files, report.total_loc, report.counts_by_smell, report.total_findings)
        )
    return buf.getvalue()


def to_table(report: ProjectReport | CorpusSummary) -> str:
    projects = report.projects if isinstance(report, CorpusSummary) else [report]
    width = max([len("Project"), len("Total"), *(len(p.project_name) for p in projects)])
    head = f"{'Project':<{width}} {'Files':>6} {'LOCs':>8} " + " ".join(f"{s.value:>5}" for s in SMELL_ORDER)
    head += f" {'Total':>6} {'Dens%':>7}"

    def row(name, files, loc, counts, total, dens):
        cells = " ".join(f"{counts[s]:>5}" for s in SMELL_ORDER)
        return f"{name:<{width}} {files:>6} {loc:>8} {cells} {total:>6} {dens:>7.2f}"

    lines = [head, "-" * len(head)]
    for p in projects:
        lines.append(row(p.project_name, p.num_files, p.total_loc, p.counts_by_smell, p.total_findings, p.density_pct))
    if isinstance(report, CorpusSummary):
        lines.append("-" * len(head))
        pooled = round_half_up(density_of(report.total_findings, report.total_loc))
        lines.append(
            row("Total", report.total_files, report.total_loc, report.counts_by_smell, report.total_findings, pooled)
        )
        lines.append("")
        lines.append(f"mean density:    {report.mean_density_pct:.2f}%")
        stddev_note = " (single project)" if report.degenerate_sample else ""
        lines.append(f"stddev density:  {report.stddev_density_pct:.2f}%{stddev_note}")
        lines.append(f"max density:     {report.max_density_project}")
        lines.append(f"smells per file: {report.findings_per_file:.2f}")
    else:
        flagged = [fr for fr in report.files if fr.findings or fr.parse_status != "ok"]
        if flagged:
            lines.append("")
            fw = max(len(fr.path) for fr in flagged)
            for fr in flagged:
                cells = " ".join(f"{fr.counts_by_smell[s]:>5}" for s in SMELL_ORDER)
                status = "" if fr.parse_status == "ok" else f"  [{fr.parse_status}]"
                lines.append(f"{fr.path:<{fw}} {fr.loc:>8} {cells}{status}")
    lines.append("")
    top = [f"{s.value} ({n})" for s, n in rank_smells(report)[:4] if n]
    lines.append("most frequent: " + (", ".join(top) if top else "none"))
    return "\n".join(lines) + "\n"


def to_json(report: ProjectReport | CorpusSummary) -> str:
    data = corpus_to_dict(report) if isinstance(report, CorpusSummary) else project_to_dict(report)
    return json.dumps(data, indent=2, ensure_ascii=False) + "\n"


def serialize(report: ProjectReport | CorpusSummary, fmt: str = "json") -> bytes:
    if fmt == "json":
        text = to_json(report)
    elif fmt == "csv":
        text = to_csv(report)
    elif fmt == "table":
        text = to_table(report)
    else:
        raise ValueError(f"unknown format {fmt!r}; choose from {', '.join(FORMATS)}")
    return text.encode("utf-8")

