"""Directory walking and per-project analysis."""

from __future__ import annotations

import logging
import os
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache, partial
from pathlib import Path

from .detect import ConfigError, ThresholdProfile, ValidationError, detect_file, parse_key_values
from .report import CorpusSummary, FileReport, ProjectReport, aggregate_project, summarize_corpus
from .syntax import LOC_RULES, count_loc, parse_file

log = logging.getLogger(__name__)

DEFAULT_EXCLUDES = (
    "**/.*",
    "**/.*/**",
    "**/venv/**",
    "**/virtualenv/**",
    "**/site-packages/**",
    "**/__pycache__/**",
)


class UsageError(Exception):
    """Bad invocation: missing roots, unreadable root directory."""


@lru_cache(maxsize=256)
def glob_to_regex(pattern: str) -> re.Pattern:
    """Translate a path glob to a regex over ``/``-separated relative paths.

    ``**/`` matches zero or more directories, ``**`` anything, ``*`` and ``?``
    stay inside one path component.
    """
    i, out = 0, []
    while i < len(pattern):
        if pattern.startswith("**/", i):
            out.append("(?:.*/)?")
            i += 3
        elif pattern.startswith("**", i):
            out.append(".*")
            i += 2
        elif pattern[i] == "*":
            out.append("[^/]*")
            i += 1
        elif pattern[i] == "?":
            out.append("[^/]")
            i += 1
        elif pattern[i] == "[":
            end = pattern.find("]", i + 1)
            if end == -1:
                raise ValueError(f"unterminated '[' in glob {pattern!r}")
            body = pattern[i + 1 : end]
            if body.startswith("!"):
                body = "^" + body[1:]
            out.append(f"[{body}]")
            i = end + 1
        else:
            out.append(re.escape(pattern[i]))
            i += 1
    return re.compile("".join(out) + r"\Z")


def glob_match(pattern: str, relpath: str) -> bool:
    return glob_to_regex(pattern).match(relpath) is not None


@dataclass
class ScanConfig:
    roots: list[str] = field(default_factory=list)
    include_glob: str = "**/*.py"
    exclude_globs: tuple[str, ...] = DEFAULT_EXCLUDES
    follow_symlinks: bool = False
    max_file_bytes: int = 2_000_000
    jobs: int = 1
    exclude_self: bool = False
    loc_rule: str = "code"

    def __post_init__(self):
        if self.max_file_bytes <= 0:
            raise ValidationError("max_file_bytes must be positive", "max_file_bytes")
        if self.jobs < 1:
            raise ValidationError("jobs must be at least 1", "jobs")
        if self.loc_rule not in LOC_RULES:
            raise ValidationError(f"loc_rule must be one of {', '.join(LOC_RULES)}", "loc_rule")
        for pattern in (self.include_glob, *self.exclude_globs):
            try:
                glob_to_regex(pattern)
            except ValueError as exc:
                raise ValidationError(str(exc), "exclude_globs") from None

    def excluded(self, relpath: str) -> bool:
        return any(glob_match(p, relpath) for p in self.exclude_globs)


_BOOL = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}


def load_scan_config(text: str, base: ScanConfig | None = None) -> ScanConfig:
    """Read ``key = value`` scan settings. Lists are comma-separated."""
    base = base or ScanConfig()
    changes: dict = {}
    for lineno, key, value in parse_key_values(text):
        key = key.lower()
        try:
            if key == "roots":
                changes["roots"] = [v.strip() for v in value.split(",") if v.strip()]
            elif key in ("include_glob", "loc_rule"):
                changes[key] = value
            elif key == "exclude_globs":
                changes["exclude_globs"] = tuple(v.strip() for v in value.split(",") if v.strip())
            elif key in ("follow_symlinks", "exclude_self"):
                changes[key] = _BOOL[value.lower()]
            elif key in ("max_file_bytes", "jobs"):
                changes[key] = int(value.replace("_", ""))
            else:
                raise ConfigError(f"line {lineno}: unknown scan setting {key!r}", key)
        except (KeyError, ValueError):
            raise ConfigError(f"line {lineno}: bad value {value!r} for {key}", key) from None
    return replace(base, **changes)


def _is_venv(path: str) -> bool:
    return os.path.isfile(os.path.join(path, "pyvenv.cfg"))


def iter_source_files(root: str | Path, config: ScanConfig) -> list[tuple[str, Path]]:
    """Selected files under ``root`` as (relative posix path, path), sorted by relative path."""
    root = Path(root)
    found: list[tuple[str, Path]] = []
    seen_dirs: set[str] = set()
    for dirpath, dirnames, filenames in os.walk(root, followlinks=config.follow_symlinks):
        if config.follow_symlinks:
            real = os.path.realpath(dirpath)
            if real in seen_dirs:
                dirnames[:] = []
                continue
            seen_dirs.add(real)
        rel_dir = Path(dirpath).relative_to(root).as_posix()
        prefix = "" if rel_dir == "." else rel_dir + "/"
        kept = []
        for d in dirnames:
            full = os.path.join(dirpath, d)
            if not config.follow_symlinks and os.path.islink(full):
                continue
            if config.excluded(prefix + d + "/") or _is_venv(full):
                continue
            kept.append(d)
        dirnames[:] = sorted(kept)
        for name in filenames:
            rel = prefix + name
            full = Path(dirpath, name)
            if not config.follow_symlinks and full.is_symlink():
                continue
            if glob_match(config.include_glob, rel) and not config.excluded(rel):
                found.append((rel, full))
    found.sort(key=lambda item: item[0])
    return found


def analyze_file(
    item: tuple[str, Path],
    profile: ThresholdProfile,
    exclude_self: bool = False,
    loc_rule: str = "code",
) -> FileReport:
    rel, path = item
    unit = parse_file(path, display_path=rel, loc_rule=loc_rule)
    for w in unit.warnings:
        log.warning("%s: %s", rel, w)
    if not unit.ok:
        log.warning("%s: parse failed: %s", rel, unit.parse_error)
    findings = detect_file(unit, profile, exclude_self=exclude_self)
    return FileReport(rel, count_loc(unit), unit.parse_status, findings)


def _select(root: Path, config: ScanConfig) -> list[tuple[str, Path]]:
    selected = []
    for rel, path in iter_source_files(root, config):
        try:
            size = path.stat().st_size
        except OSError:
            size = 0  # analyze_file reports the IO failure
        if size > config.max_file_bytes:
            log.warning("%s: skipped, %d bytes exceeds max_file_bytes=%d", rel, size, config.max_file_bytes)
            continue
        selected.append((rel, path))
    return selected


def scan_project(
    root: str | Path,
    config: ScanConfig | None = None,
    profile: ThresholdProfile | None = None,
    name: str | None = None,
) -> ProjectReport:
    config = config or ScanConfig()
    profile = profile or ThresholdProfile()
    root = Path(root)
    if not root.is_dir() or not os.access(root, os.R_OK | os.X_OK):
        raise UsageError(f"not a readable directory: {root}")
    items = _select(root, config)
    work = partial(analyze_file, profile=profile, exclude_self=config.exclude_self, loc_rule=config.loc_rule)
    if config.jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            file_reports = list(pool.map(work, items, chunksize=max(1, len(items) // (4 * config.jobs))))
    else:
        file_reports = [work(item) for item in items]
    return aggregate_project(name or root.resolve().name, file_reports)


def scan_corpus(
    roots: list[str | Path],
    config: ScanConfig | None = None,
    profile: ThresholdProfile | None = None,
) -> CorpusSummary:
    if not roots:
        raise UsageError("no project roots given")
    reports = []
    for i, root in enumerate(roots, start=1):
        report = scan_project(root, config, profile)
        log.info(
            "[%d/%d] %s: %d files, %d LOC, %d smells",
            i,
            len(roots),
            report.project_name,
            report.num_files,
            report.total_loc,
            report.total_findings,
        )
        reports.append(report)
    return summarize_corpus(reports)


def read_roots_file(path: str | Path) -> list[Path]:
    """One project directory per line; relative entries resolve against the file's folder."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read roots file {path}: {exc.strerror or exc}") from None
    roots = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            p = Path(line)
            roots.append(p if p.is_absolute() else path.parent / p)
    return roots
