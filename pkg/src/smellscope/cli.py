"""Command-line entry point.

Exit codes: 0 success without findings, 1 success with findings,
2 usage or configuration error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from datetime import date
from pathlib import Path

from .corpus import ScanConfig, UsageError, load_scan_config, read_roots_file, scan_corpus, scan_project
from .detect import ConfigError, ThresholdProfile, dump_profile, load_profile, read_profile
from .miner import (
    DEFAULT_API_URL,
    GitHubClient,
    MinerError,
    ReplaySession,
    RepoQuery,
    acquire_all,
    default_pushed_after,
    emit_candidates,
)
from .report import FORMATS, serialize
from .syntax import LOC_RULES

EXIT_CLEAN, EXIT_FINDINGS, EXIT_USAGE, EXIT_FAILURE = 0, 1, 2, 3

log = logging.getLogger("smellscope")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value <= 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {value}")
    return value


def _add_analysis_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", default="json", help="json, csv or table (default: json)")
    p.add_argument("--thresholds", metavar="FILE", help="threshold profile (key = value lines)")
    p.add_argument("--jobs", type=_positive_int, default=os.cpu_count() or 1, help="worker processes")
    p.add_argument("--exclude-self", action="store_true", help="do not count self/cls as parameters")
    p.add_argument("--scan-config", metavar="FILE", help="scan settings file (key = value lines)")
    p.add_argument("--include", metavar="GLOB", help="file selection glob (default: **/*.py)")
    p.add_argument("--exclude", metavar="GLOB", action="append", default=None, help="extra exclude glob")
    p.add_argument("--no-default-excludes", action="store_true", help="drop the built-in exclude globs")
    p.add_argument("--follow-symlinks", action="store_true")
    p.add_argument("--max-file-bytes", type=_positive_int)
    p.add_argument(
        "--loc-rule",
        choices=LOC_RULES,
        help="code: skip blank and comment-only lines (default); physical: count every line",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="smellscope", description="Detect code smells in Python projects.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    parser.add_argument("-q", "--quiet", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("analyze", help="analyze one project directory")
    p.add_argument("path")
    _add_analysis_options(p)

    p = sub.add_parser("scan", help="analyze several projects and summarize them")
    p.add_argument("roots", nargs="*")
    p.add_argument("--roots-file", metavar="FILE", help="file listing one project directory per line")
    _add_analysis_options(p)

    p = sub.add_parser("mine", help="search for candidate repositories")
    p.add_argument("--keywords", nargs="+", required=True)
    p.add_argument("--language", default="Python")
    p.add_argument("--min-stars", type=int, default=0)
    p.add_argument("--max", dest="max_results", type=int, default=20)
    p.add_argument("--pushed-after", type=date.fromisoformat, help="YYYY-MM-DD (default: 24 months ago)")
    p.add_argument("--per-page", type=int, default=100)
    p.add_argument("--out", required=True, help="candidate file (JSON lines)")
    p.add_argument("--api-url", default=DEFAULT_API_URL)
    p.add_argument("--replay", metavar="FILE", help="serve HTTP from a recorded transcript")
    p.add_argument("--acquire-dir", metavar="DIR", help="also download every candidate here")
    p.add_argument("--acquire-jobs", type=_positive_int, default=4)

    p = sub.add_parser("profile", help="show or write the threshold profile")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--print", dest="print_", action="store_true", help="print thresholds (default)")
    group.add_argument("--write", metavar="PATH")
    p.add_argument("--thresholds", metavar="FILE", help="start from this profile file")
    p.add_argument("--set", metavar="KEY=VALUE", action="append", default=[], help="override one threshold")
    return parser


def _profile(args) -> ThresholdProfile:
    return read_profile(args.thresholds) if args.thresholds else ThresholdProfile()


def _scan_config(args) -> ScanConfig:
    config = ScanConfig()
    if args.scan_config:
        try:
            text = Path(args.scan_config).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read scan config {args.scan_config}: {exc.strerror or exc}") from None
        config = load_scan_config(text, config)
    changes = {"jobs": args.jobs, "exclude_self": args.exclude_self or config.exclude_self}
    excludes = () if args.no_default_excludes else config.exclude_globs
    changes["exclude_globs"] = tuple(excludes) + tuple(args.exclude or ())
    if args.include:
        changes["include_glob"] = args.include
    if args.follow_symlinks:
        changes["follow_symlinks"] = True
    if args.max_file_bytes:
        changes["max_file_bytes"] = args.max_file_bytes
    if args.loc_rule:
        changes["loc_rule"] = args.loc_rule
    return ScanConfig(**{**config.__dict__, **changes})


def _check_format(fmt: str) -> None:
    if fmt not in FORMATS:
        raise UsageError(f"unknown format {fmt!r}; choose from {', '.join(FORMATS)}")


def _write(payload: bytes) -> None:
    sys.stdout.buffer.write(payload)
    sys.stdout.flush()


def cmd_analyze(args) -> int:
    _check_format(args.format)
    report = scan_project(args.path, _scan_config(args), _profile(args))
    _write(serialize(report, args.format))
    return EXIT_FINDINGS if report.total_findings else EXIT_CLEAN


def cmd_scan(args) -> int:
    _check_format(args.format)
    roots = [Path(r) for r in args.roots]
    if args.roots_file:
        roots.extend(read_roots_file(args.roots_file))
    config = _scan_config(args)
    roots.extend(Path(r) for r in config.roots)
    summary = scan_corpus(roots, config, _profile(args))
    _write(serialize(summary, args.format))
    return EXIT_FINDINGS if summary.total_findings else EXIT_CLEAN


def cmd_mine(args) -> int:
    if args.max_results <= 0:
        raise UsageError("--max must be positive")
    if args.min_stars < 0:
        raise UsageError("--min-stars must not be negative")
    try:
        query = RepoQuery(
            keywords=args.keywords,
            language=args.language,
            min_stars=args.min_stars,
            pushed_after=args.pushed_after or default_pushed_after(),
            max_results=args.max_results,
            per_page=args.per_page,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    session = ReplaySession.from_file(args.replay) if args.replay else None
    client = GitHubClient(args.api_url, session=session)
    found = client.search(query)
    emit_candidates(found, args.out)
    log.info("wrote %d candidates to %s", len(found), args.out)
    if args.acquire_dir:
        for path in acquire_all(client, found, args.acquire_dir, args.acquire_jobs):
            log.info("acquired %s", path)
    return EXIT_CLEAN


def cmd_profile(args) -> int:
    profile = _profile(args)
    if args.set:
        profile = load_profile("\n".join(args.set), base=profile)
    text = dump_profile(profile)
    if args.write:
        try:
            Path(args.write).write_text(text, encoding="utf-8")
        except OSError as exc:
            log.error("cannot write %s: %s", args.write, exc.strerror or exc)
            return EXIT_FAILURE
    else:
        _write(text.encode("utf-8"))
    return EXIT_CLEAN


COMMANDS = {"analyze": cmd_analyze, "scan": cmd_scan, "mine": cmd_mine, "profile": cmd_profile}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.ERROR if args.quiet else logging.DEBUG if args.verbose > 1 else logging.INFO
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s: %(message)s", force=True)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError) as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except MinerError as exc:
        log.error("%s", exc)
        return EXIT_FAILURE
    except Exception as exc:  # noqa: BLE001 - exit code contract
        log.error("unexpected failure: %s", exc, exc_info=args.verbose > 0)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
