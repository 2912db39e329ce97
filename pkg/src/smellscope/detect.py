"""Threshold profiles and smell detection."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace
from enum import Enum
from pathlib import Path

from .metrics import Metric, MetricValue, compute_metrics
from .syntax import SourceSpan, SourceUnit


class Smell(str, Enum):
    LM = "LM"
    LC = "LC"
    LPL = "LPL"
    LMC = "LMC"
    LSC = "LSC"
    LTCE = "LTCE"
    MNC = "MNC"
    LLF = "LLF"


# Declaration order above is the report column order.
SMELL_ORDER = tuple(Smell)
_SMELL_INDEX = {s: i for i, s in enumerate(SMELL_ORDER)}

SMELL_FOR_METRIC = {
    Metric.FUNCTION_LOC: Smell.LM,
    Metric.CLASS_LOC: Smell.LC,
    Metric.NUM_PARAMETERS: Smell.LPL,
    Metric.CHAIN_LENGTH: Smell.LMC,
    Metric.CLOSURE_DEPTH: Smell.LSC,
    Metric.TERNARY_CHARS: Smell.LTCE,
    Metric.CONTAINER_DEPTH: Smell.MNC,
    Metric.LAMBDA_CHARS: Smell.LLF,
}

PROFILE_KEY_FOR_SMELL = {
    Smell.LM: "lm_function_loc",
    Smell.LC: "lc_class_loc",
    Smell.LPL: "lpl_num_params",
    Smell.LMC: "lmc_chain_length",
    Smell.LSC: "lsc_closure_depth",
    Smell.LTCE: "ltce_chars",
    Smell.MNC: "mnc_container_depth",
    Smell.LLF: "llf_chars",
}


class ConfigError(ValueError):
    """Malformed configuration text or an unknown key."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


class ValidationError(ConfigError):
    """A well-formed setting with an unacceptable value."""


@dataclass(frozen=True)
class ThresholdProfile:
    lm_function_loc: int = 38
    lc_class_loc: int = 29
    lpl_num_params: int = 5
    lmc_chain_length: int = 5
    lsc_closure_depth: int = 3
    ltce_chars: int = 54
    mnc_container_depth: int = 3
    llf_chars: int = 48

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, bool) or not isinstance(value, int):
                raise ValidationError(f"{f.name} must be an integer, got {value!r}", f.name)
            if value <= 0:
                raise ValidationError(f"{f.name} must be positive, got {value}", f.name)

    def threshold(self, smell: Smell) -> int:
        return getattr(self, PROFILE_KEY_FOR_SMELL[smell])

    def with_threshold(self, smell: Smell, value: int) -> ThresholdProfile:
        return replace(self, **{PROFILE_KEY_FOR_SMELL[smell]: value})

    def as_dict(self) -> dict[str, int]:
        return asdict(self)


_ALIASES = {s.value.lower(): key for s, key in PROFILE_KEY_FOR_SMELL.items()}
_KEYS = set(PROFILE_KEY_FOR_SMELL.values())


def parse_key_values(text: str) -> list[tuple[int, str, str]]:
    """Split flat ``key = value`` text into (lineno, key, value) triples.

    ``:`` works as a separator too; ``#`` starts a comment.
    """
    items = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        sep = "=" if "=" in line else ":" if ":" in line else None
        if sep is None:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split(sep, 1))
        if not key:
            raise ConfigError(f"line {lineno}: missing key")
        items.append((lineno, key, value))
    return items


def load_profile(source: str | None = None, base: ThresholdProfile | None = None) -> ThresholdProfile:
    """Build a profile from config text; missing keys keep the defaults.

    Short smell names (``lm = 10``) are accepted for the full key names.
    """
    base = base or ThresholdProfile()
    if not source:
        return base
    overrides: dict[str, int] = {}
    for lineno, key, value in parse_key_values(source):
        name = _ALIASES.get(key.lower(), key.lower())
        if name not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown threshold key {key!r}", key)
        try:
            overrides[name] = int(value)
        except ValueError:
            raise ConfigError(f"line {lineno}: {key} needs an integer, got {value!r}", key) from None
    return replace(base, **overrides)


def read_profile(path: str | Path) -> ThresholdProfile:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read threshold file {path}: {exc.strerror or exc}") from None
    return load_profile(text)


def dump_profile(profile: ThresholdProfile) -> str:
    return "".join(f"{key} = {value}\n" for key, value in profile.as_dict().items())


@dataclass(frozen=True)
class SmellFinding:
    smell: Smell
    file: str
    span: SourceSpan
    entity_name: str | None
    measured: int
    threshold: int

    def sort_key(self) -> tuple:
        return (self.file, self.span.start_line, self.span.start_col, _SMELL_INDEX[self.smell])


def detect_entity(metric: MetricValue, profile: ThresholdProfile, file: str = "") -> SmellFinding | None:
    smell = SMELL_FOR_METRIC[metric.metric]
    limit = profile.threshold(smell)
    if metric.value <= limit:
        return None
    ent = metric.entity
    return SmellFinding(smell, file, ent.span, ent.name, metric.value, limit)


def detect_file(
    unit: SourceUnit, profile: ThresholdProfile | None = None, exclude_self: bool = False
) -> list[SmellFinding]:
    if not unit.ok:
        return []
    profile = profile or ThresholdProfile()
    findings = []
    for value in compute_metrics(unit, exclude_self=exclude_self):
        finding = detect_entity(value, profile, unit.path)
        if finding is not None:
            findings.append(finding)
    findings.sort(key=SmellFinding.sort_key)
    return findings
