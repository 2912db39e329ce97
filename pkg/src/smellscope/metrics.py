"""The eight raw metrics, computed from extracted entities."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .syntax import CodeEntity, EntityKind, SourceUnit, extract_entities, loc_between


class Metric(str, Enum):
    FUNCTION_LOC = "FunctionLOC"
    CLASS_LOC = "ClassLOC"
    NUM_PARAMETERS = "NumParameters"
    CHAIN_LENGTH = "ChainLength"
    CLOSURE_DEPTH = "ClosureDepth"
    TERNARY_CHARS = "TernaryChars"
    CONTAINER_DEPTH = "ContainerDepth"
    LAMBDA_CHARS = "LambdaChars"


_ALLOWED_KINDS = {
    Metric.FUNCTION_LOC: {EntityKind.FUNCTION},
    Metric.CLASS_LOC: {EntityKind.CLASS},
    Metric.NUM_PARAMETERS: {EntityKind.FUNCTION, EntityKind.LAMBDA},
    Metric.CHAIN_LENGTH: {EntityKind.CHAIN},
    Metric.CLOSURE_DEPTH: {EntityKind.FUNCTION, EntityKind.LAMBDA},
    Metric.TERNARY_CHARS: {EntityKind.TERNARY},
    Metric.CONTAINER_DEPTH: {EntityKind.CONTAINER},
    Metric.LAMBDA_CHARS: {EntityKind.LAMBDA},
}


@dataclass(frozen=True)
class MetricValue:
    metric: Metric
    entity: CodeEntity
    value: int

    def __post_init__(self):
        if self.entity.kind not in _ALLOWED_KINDS[self.metric]:
            raise ValueError(f"{self.metric.value} does not apply to {self.entity.kind.value}")
        if self.value < 0:
            raise ValueError("metric values are non-negative")


def _require(entity: CodeEntity, *kinds: EntityKind) -> None:
    if entity.kind not in kinds:
        raise ValueError(f"expected {'/'.join(k.value for k in kinds)}, got {entity.kind.value}")


def function_loc(entity: CodeEntity, unit: SourceUnit) -> MetricValue:
    """Code lines from the ``def`` line through the last body line."""
    _require(entity, EntityKind.FUNCTION)
    value = loc_between(unit, entity.span.start_line, entity.span.end_line)
    return MetricValue(Metric.FUNCTION_LOC, entity, value)


def class_loc(entity: CodeEntity, unit: SourceUnit) -> MetricValue:
    _require(entity, EntityKind.CLASS)
    value = loc_between(unit, entity.span.start_line, entity.span.end_line)
    return MetricValue(Metric.CLASS_LOC, entity, value)


def num_parameters(entity: CodeEntity, exclude_self: bool = False) -> MetricValue:
    """Every declared parameter counts once, ``*args`` and ``**kwargs`` included.

    With ``exclude_self`` the leading ``self``/``cls`` of a method is dropped.
    """
    _require(entity, EntityKind.FUNCTION, EntityKind.LAMBDA)
    params = entity.detail["params"]
    count = len(params)
    if exclude_self and entity.detail.get("in_class") and params and params[0] in ("self", "cls"):
        count -= 1
    return MetricValue(Metric.NUM_PARAMETERS, entity, count)


def chain_length(entity: CodeEntity) -> MetricValue:
    _require(entity, EntityKind.CHAIN)
    return MetricValue(Metric.CHAIN_LENGTH, entity, entity.detail["links"])


def closure_depth(entity: CodeEntity) -> MetricValue:
    _require(entity, EntityKind.FUNCTION, EntityKind.LAMBDA)
    return MetricValue(Metric.CLOSURE_DEPTH, entity, entity.detail["def_depth"])


def ternary_chars(entity: CodeEntity) -> MetricValue:
    _require(entity, EntityKind.TERNARY)
    return MetricValue(Metric.TERNARY_CHARS, entity, entity.span.char_length)


def container_depth(entity: CodeEntity) -> MetricValue:
    _require(entity, EntityKind.CONTAINER)
    return MetricValue(Metric.CONTAINER_DEPTH, entity, entity.detail["depth"])


def lambda_chars(entity: CodeEntity) -> MetricValue:
    _require(entity, EntityKind.LAMBDA)
    return MetricValue(Metric.LAMBDA_CHARS, entity, entity.span.char_length)


def compute_metrics(unit: SourceUnit, exclude_self: bool = False) -> list[MetricValue]:
    """All metric values for a unit, in entity document order.

    Lambdas are measured for length only; parameter count and closure depth
    are taken on ``def`` functions.
    """
    values: list[MetricValue] = []
    for ent in extract_entities(unit):
        kind = ent.kind
        if kind is EntityKind.FUNCTION:
            values.append(function_loc(ent, unit))
            values.append(num_parameters(ent, exclude_self))
            values.append(closure_depth(ent))
        elif kind is EntityKind.CLASS:
            values.append(class_loc(ent, unit))
        elif kind is EntityKind.CHAIN:
            values.append(chain_length(ent))
        elif kind is EntityKind.TERNARY:
            values.append(ternary_chars(ent))
        elif kind is EntityKind.CONTAINER:
            values.append(container_depth(ent))
        elif kind is EntityKind.LAMBDA:
            values.append(lambda_chars(ent))
    return values
