"""Parsing of Python source files and extraction of measurable entities.

Everything downstream (metrics, detection) works from the entities produced
here, so this module owns the rules for what counts as a function span, a
container nesting, or an access chain.
"""

from __future__ import annotations

import ast
import bisect
import io
import tokenize
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterator

__all__ = [
    "EntityKind",
    "SourceSpan",
    "SourceUnit",
    "CodeEntity",
    "parse_source",
    "parse_file",
    "extract_entities",
    "code_lines",
    "count_loc",
    "LOC_RULES",
]

# "code": lines with at least one non-comment token. "physical": every line.
LOC_RULES = ("code", "physical")


class EntityKind(str, Enum):
    FUNCTION = "FunctionDef"
    CLASS = "ClassDef"
    LAMBDA = "Lambda"
    TERNARY = "TernaryExpr"
    CONTAINER = "ContainerExpr"
    CHAIN = "AccessChain"


@dataclass(frozen=True, order=True)
class SourceSpan:
    start_line: int  # 1-based
    start_col: int  # 0-based, in characters
    end_line: int
    end_col: int
    char_length: int


@dataclass
class SourceUnit:
    path: str
    text: str
    lines: list[str]
    tree: ast.Module | None
    parse_error: str | None = None
    warnings: list[str] = field(default_factory=list)
    loc_rule: str = "code"

    @property
    def ok(self) -> bool:
        return self.parse_error is None

    @property
    def parse_status(self) -> str:
        return "ok" if self.parse_error is None else f"failed: {self.parse_error}"

    def _line_offsets(self) -> list[int]:
        offsets = getattr(self, "_offsets", None)
        if offsets is None:
            offsets = [0]
            for line in self.lines:
                offsets.append(offsets[-1] + len(line))
            self._offsets = offsets
        return offsets

    def char_col(self, lineno: int, byte_col: int) -> int:
        """Convert an ast UTF-8 byte column to a character column."""
        if lineno < 1 or lineno > len(self.lines):
            return byte_col
        line = self.lines[lineno - 1]
        if line.isascii():
            return byte_col
        return len(line.encode("utf-8")[:byte_col].decode("utf-8", errors="replace"))

    def offset(self, lineno: int, char_col: int) -> int:
        return self._line_offsets()[lineno - 1] + char_col

    def span_of(self, node: ast.AST) -> SourceSpan:
        start_col = self.char_col(node.lineno, node.col_offset)
        end_col = self.char_col(node.end_lineno, node.end_col_offset)
        length = self.offset(node.end_lineno, end_col) - self.offset(node.lineno, start_col)
        return SourceSpan(node.lineno, start_col, node.end_lineno, end_col, length)

    def segment(self, span: SourceSpan) -> str:
        start = self.offset(span.start_line, span.start_col)
        return self.text[start : start + span.char_length]


@dataclass(eq=False)
class CodeEntity:
    kind: EntityKind
    span: SourceSpan
    name: str | None = None
    parent: CodeEntity | None = field(default=None, repr=False)
    node: ast.AST | None = field(default=None, repr=False, compare=False)
    # FunctionDef/Lambda: def_depth, params (list of names), in_class
    # ContainerExpr: depth; AccessChain: links
    detail: dict = field(default_factory=dict)

    def key(self) -> tuple:
        return (self.kind.value, self.name, self.span)

    def ancestors(self) -> Iterator[CodeEntity]:
        p = self.parent
        while p is not None:
            yield p
            p = p.parent


def split_lines(text: str) -> list[str]:
    # Only \n, \r\n and \r terminate lines, matching the tokenizer and ast.
    return io.StringIO(text, newline="").readlines()


def _check_loc_rule(loc_rule: str) -> None:
    if loc_rule not in LOC_RULES:
        raise ValueError(f"unknown LOC rule {loc_rule!r}; choose from {', '.join(LOC_RULES)}")


def parse_source(text: str, path: str = "<string>", loc_rule: str = "code") -> SourceUnit:
    _check_loc_rule(loc_rule)
    lines = split_lines(text)
    try:
        tree = ast.parse(text, filename=path)
    except SyntaxError as exc:
        where = f" (line {exc.lineno})" if exc.lineno else ""
        return SourceUnit(path, text, lines, None, f"{exc.msg}{where}", loc_rule=loc_rule)
    except (ValueError, RecursionError, MemoryError) as exc:
        return SourceUnit(path, text, lines, None, f"{type(exc).__name__}: {exc}", loc_rule=loc_rule)
    return SourceUnit(path, text, lines, tree, loc_rule=loc_rule)


def parse_file(path: str | Path, display_path: str | None = None, loc_rule: str = "code") -> SourceUnit:
    """Read and parse one file. Never raises for IO or grammar problems."""
    name = display_path if display_path is not None else str(path)
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        _check_loc_rule(loc_rule)
        return SourceUnit(name, "", [], None, f"io error: {exc.strerror or exc}", loc_rule=loc_rule)
    warnings = []
    try:
        text = raw.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        text = raw.decode("utf-8-sig", errors="replace")
        warnings.append(f"non-UTF-8 bytes replaced (first at byte {exc.start})")
    unit = parse_source(text, name, loc_rule)
    unit.warnings.extend(warnings)
    return unit


_NON_CODE_TOKENS = frozenset(
    {
        tokenize.COMMENT,
        tokenize.NL,
        tokenize.NEWLINE,
        tokenize.INDENT,
        tokenize.DEDENT,
        tokenize.ENDMARKER,
        tokenize.ENCODING,
    }
)


def code_lines(unit: SourceUnit) -> frozenset[int]:
    """Line numbers that count towards LOC under the unit's rule.

    For the default rule, a line counts when it holds at least one token
    that is not a comment; lines inside multi-line strings count. Falls back
    to a plain line scan when the text cannot be tokenized.
    """
    cached = getattr(unit, "_code_lines", None)
    if cached is not None:
        return cached
    if unit.loc_rule == "physical":
        unit._code_lines = frozenset(range(1, len(unit.lines) + 1))
        return unit._code_lines
    result: set[int] = set()
    try:
        for tok in tokenize.generate_tokens(io.StringIO(unit.text).readline):
            if tok.type in _NON_CODE_TOKENS:
                continue
            if tok.type == tokenize.ERRORTOKEN and not tok.string.strip():
                continue
            result.update(range(tok.start[0], tok.end[0] + 1))
    except (tokenize.TokenError, IndentationError, SyntaxError):
        result = {
            i
            for i, line in enumerate(unit.lines, start=1)
            if line.strip() and not line.strip().startswith("#")
        }
    frozen = frozenset(i for i in result if 1 <= i <= len(unit.lines))
    unit._code_lines = frozen
    return frozen


def count_loc(unit: SourceUnit) -> int:
    return len(code_lines(unit))


def loc_between(unit: SourceUnit, first: int, last: int) -> int:
    lines = sorted(code_lines(unit))
    return bisect.bisect_right(lines, last) - bisect.bisect_left(lines, first)


_CONTAINERS = (ast.List, ast.Tuple, ast.Set, ast.Dict, ast.ListComp, ast.SetComp, ast.DictComp)
_CHAIN_NODES = (ast.Attribute, ast.Call, ast.Subscript)


def _is_container(node: ast.AST, parent: ast.AST | None) -> bool:
    if not isinstance(node, _CONTAINERS):
        return False
    # Unpacking targets and tuple indices are syntax, not constructed containers.
    if isinstance(getattr(node, "ctx", None), (ast.Store, ast.Del)):
        return False
    if isinstance(parent, ast.Subscript) and parent.slice is node:
        return False
    return True


def _continues_chain(node: ast.AST, parent: ast.AST | None) -> bool:
    if isinstance(parent, (ast.Attribute, ast.Subscript)):
        return parent.value is node
    if isinstance(parent, ast.Call):
        return parent.func is node
    return False


def _chain_links(node: ast.AST) -> int:
    links = 0
    while isinstance(node, _CHAIN_NODES):
        if isinstance(node, ast.Attribute):
            links += 1
            node = node.value
        elif isinstance(node, ast.Call):
            node = node.func
        else:
            node = node.value
    return links


def _container_depth(node: ast.AST) -> int:
    best = 0
    stack = [(node, None, 0)]
    while stack:
        current, parent, depth = stack.pop()
        if _is_container(current, parent):
            depth += 1
            best = max(best, depth)
        for child in ast.iter_child_nodes(current):
            stack.append((child, current, depth))
    return best


def _param_names(args: ast.arguments) -> list[str]:
    names = [a.arg for a in args.posonlyargs + args.args]
    if args.vararg:
        names.append("*" + args.vararg.arg)
    names.extend(a.arg for a in args.kwonlyargs)
    if args.kwarg:
        names.append("**" + args.kwarg.arg)
    return names


class _Extractor:
    def __init__(self, unit: SourceUnit):
        self.unit = unit
        self.entities: list[CodeEntity] = []

    def _add(self, kind, node, name=None, parent=None, **detail) -> CodeEntity:
        ent = CodeEntity(kind, self.unit.span_of(node), name, parent, node, detail)
        self.entities.append(ent)
        return ent

    def run(self, tree: ast.Module) -> None:
        # Explicit preorder stack: long attribute chains nest deeper than the recursion limit.
        stack = [(child, tree, None, 0, False) for child in reversed(list(ast.iter_child_nodes(tree)))]
        while stack:
            node, parent_node, owner, def_depth, in_container = stack.pop()
            pending = []
            if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef, ast.ClassDef)):
                decorators = node.decorator_list
                pending.extend((dec, node, owner, def_depth, False) for dec in decorators)
                if isinstance(node, ast.ClassDef):
                    ent = self._add(EntityKind.CLASS, node, node.name, owner)
                    inner_depth = def_depth
                else:
                    inner_depth = def_depth + 1
                    ent = self._add(
                        EntityKind.FUNCTION,
                        node,
                        node.name,
                        owner,
                        def_depth=inner_depth,
                        params=_param_names(node.args),
                        in_class=owner is not None and owner.kind is EntityKind.CLASS,
                    )
                pending.extend(
                    (child, node, ent, inner_depth, False)
                    for child in ast.iter_child_nodes(node)
                    if not any(child is dec for dec in decorators)
                )
                stack.extend(reversed(pending))
                continue

            if isinstance(node, ast.Lambda):
                owner = self._add(
                    EntityKind.LAMBDA,
                    node,
                    "<lambda>",
                    owner,
                    def_depth=def_depth + 1,
                    params=_param_names(node.args),
                    in_class=False,
                )
            elif isinstance(node, ast.IfExp):
                self._add(EntityKind.TERNARY, node, None, owner)
            elif isinstance(node, _CHAIN_NODES) and not _continues_chain(node, parent_node):
                links = _chain_links(node)
                if links:
                    self._add(EntityKind.CHAIN, node, None, owner, links=links)

            if not in_container and _is_container(node, parent_node):
                self._add(EntityKind.CONTAINER, node, None, owner, depth=_container_depth(node))
                in_container = True

            pending.extend((child, node, owner, def_depth, in_container) for child in ast.iter_child_nodes(node))
            stack.extend(reversed(pending))


def extract_entities(unit: SourceUnit) -> list[CodeEntity]:
    """All measurable entities of a parsed unit, in document order.

    Only the outermost container of a nested display and only the maximal
    access chain are emitted; inner parts show up in their detail values.
    """
    if unit.tree is None:
        return []
    cached = getattr(unit, "_entities", None)
    if cached is not None:
        return list(cached)
    ex = _Extractor(unit)
    ex.run(unit.tree)
    # Stable sort keeps enclosing entities ahead of children that start at the same spot.
    entities = sorted(ex.entities, key=lambda e: (e.span.start_line, e.span.start_col))
    unit._entities = entities
    return list(entities)
