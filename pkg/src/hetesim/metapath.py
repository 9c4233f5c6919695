"""Meta-paths (relevance paths) over a schema.

Two spellings are accepted by :func:`parse_path`:

* type names joined by ``-``, e.g. ``"A-P-V-C"``; legal only when exactly one
  relation (forward or inverse) links each consecutive type pair;
* relation ids joined by ``.``, each optionally suffixed ``~`` for the
  inverse, e.g. ``"AP.PV.VC"`` or ``"AP.AP~"``.  ``I(T)`` alone is the
  self-relation of type ``T``.

``str(path)`` prints the second form, which always parses back.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

from .exceptions import AmbiguousRelation, NotConcatenable, ParseError, SchemaError
from .graph import Schema, Step

__all__ = [
    "MetaPath",
    "MiddleType",
    "MiddleEdge",
    "DecomposedPath",
    "parse_path",
    "reverse",
    "is_symmetric",
    "concatenate",
    "repeat",
    "decompose",
]


@dataclass(frozen=True)
class MetaPath:
    steps: tuple
    types: tuple
    schema: Schema = field(compare=False, repr=False)

    @classmethod
    def from_steps(cls, steps: Sequence[Step], schema: Schema) -> "MetaPath":
        steps = tuple(steps)
        if not steps:
            raise ParseError("a path needs at least one relation")
        if any(s.is_self and s.half is None for s in steps) and len(steps) > 1:
            raise ParseError("the self-relation I(...) must be the whole path")
        try:
            ends = [s.endpoints(schema) for s in steps]
        except SchemaError as exc:
            raise ParseError(str(exc)) from None
        types = [ends[0][0]]
        for step, (src, dst) in zip(steps, ends):
            if src != types[-1]:
                raise NotConcatenable(
                    f"step {step.key} starts at {src!r} but the path is at {types[-1]!r}"
                )
            types.append(dst)
        return cls(steps, tuple(types), schema)

    @property
    def length(self) -> int:
        return len(self.steps)

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def source_type(self) -> str:
        return self.types[0]

    @property
    def target_type(self) -> str:
        return self.types[-1]

    @property
    def is_self_relation(self) -> bool:
        return len(self.steps) == 1 and self.steps[0].is_self and self.steps[0].half is None

    def type_string(self) -> str:
        return "-".join(self.types)

    def __str__(self) -> str:
        return ".".join(s.key for s in self.steps)


@dataclass(frozen=True)
class MiddleType:
    type_name: str


@dataclass(frozen=True)
class MiddleEdge:
    step: Step

    @property
    def type_name(self) -> str:
        return f"E[{self.step.relation if not self.step.is_self else f'I({self.step.self_type})'}]"


@dataclass(frozen=True)
class DecomposedPath:
    left: MetaPath
    right: MetaPath
    middle: Union[MiddleType, MiddleEdge]


def parse_path(text: str, schema: Schema) -> MetaPath:
    """Parse a path string against ``schema``.

    Raises
    ------
    ParseError
        Malformed text or unknown names.
    AmbiguousRelation
        Type-name form used where two relations link the same type pair.
    NotConcatenable
        Consecutive steps do not share a type.
    """
    if isinstance(text, MetaPath):
        return text
    text = text.strip()
    if not text:
        raise ParseError("empty path")

    if "-" in text:
        names = text.split("-")
        for name in names:
            if not name:
                raise ParseError(f"empty type name in {text!r}")
            if not schema.has_type(name):
                raise ParseError(f"unknown type {name!r} in {text!r}")
        if len(names) < 2:
            raise ParseError(f"a path needs at least two types: {text!r}")
        steps = []
        for a, b in zip(names, names[1:]):
            found = schema.relations_between(a, b)
            if not found:
                raise NotConcatenable(f"no relation links {a!r} to {b!r}")
            if len(found) > 1:
                options = ", ".join(s.key for s in found)
                raise AmbiguousRelation(
                    f"{a}-{b} is ambiguous ({options}); use the relation-id form"
                )
            steps.append(found[0])
        return MetaPath.from_steps(steps, schema)

    steps = []
    tokens = text.split(".")
    for tok in tokens:
        tok = tok.strip()
        if not tok:
            raise ParseError(f"empty step in {text!r}")
        if tok.startswith("I(") and tok.endswith(")"):
            name = tok[2:-1]
            if not schema.has_type(name):
                raise ParseError(f"unknown type {name!r} in {tok!r}")
            steps.append(Step(self_type=name))
            continue
        inverse = tok.endswith("~")
        rel_id = tok[:-1] if inverse else tok
        if not rel_id or "~" in rel_id or "(" in rel_id or ")" in rel_id:
            raise ParseError(f"malformed step {tok!r}")
        if rel_id not in {r.id for r in schema.relations}:
            raise ParseError(f"unknown relation {rel_id!r} in {text!r}")
        steps.append(Step(rel_id, inverse=inverse))
    return MetaPath.from_steps(steps, schema)


def reverse(path: MetaPath) -> MetaPath:
    """The inverse path: steps reversed, each walked the other way."""
    steps = tuple(s.reversed() for s in reversed(path.steps))
    return MetaPath(steps, tuple(reversed(path.types)), path.schema)


def is_symmetric(path: MetaPath) -> bool:
    return path == reverse(path)


def concatenate(p1: MetaPath, p2: MetaPath) -> MetaPath:
    if p1.target_type != p2.source_type:
        raise NotConcatenable(
            f"{p1} ends at {p1.target_type!r} but {p2} starts at {p2.source_type!r}"
        )
    # I is the identity under composition.
    if p1.is_self_relation:
        return p2
    if p2.is_self_relation:
        return p1
    return MetaPath.from_steps(p1.steps + p2.steps, p1.schema)


def repeat(path: MetaPath, k: int) -> MetaPath:
    """``path`` concatenated with itself ``k`` times (``k >= 1``)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    out = path
    for _ in range(k - 1):
        out = concatenate(out, path)
    return out


def decompose(path: MetaPath) -> DecomposedPath:
    """Split ``path`` into two equal-length halves meeting in the middle.

    Even paths meet at the middle node type.  Odd paths split their middle
    relation through its edge objects, so both halves end in the
    edge-object space of that relation.
    """
    l = path.length
    if l % 2 == 0:
        h = l // 2
        left = MetaPath(path.steps[:h], path.types[: h + 1], path.schema)
        right = MetaPath(path.steps[h:], path.types[h:], path.schema)
        return DecomposedPath(left, right, MiddleType(path.types[h]))
    m = (l - 1) // 2
    mid = path.steps[m]
    lo, ro = mid.halves()
    left = MetaPath.from_steps(path.steps[:m] + (lo,), path.schema)
    right = MetaPath.from_steps((ro,) + path.steps[m + 1 :], path.schema)
    return DecomposedPath(left, right, MiddleEdge(mid))
