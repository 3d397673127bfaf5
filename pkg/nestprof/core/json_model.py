# nestprof/core/json_model.py
# Documents, atomic values and the restricted JSONPath used on both sides of every dependency.
from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from pathlib import Path as FilePath
from typing import Any, BinaryIO, Callable, Dict, FrozenSet, Iterable, Iterator, List, NamedTuple, Optional, Set, TextIO, Tuple, Union

from jsonpath_ng.jsonpath import Child, DatumInContext, Fields, JSONPath, Root, Slice
from jsonpath_ng.jsonpath import Index as JsonIndex

from nestprof.exceptions import InputError, ParseError, PathSyntaxError, StructuralError
from nestprof.models.schemas import InputFormat

logger = logging.getLogger(__name__)

# dict | list | str | int | float | bool | None, as produced by the json module
JsonValue = Any


class ValueTag(str, Enum):
    BOOLEAN = "boolean"
    NUMBER = "number"
    STRING = "string"


class Atomic(NamedTuple):
    """A typed leaf value. Numbers are normalised so 1 and 1.0 compare equal."""

    tag: ValueTag
    content: Union[bool, int, float, str]

    def to_json(self) -> Union[bool, int, float, str]:
        return self.content


ValueSet = FrozenSet[Atomic]


def normalize_number(number: Union[int, float]) -> Union[int, float]:
    if isinstance(number, float) and number.is_integer():
        return int(number)
    return number


def to_atomic(value: JsonValue) -> Optional[Atomic]:
    """Wrap a parsed JSON leaf. Null and containers are not atomic."""
    if value is None or isinstance(value, (dict, list)):
        return None
    # bool before int: bool is an int subclass
    if isinstance(value, bool):
        return Atomic(ValueTag.BOOLEAN, value)
    if isinstance(value, (int, float)):
        return Atomic(ValueTag.NUMBER, normalize_number(value))
    if isinstance(value, str):
        return Atomic(ValueTag.STRING, value)
    raise TypeError(f"not a JSON value: {value!r}")


def is_empty(value: JsonValue) -> bool:
    return value is None or (isinstance(value, (dict, list)) and not value)


# --- jsonpath_ng nodes ---
# Array steps match arrays only: a stock Slice wraps scalars and objects into a
# one-element list, and a stock Index subscripts strings and objects.


class ExactField(Fields):
    """A single object key, taken literally even when it is ``*``."""

    def reified_fields(self, datum):
        return self.fields


class ArrayElements(Slice):
    def find(self, datum):
        datum = DatumInContext.wrap(datum)
        return super().find(datum) if isinstance(datum.value, list) else []


class ArrayPosition(JsonIndex):
    def find(self, datum):
        datum = DatumInContext.wrap(datum)
        return super().find(datum) if isinstance(datum.value, list) else []


# --- Paths ---

_QUOTED_CHARS = frozenset(".[]$'\\")


@dataclass(frozen=True)
class Key:
    name: str

    def render(self) -> str:
        if self.name and not any(ch in _QUOTED_CHARS for ch in self.name):
            return f".{self.name}"
        escaped = self.name.replace("\\", "\\\\").replace("'", "\\'")
        return f"['{escaped}']"

    def expression(self) -> JSONPath:
        return ExactField(self.name)


@dataclass(frozen=True)
class Wildcard:
    def render(self) -> str:
        return "[*]"

    def expression(self) -> JSONPath:
        return ArrayElements()


@dataclass(frozen=True)
class Index:
    position: int

    def render(self) -> str:
        return f"[{self.position}]"

    def expression(self) -> JSONPath:
        return ArrayPosition(self.position)


Step = Union[Key, Wildcard, Index]
WILDCARD = Wildcard()


@dataclass(frozen=True)
class Path:
    steps: Tuple[Step, ...] = ()

    @classmethod
    def parse(cls, text: str) -> "Path":
        return parse_path(text)

    def key(self, name: str) -> "Path":
        return Path(self.steps + (Key(name),))

    def wildcard(self) -> "Path":
        return Path(self.steps + (WILDCARD,))

    def index(self, position: int) -> "Path":
        return Path(self.steps + (Index(position),))

    @property
    def is_mining_path(self) -> bool:
        # miners only ever produce key and wildcard steps
        return not any(isinstance(step, Index) for step in self.steps)

    def generalized(self) -> "Path":
        """The same path with every array position widened to ``[*]``."""
        if self.is_mining_path:
            return self
        return Path(tuple(WILDCARD if isinstance(step, Index) else step for step in self.steps))

    @cached_property
    def expression(self) -> JSONPath:
        """The path as a jsonpath_ng expression tree rooted at ``$``."""
        expression: JSONPath = Root()
        for step in self.steps:
            expression = Child(expression, step.expression())
        return expression

    @cached_property
    def text(self) -> str:
        return "$" + "".join(step.render() for step in self.steps)

    def __str__(self) -> str:
        return self.text

    def __repr__(self) -> str:
        return f"Path({self.text!r})"

    def __lt__(self, other: "Path") -> bool:
        return self.text < other.text


ROOT = Path()


def parse_path(text: str) -> Path:
    text = text.strip()
    if not text.startswith("$"):
        raise PathSyntaxError(text, 0, "a path must start with '$'")

    steps: List[Step] = []
    pos, length = 1, len(text)
    while pos < length:
        char = text[pos]
        if char == ".":
            end = pos + 1
            while end < length and text[end] not in ".[":
                end += 1
            name = text[pos + 1:end]
            if not name:
                raise PathSyntaxError(text, pos, "empty key name")
            steps.append(Key(name))
            pos = end
        elif char == "[":
            if text.startswith("[*]", pos):
                steps.append(WILDCARD)
                pos += 3
            elif text.startswith("['", pos) or text.startswith('["', pos):
                name, pos = _read_quoted(text, pos)
                steps.append(Key(name))
            else:
                close = text.find("]", pos)
                if close < 0:
                    raise PathSyntaxError(text, pos, "unterminated '['")
                digits = text[pos + 1:close]
                if not (digits.isascii() and digits.isdigit()):
                    raise PathSyntaxError(text, pos, "expected '*', a quoted key or an array index")
                steps.append(Index(int(digits)))
                pos = close + 1
        else:
            raise PathSyntaxError(text, pos, f"unexpected character {char!r}")
    return Path(tuple(steps))


def _read_quoted(text: str, start: int) -> Tuple[str, int]:
    quote = text[start + 1]
    chars: List[str] = []
    pos = start + 2
    while pos < len(text) and text[pos] != quote:
        if text[pos] == "\\" and pos + 1 < len(text):
            chars.append(text[pos + 1])
            pos += 2
        else:
            chars.append(text[pos])
            pos += 1
    if pos + 1 >= len(text) or text[pos + 1] != "]":
        raise PathSyntaxError(text, start, "unterminated quoted key")
    return "".join(chars), pos + 2


# --- Documents ---

@dataclass(frozen=True)
class Document:
    id: int
    root: Dict[str, JsonValue]


@dataclass(frozen=True)
class DocumentCollection:
    documents: Tuple[Document, ...]

    @classmethod
    def from_values(cls, values: Iterable[JsonValue]) -> "DocumentCollection":
        documents = []
        for ordinal, value in enumerate(values, start=1):
            if not isinstance(value, dict):
                raise StructuralError(
                    f"document {ordinal}: top-level value must be an object, got {type(value).__name__}"
                )
            documents.append(Document(id=ordinal, root=value))
        return cls(tuple(documents))

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self) -> Iterator[Document]:
        return iter(self.documents)

    def __getitem__(self, doc_id: int) -> Document:
        # ids are 1-based and contiguous
        return self.documents[doc_id - 1]

    def chunks(self, count: int) -> List[Tuple[Document, ...]]:
        """Split into at most ``count`` contiguous, order-preserving slices."""
        count = max(1, min(count, len(self.documents)))
        size, extra = divmod(len(self.documents), count)
        slices, start = [], 0
        for i in range(count):
            end = start + size + (1 if i < extra else 0)
            slices.append(self.documents[start:end])
            start = end
        return slices


# --- Parsing ---

class _DuplicateKey(ValueError):
    def __init__(self, key: str):
        self.key = key
        super().__init__(key)


def _unique_object(pairs: List[Tuple[str, JsonValue]]) -> Dict[str, JsonValue]:
    obj: Dict[str, JsonValue] = {}
    for key, value in pairs:
        if key in obj:
            raise _DuplicateKey(key)
        obj[key] = value
    return obj


def _reject_constant(name: str) -> None:
    raise ValueError(f"{name} is not valid JSON")


_DECODER = json.JSONDecoder(object_pairs_hook=_unique_object, parse_constant=_reject_constant)
_BLANK = re.compile(r"[ \t\r\n]*")


def _line_of(text: str, pos: int) -> int:
    return text.count("\n", 0, pos) + 1


def _decode_json_lines(text: str) -> List[JsonValue]:
    values: List[JsonValue] = []
    pos = _BLANK.match(text, 0).end()
    while pos < len(text):
        ordinal = len(values) + 1
        try:
            value, pos = _DECODER.raw_decode(text, pos)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, document=ordinal, line=exc.lineno) from exc
        except _DuplicateKey as exc:
            raise StructuralError(
                f"document {ordinal}, line {_line_of(text, pos)}: duplicate key {exc.key!r}"
            ) from exc
        except ValueError as exc:
            raise ParseError(str(exc), document=ordinal, line=_line_of(text, pos)) from exc
        values.append(value)
        pos = _BLANK.match(text, pos).end()
    return values


def _decode_json_array(text: str) -> List[JsonValue]:
    try:
        value = _DECODER.decode(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from exc
    except _DuplicateKey as exc:
        raise StructuralError(f"duplicate key {exc.key!r}") from exc
    except ValueError as exc:
        raise ParseError(str(exc)) from exc
    if not isinstance(value, list):
        raise StructuralError(f"json-array input must be an array, got {type(value).__name__}")
    return value


def parse_collection(source: Union[bytes, str, BinaryIO], format: Union[InputFormat, str]) -> DocumentCollection:
    """Parse a UTF-8 JSON Lines or JSON array stream into a collection with ids 1..n."""
    fmt = InputFormat(format)
    raw = source if isinstance(source, (bytes, str)) else source.read()
    if isinstance(raw, bytes):
        try:
            text = raw.decode("utf-8-sig")
        except UnicodeDecodeError as exc:
            raise InputError(f"input is not valid UTF-8: {exc}") from exc
    else:
        text = raw

    values = _decode_json_lines(text) if fmt is InputFormat.JSON_LINES else _decode_json_array(text)
    collection = DocumentCollection.from_values(values)
    logger.info(f"Parsed {len(collection)} documents ({fmt.value})")
    return collection


def load_collection(file_path: Union[str, FilePath], format: Union[InputFormat, str]) -> DocumentCollection:
    with open(file_path, "rb") as f:
        return parse_collection(f, format)


def write_json_lines(collection: DocumentCollection, stream: TextIO) -> None:
    for document in collection:
        stream.write(json.dumps(document.root, ensure_ascii=False, separators=(",", ":")))
        stream.write("\n")


# --- Evaluation and traversal ---

def evaluate_path(doc: Document, path: Path) -> ValueSet:
    """All atomic values reachable from the document root along ``path``.

    Missing keys, out-of-range indices and nulls contribute nothing; a wildcard
    only fans out over arrays.
    """
    matches = path.expression.find(doc.root)
    return frozenset(atom for atom in (to_atomic(match.value) for match in matches) if atom is not None)


LeafCallback = Callable[[Path, Atomic], None]


def walk_leaves(path: Path, value: JsonValue, emit: LeafCallback) -> None:
    """Depth-first traversal emitting every non-null atomic leaf with its path."""
    if isinstance(value, dict):
        for key, child in value.items():
            walk_leaves(path.key(key), child, emit)
    elif isinstance(value, list):
        element_path = path.wildcard()
        for element in value:
            walk_leaves(element_path, element, emit)
    elif value is not None:
        emit(path, to_atomic(value))


def iter_leaves(doc: Document) -> Iterator[Tuple[Path, Atomic]]:
    leaves: List[Tuple[Path, Atomic]] = []
    walk_leaves(ROOT, doc.root, lambda path, atom: leaves.append((path, atom)))
    return iter(leaves)


def enumerate_paths(collection: DocumentCollection) -> Set[Path]:
    paths: Set[Path] = set()
    for doc in collection:
        walk_leaves(ROOT, doc.root, lambda path, _atom: paths.add(path))
    return paths
