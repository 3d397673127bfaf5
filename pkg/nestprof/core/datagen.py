# nestprof/core/datagen.py
"""
Seeded synthetic collections for scaling and correctness runs.

Every document holds ``n_scalar_keys`` scalars (``s0``, ``s1``, ... nested
under ``nesting_depth - 1`` wrapper objects) and ``n_array_keys`` independent
top-level arrays (``a0``, ``a1``, ...) of ``array_len`` integers, so static
unrolling expands each document into ``array_len ** n_array_keys`` rows.

Unplanted keys draw from ``[0, domain_size)``. Planted dependencies take
their values from private integer blocks above the domain, which keeps them
clear of accidental matches:

* inclusion ``lhs ⊆ rhs``: rhs values are unique and lhs reuses a shuffle of
  them; each violating document swaps one lhs value for a fresh one.
* functional ``lhs -> rhs``: documents form groups of ``FD_GROUP_SIZE`` that
  share lhs and rhs values; each violator sits in its own group and gets
  fresh rhs values, so exactly one document per violation has to go.
"""
import json
import logging
from fractions import Fraction
from math import ceil
from pathlib import Path as FilePath
from typing import Dict, List, Union

import numpy as np
import yaml
from pydantic import ValidationError

from nestprof.core.json_model import DocumentCollection, Path
from nestprof.exceptions import GenerationError, UsageError
from nestprof.models.schemas import DependencyKind, GenSpec, PlantedDependency

logger = logging.getLogger(__name__)

FD_GROUP_SIZE = 4


class _ValueBlocks:
    """Hands out disjoint runs of integers above the random domain."""

    def __init__(self, start: int):
        self.next = start

    def take(self, count: int) -> np.ndarray:
        block = np.arange(self.next, self.next + count, dtype=np.int64)
        self.next += count
        return block


def violation_count(spec: GenSpec) -> int:
    return ceil(Fraction(repr(spec.violation_rate)) * spec.n_docs)


def planted_paths(spec: GenSpec, plant: PlantedDependency) -> List[Path]:
    return [Path.parse(spec.path_of(plant.lhs)), Path.parse(spec.path_of(plant.rhs))]


def _check_plants(spec: GenSpec) -> None:
    keys = set(spec.scalar_keys) | set(spec.array_keys)
    claimed: Dict[str, int] = {}
    for number, plant in enumerate(spec.planted):
        for key in (plant.lhs, plant.rhs):
            if key not in keys:
                raise GenerationError(f"planted dependency {number} names unknown key {key!r}")
            if key in claimed:
                raise GenerationError(
                    f"key {key!r} is constrained by planted dependencies {claimed[key]} and {number}"
                )
            claimed[key] = number


def _plant_inclusion(
    values: Dict[str, np.ndarray], plant: PlantedDependency, rng: np.random.Generator, blocks: _ValueBlocks, violators: int
) -> None:
    rhs_shape, lhs_shape = values[plant.rhs].shape, values[plant.lhs].shape
    pool = blocks.take(int(np.prod(rhs_shape)))
    values[plant.rhs] = pool.reshape(rhs_shape)
    slots = int(np.prod(lhs_shape))
    shuffled = rng.permutation(pool)
    lhs = np.resize(shuffled, slots).reshape(lhs_shape)
    if violators:
        rows = rng.choice(lhs_shape[0], size=violators, replace=False)
        fresh = blocks.take(violators)
        if lhs.ndim == 1:
            lhs[rows] = fresh
        else:
            lhs[rows, 0] = fresh
    values[plant.lhs] = lhs


def _plant_functional(
    values: Dict[str, np.ndarray], plant: PlantedDependency, rng: np.random.Generator, blocks: _ValueBlocks, violators: int
) -> None:
    n_docs = values[plant.lhs].shape[0]
    groups = np.arange(n_docs) // FD_GROUP_SIZE
    n_groups = int(groups[-1]) + 1
    # a violator needs a partner to disagree with
    eligible = np.flatnonzero(np.bincount(groups) >= 2)
    if violators > eligible.size:
        raise GenerationError(
            f"violation rate too high for planted dependency {plant.lhs} -> {plant.rhs}: "
            f"{violators} violators but only {eligible.size} groups with two or more documents"
        )
    rng.shuffle(groups)

    for key in (plant.lhs, plant.rhs):
        shape = values[key].shape
        width = shape[1] if len(shape) > 1 else 1
        per_group = blocks.take(n_groups * width).reshape(n_groups, width)
        assigned = per_group[groups]
        values[key] = assigned if len(shape) > 1 else assigned[:, 0]

    if violators:
        chosen = rng.choice(eligible, size=violators, replace=False)
        rhs = values[plant.rhs]
        width = rhs.shape[1] if rhs.ndim > 1 else 1
        for group in sorted(int(g) for g in chosen):
            doc = int(np.flatnonzero(groups == group)[0])
            fresh = blocks.take(width)
            if rhs.ndim > 1:
                rhs[doc] = fresh
            else:
                rhs[doc] = fresh[0]


def generate(spec: GenSpec) -> DocumentCollection:
    if spec.n_scalar_keys + spec.n_array_keys == 0:
        raise GenerationError("a generated document needs at least one scalar or array key")
    _check_plants(spec)

    rng = np.random.default_rng(spec.seed)
    values: Dict[str, np.ndarray] = {}
    for key in spec.scalar_keys:
        values[key] = rng.integers(0, spec.domain_size, size=spec.n_docs)
    for key in spec.array_keys:
        values[key] = rng.integers(0, spec.domain_size, size=(spec.n_docs, spec.array_len))

    blocks = _ValueBlocks(spec.domain_size)
    violators = violation_count(spec)
    for plant in spec.planted:
        if plant.kind is DependencyKind.IND:
            _plant_inclusion(values, plant, rng, blocks, violators)
        else:
            _plant_functional(values, plant, rng, blocks, violators)

    scalars = {key: values[key].tolist() for key in spec.scalar_keys}
    arrays = {key: values[key].tolist() for key in spec.array_keys}
    documents = []
    for n in range(spec.n_docs):
        leaf = {key: column[n] for key, column in scalars.items()}
        for name in reversed(spec.wrapper_keys):
            leaf = {name: leaf}
        doc = leaf if spec.n_scalar_keys else {}
        for key, column in arrays.items():
            doc[key] = column[n]
        documents.append(doc)

    collection = DocumentCollection.from_values(documents)
    logger.info(
        f"Generated {spec.n_docs} documents (seed {spec.seed}, expansion factor {spec.expected_expansion_factor}, "
        f"{len(spec.planted)} planted, {violators} violators each)"
    )
    return collection


def load_gen_spec(file_path: Union[str, FilePath]) -> GenSpec:
    """Read a GenSpec from a YAML (.yaml/.yml) or JSON file."""
    file_path = FilePath(file_path)
    try:
        text = file_path.read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read generator config {file_path}: {exc}") from exc
    try:
        raw = yaml.safe_load(text) if file_path.suffix in (".yaml", ".yml") else json.loads(text)
    except (yaml.YAMLError, json.JSONDecodeError) as exc:
        raise UsageError(f"generator config {file_path} is not valid: {exc}") from exc
    try:
        return GenSpec.model_validate(raw or {})
    except ValidationError as exc:
        raise UsageError(f"generator config {file_path}: {exc}") from exc
