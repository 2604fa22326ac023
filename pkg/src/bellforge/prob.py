"""Exact finite conditional probability tables.

A :class:`ConditionalTable` stores ``P(targets | givens)`` as a dense numpy
array whose leading axes run over the given variables and trailing axes over
the target variables, each in the declared support order of its
:class:`VariableSpec`.  Tables are immutable once built.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import (
    IncompleteError,
    NormalizationError,
    RangeError,
    ShapeMismatch,
    UnknownVariable,
)

NORM_TOL = 1e-12
# conditioning events below this probability are treated as undefined
ZERO_EVENT = 1e-12
DEFAULT_ANGLE_GRID = 2**20


@dataclass(frozen=True)
class VariableSpec:
    """A named discrete variable with an ordered, finite support."""

    name: str
    support: tuple
    _index: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        support = tuple(self.support)
        if not support:
            raise ValueError(f"variable {self.name!r} has an empty support")
        index = {}
        for i, v in enumerate(support):
            if v in index:
                raise ValueError(f"variable {self.name!r}: duplicate support value {v!r}")
            index[v] = i
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "_index", index)

    @property
    def size(self) -> int:
        return len(self.support)

    def index(self, value) -> int:
        try:
            return self._index[value]
        except (KeyError, TypeError):
            raise UnknownVariable(f"{value!r} is not in the support of {self.name!r}") from None

    def __contains__(self, value) -> bool:
        try:
            return value in self._index
        except TypeError:
            return False


def spin(name: str) -> VariableSpec:
    """A signed-unit outcome variable with support (+1, -1)."""
    return VariableSpec(name, (1, -1))


def quantize_angle(theta: float, grid: int = DEFAULT_ANGLE_GRID) -> float:
    """Snap an angle onto the grid of ``grid`` equally spaced points in [0, 2π)."""
    k = round(theta * grid / (2 * math.pi)) % grid
    return 2 * math.pi * k / grid


def _assignments(variables: Sequence[VariableSpec]) -> Iterator[tuple]:
    return itertools.product(*(v.support for v in variables))


class ConditionalTable:
    """``P(targets | givens)`` over finite supports.

    Use :func:`make_table` to build a validated table; the constructor itself
    trusts its input.
    """

    __slots__ = ("given_vars", "target_vars", "_p")

    def __init__(self, given_vars: Sequence[VariableSpec], target_vars: Sequence[VariableSpec], probs):
        self.given_vars = tuple(given_vars)
        self.target_vars = tuple(target_vars)
        names = [v.name for v in self.given_vars + self.target_vars]
        if len(set(names)) != len(names):
            raise ShapeMismatch(f"duplicate variable names in {names}")
        shape = tuple(v.size for v in self.given_vars + self.target_vars)
        arr = np.array(probs, dtype=float)
        if arr.shape != shape:
            try:
                arr = arr.reshape(shape)
            except ValueError:
                raise ShapeMismatch(f"probability array of shape {arr.shape} does not fit {shape}") from None
        arr.flags.writeable = False
        self._p = arr

    # -- introspection -------------------------------------------------
    @property
    def probs(self) -> np.ndarray:
        """Read-only array, given axes first, then target axes."""
        return self._p

    @property
    def given_names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.given_vars)

    @property
    def target_names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.target_vars)

    @property
    def given_shape(self) -> tuple[int, ...]:
        return tuple(v.size for v in self.given_vars)

    @property
    def target_shape(self) -> tuple[int, ...]:
        return tuple(v.size for v in self.target_vars)

    def var(self, name: str) -> VariableSpec:
        for v in self.given_vars + self.target_vars:
            if v.name == name:
                return v
        raise UnknownVariable(f"table has no variable {name!r}")

    def given_assignments(self) -> Iterator[tuple]:
        return _assignments(self.given_vars)

    def target_assignments(self) -> Iterator[tuple]:
        return _assignments(self.target_vars)

    def _given_index(self, given) -> tuple[int, ...]:
        if isinstance(given, Mapping):
            try:
                values = [given[v.name] for v in self.given_vars]
            except KeyError as exc:
                raise UnknownVariable(f"assignment is missing given variable {exc.args[0]!r}") from None
        else:
            values = tuple(given) if self.given_vars else ()
            if len(values) != len(self.given_vars):
                raise ShapeMismatch(f"expected {len(self.given_vars)} given values, got {len(values)}")
        return tuple(v.index(val) for v, val in zip(self.given_vars, values))

    def _target_index(self, target) -> tuple[int, ...]:
        if isinstance(target, Mapping):
            values = [target[v.name] for v in self.target_vars]
        else:
            values = tuple(target)
            if len(values) != len(self.target_vars):
                raise ShapeMismatch(f"expected {len(self.target_vars)} target values, got {len(values)}")
        return tuple(v.index(val) for v, val in zip(self.target_vars, values))

    def row(self, given=()) -> np.ndarray:
        """Distribution over target assignments for one given assignment."""
        return self._p[self._given_index(given)]

    def prob(self, target, given=()) -> float:
        return float(self._p[self._given_index(given) + self._target_index(target)])

    def entries(self) -> dict[tuple[tuple, tuple], float]:
        """``{(given_assignment, target_assignment): p}`` in declared order."""
        out = {}
        for g in self.given_assignments():
            gi = self._given_index(g)
            for t in self.target_assignments():
                out[(g, t)] = float(self._p[gi + self._target_index(t)])
        return out

    def residuals(self) -> np.ndarray:
        """``|Σ_targets p - 1|`` for every given assignment (given-shaped array)."""
        k = len(self.given_vars)
        sums = self._p.sum(axis=tuple(range(k, self._p.ndim)))
        return np.abs(sums - 1.0)

    # -- transformations -----------------------------------------------
    def marginalize(self, drop: Iterable[str]) -> "ConditionalTable":
        return marginalize(self, drop)

    def condition(self, on: Sequence[str], threshold: float = ZERO_EVENT):
        return condition(self, on, threshold)

    def expand(self, given_vars: Sequence[VariableSpec]) -> "ConditionalTable":
        return expand(self, given_vars)

    def reorder(self, given: Sequence[str] | None = None, target: Sequence[str] | None = None) -> "ConditionalTable":
        """Permute the given and/or target axes into the named order."""
        given = list(self.given_names if given is None else given)
        target = list(self.target_names if target is None else target)
        if sorted(given) != sorted(self.given_names) or sorted(target) != sorted(self.target_names):
            raise ShapeMismatch("reorder must be a permutation of the existing variables")
        names = list(self.given_names + self.target_names)
        perm = [names.index(n) for n in given + target]
        return ConditionalTable(
            [self.var(n) for n in given], [self.var(n) for n in target], self._p.transpose(perm)
        )

    def rename(self, mapping: Mapping[str, str]) -> "ConditionalTable":
        def re(v):
            return VariableSpec(mapping.get(v.name, v.name), v.support)
        return ConditionalTable([re(v) for v in self.given_vars], [re(v) for v in self.target_vars], self._p)

    def __repr__(self):
        lhs = ",".join(self.target_names)
        rhs = ",".join(self.given_names)
        return f"ConditionalTable(P({lhs}|{rhs}))" if rhs else f"ConditionalTable(P({lhs}))"


def make_table(
    given_vars: Sequence[VariableSpec],
    target_vars: Sequence[VariableSpec],
    entries: Any,
    *,
    strict: bool = True,
) -> ConditionalTable:
    """Build a validated conditional table.

    ``entries`` is either a mapping ``{(given_assignment, target_assignment): p}``
    covering every pair, or an array of shape ``given_shape + target_shape``.
    Entries are stored as given; rows whose sums are off by more than
    ``NORM_TOL`` are rejected rather than renormalized.  ``strict=False`` skips
    all validation (used to represent deliberately broken models).
    """
    given_vars = tuple(given_vars)
    target_vars = tuple(target_vars)
    shape = tuple(v.size for v in given_vars + target_vars)
    if isinstance(entries, Mapping):
        arr = np.full(shape, np.nan)
        for key, p in entries.items():
            try:
                g, t = key
                idx = tuple(v.index(x) for v, x in zip(given_vars, g)) + tuple(
                    v.index(x) for v, x in zip(target_vars, t)
                )
            except (UnknownVariable, TypeError, ValueError):
                raise IncompleteError(f"entry key {key!r} is not a valid assignment pair") from None
            if len(idx) != len(shape):
                raise IncompleteError(f"entry key {key!r} has the wrong arity")
            arr[idx] = float(p)
        if strict and np.isnan(arr).any():
            missing = next(zip(*np.nonzero(np.isnan(arr))))
            raise IncompleteError(f"no entry for assignment index {tuple(int(i) for i in missing)}")
    else:
        arr = np.asarray(entries, dtype=float)
        if arr.size != math.prod(shape):
            raise IncompleteError(f"{arr.size} entries supplied, {math.prod(shape)} required")
        arr = arr.reshape(shape)
    table = ConditionalTable(given_vars, target_vars, arr)
    if strict:
        p = table.probs
        if not np.all(np.isfinite(p)):
            raise RangeError("non-finite probability entry")
        # slack of NORM_TOL absorbs rounding in computed entries
        if (p < -NORM_TOL).any() or (p > 1 + NORM_TOL).any():
            raise RangeError(f"entry outside [0, 1]: min {p.min()!r}, max {p.max()!r}")
        res = table.residuals()
        if (res > NORM_TOL).any():
            worst = np.unravel_index(np.argmax(res), res.shape)
            g = tuple(v.support[i] for v, i in zip(given_vars, worst))
            raise NormalizationError(f"row {g!r} sums to {1 + float(np.max(res)):.17g} (residual {float(np.max(res)):.3g})")
    return table


def _axes(table: ConditionalTable, names: Iterable[str]) -> list[int]:
    all_names = list(table.given_names + table.target_names)
    out = []
    for n in names:
        if n not in table.target_names:
            raise UnknownVariable(f"{n!r} is not a target variable of {table!r}")
        out.append(all_names.index(n))
    return out


def marginalize(table: ConditionalTable, drop: Iterable[str]) -> ConditionalTable:
    """Sum the named target variables out of ``table``."""
    drop = list(drop)
    if not drop:
        return table
    axes = _axes(table, drop)
    keep = [v for v in table.target_vars if v.name not in drop]
    if not keep:
        raise UnknownVariable("cannot marginalize every target variable")
    return ConditionalTable(table.given_vars, keep, table.probs.sum(axis=tuple(axes)))


def condition(table: ConditionalTable, on: Sequence[str], threshold: float = ZERO_EVENT):
    """Move target variables ``on`` to the conditioning side.

    Returns ``(P(rest | givens, on), defined)`` where ``defined`` is a boolean
    array over the new given assignments; rows whose conditioning event has
    probability below ``threshold`` are undefined and hold a uniform row.
    """
    on = list(on)
    _axes(table, on)
    rest = [n for n in table.target_names if n not in on]
    if not rest:
        raise UnknownVariable("conditioning on every target leaves nothing to distribute")
    t = table.reorder(target=on + rest)
    k = len(t.given_vars) + len(on)
    p = t.probs
    denom = p.sum(axis=tuple(range(k, p.ndim)), keepdims=True)
    defined = (denom >= threshold) & (denom > 0)
    uniform = 1.0 / math.prod(t.var(n).size for n in rest)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(defined, p / np.where(defined, denom, 1.0), uniform)
    new_given = list(t.given_vars) + [t.var(n) for n in on]
    return ConditionalTable(new_given, [t.var(n) for n in rest], out), defined.reshape(out.shape[:k])


def expand(table: ConditionalTable, given_vars: Sequence[VariableSpec]) -> ConditionalTable:
    """Broadcast ``table`` onto a superset of its given variables.

    The table's values do not depend on the added givens; the result's given
    axes follow ``given_vars`` order.
    """
    given_vars = tuple(given_vars)
    new_names = [v.name for v in given_vars]
    for v in table.given_vars:
        if v.name not in new_names:
            raise ShapeMismatch(f"given variable {v.name!r} is missing from the expansion")
        if given_vars[new_names.index(v.name)] != v:
            raise ShapeMismatch(f"support of {v.name!r} differs in the expansion")
    t = table.reorder(given=[n for n in new_names if n in table.given_names])
    arr = t.probs
    k = len(t.given_vars)
    present = 0
    idx = []
    for n in new_names:
        if n in table.given_names:
            idx.append(present)
            present += 1
        else:
            idx.append(None)
    # insert singleton axes for the new givens, then broadcast
    src = arr.reshape(
        tuple(arr.shape[i] if i is not None else 1 for i in idx) + arr.shape[k:]
    )
    shape = tuple(v.size for v in given_vars) + arr.shape[k:]
    return ConditionalTable(given_vars, t.target_vars, np.broadcast_to(src, shape))


def total_variation(t1: ConditionalTable, t2: ConditionalTable, given_assignment=()) -> float:
    """½ Σ |p₁ - p₂| between the two target distributions at one given assignment.

    ``given_assignment`` may be a mapping from variable name to value; each
    table reads the givens it declares.
    """
    if t1.target_vars != t2.target_vars:
        raise ShapeMismatch(f"target variables differ: {t1.target_names} vs {t2.target_names}")
    r1 = t1.row(given_assignment)
    r2 = t2.row(given_assignment)
    return 0.5 * float(np.abs(r1 - r2).sum())
