"""Grid search over mirror-symmetric lattice parameters to maximize X_BI.

Parameters are tied across mirror orbits: every node in a field orbit gets
the same h and every edge in an edge orbit the same J.  Grid points are
enumerated lexicographically over (β index, field-orbit indices,
edge-orbit indices) with the last edge orbit varying fastest; the first
point in that order wins ties.
"""
from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import BadSlice, BadStart, BadSymmetry, SpaceTooLarge, TooManySpins
from .lattice import HEXAGON_ORDER, LADDER_MIRROR, SpinLattice, hexagon6, ladder10, lattice_chsh, ring_mirror, spin_configs
from .metrics import ChshReport

MAX_POINTS = 10**8
BATCH = 8192
MAX_EVAL_SPINS = 16


@dataclass(frozen=True, eq=False)
class SearchSpace:
    template: SpinLattice
    betas: tuple[float, ...]
    field_values: tuple[float, ...]
    coupling_values: tuple[float, ...]
    mirror: Mapping[str, str] | None = None

    def __post_init__(self):
        for name in ("betas", "field_values", "coupling_values"):
            vals = tuple(float(v) for v in getattr(self, name))
            if not vals:
                raise ValueError(f"{name} must not be empty")
            object.__setattr__(self, name, vals)
        mirror = {n: n for n in self.template.nodes} if self.mirror is None else {
            str(k): str(v) for k, v in self.mirror.items()}
        object.__setattr__(self, "mirror", mirror)


@dataclass(frozen=True)
class Assignment:
    """One grid point: β plus one value per field orbit and per edge orbit."""

    beta: float
    fields: tuple[float, ...]
    couplings: tuple[float, ...]


@dataclass
class SearchResult:
    best_x: float
    assignment: Assignment
    evaluations: int
    trajectory: list[tuple[Assignment, float]] = field(default_factory=list)
    wall_time: float = 0.0
    strategy: str = "exhaustive"


def enumerate_orbits(space: SearchSpace):
    """Field orbits, edge orbits and the number of grid points per β value.

    Orbits are listed in order of their first member (node order, edge
    order); edges are given as (i, j) pairs from the template.
    """
    lat, m = space.template, space.mirror
    if set(m) != set(lat.nodes) or set(m.values()) != set(lat.nodes):
        raise BadSymmetry("mirror map must be a permutation of the lattice nodes")
    if any(m[m[n]] != n for n in lat.nodes):
        raise BadSymmetry("mirror map must be an involution")
    pairs = {frozenset((i, j)): (i, j) for i, j, _ in lat.edges}
    for key in pairs:
        i, j = tuple(key)
        if frozenset((m[i], m[j])) not in pairs:
            raise BadSymmetry(f"mirror image of edge {i}-{j} is not an edge")
    field_orbits, seen = [], set()
    for n in lat.nodes:
        if n not in seen:
            orbit = (n,) if m[n] == n else (n, m[n])
            seen.update(orbit)
            field_orbits.append(orbit)
    edge_orbits, seen = [], set()
    for i, j, _ in lat.edges:
        key = frozenset((i, j))
        if key in seen:
            continue
        image = frozenset((m[i], m[j]))
        seen.update((key, image))
        edge_orbits.append(((i, j),) if image == key else ((i, j), pairs[image]))
    total = len(space.field_values) ** len(field_orbits) * len(space.coupling_values) ** len(edge_orbits)
    return tuple(field_orbits), tuple(edge_orbits), total


def orbit_labels(space: SearchSpace) -> tuple[list[str], list[str]]:
    fo, eo, _ = enumerate_orbits(space)
    return ["|".join(o) for o in fo], ["|".join(f"{i}-{j}" for i, j in o) for o in eo]


def lattice_for(space: SearchSpace, assignment: Assignment) -> SpinLattice:
    fo, eo, _ = enumerate_orbits(space)
    if len(assignment.fields) != len(fo) or len(assignment.couplings) != len(eo):
        raise BadStart("assignment does not match the orbit structure")
    fields = {n: h for orbit, h in zip(fo, assignment.fields) for n in orbit}
    couplings = {frozenset(e): c for orbit, c in zip(eo, assignment.couplings) for e in orbit}
    return space.template.with_fields(fields).with_couplings(couplings).with_beta(assignment.beta)


def evaluate(space: SearchSpace, assignment: Assignment) -> ChshReport:
    """X_BI for one grid point through the plain enumeration path."""
    return lattice_chsh(lattice_for(space, assignment))


class _Evaluator:
    """Vectorized X_BI for many parameter vectors on one template.

    With f the orbit feature matrix (one row per spin configuration),
    -βH = β f·p, so a batch of parameter vectors costs one matrix product.
    """

    def __init__(self, space: SearchSpace):
        lat = space.template
        if lat.n > MAX_EVAL_SPINS:
            raise TooManySpins(f"vectorized search supports at most {MAX_EVAL_SPINS} spins")
        fo, eo, _ = enumerate_orbits(space)
        s = spin_configs(lat.n).astype(float)
        cols = [s[:, [lat.index(n) for n in orbit]].sum(axis=1) for orbit in fo]
        cols += [sum(s[:, lat.index(i)] * s[:, lat.index(j)] for i, j in orbit) for orbit in eo]
        self.features = np.column_stack(cols)
        r = lat.roles
        bit = lambda role: ((s[:, lat.index(r[role])] < 0)).astype(np.intp)
        cell = 8 * bit("sigma_a") + 4 * bit("sigma_b") + 2 * bit("sigma1") + bit("sigma2")
        self.groups = np.zeros((s.shape[0], 16))
        self.groups[np.arange(s.shape[0]), cell] = 1.0
        self.nf, self.ne = len(fo), len(eo)
        self.dims = (len(space.betas),) + (len(space.field_values),) * self.nf + (len(space.coupling_values),) * self.ne
        self.betas = np.array(space.betas)
        self.field_values = np.array(space.field_values)
        self.coupling_values = np.array(space.coupling_values)
        self.size = int(np.prod(self.dims))

    def params(self, idx: np.ndarray):
        """(β, orbit parameters) for a 2-D array of grid index tuples."""
        beta = self.betas[idx[:, 0]]
        p = np.empty((idx.shape[0], self.nf + self.ne))
        p[:, :self.nf] = self.field_values[idx[:, 1:1 + self.nf]]
        p[:, self.nf:] = self.coupling_values[idx[:, 1 + self.nf:]]
        return beta, p

    def x_values(self, beta: np.ndarray, p: np.ndarray) -> np.ndarray:
        logw = (self.features @ p.T) * beta[None, :]
        w = np.exp(logw - logw.max(axis=0, keepdims=True))
        cells = (self.groups.T @ w).reshape(2, 2, 2, 2, -1)       # a b s1 s2 batch
        cond = cells / cells.sum(axis=(2, 3), keepdims=True)
        m = cond[:, :, 0, 0] + cond[:, :, 1, 1] - cond[:, :, 0, 1] - cond[:, :, 1, 0]   # M[a_idx, b_idx]
        # a ≡ b ≡ +1 (index 0), a′ ≡ b′ ≡ -1 (index 1)
        return m[0, 0] + m[1, 0] + m[0, 1] - m[1, 1]

    def flat_range(self, start: int, stop: int):
        idx = np.stack(np.unravel_index(np.arange(start, stop), self.dims), axis=1)
        return self.x_values(*self.params(idx))

    def assignment(self, idx: Sequence[int]) -> Assignment:
        beta, p = self.params(np.asarray(idx)[None, :])
        return Assignment(float(beta[0]), tuple(float(v) for v in p[0, :self.nf]),
                          tuple(float(v) for v in p[0, self.nf:]))


_WORKER_EVAL: _Evaluator | None = None


def _init_worker(space):
    global _WORKER_EVAL
    _WORKER_EVAL = _Evaluator(space)


def _best_in_range(bounds):
    start, stop = bounds
    x = _WORKER_EVAL.flat_range(start, stop)
    k = int(np.argmax(x))
    return float(x[k]), start + k


def _worker_count(workers):
    if workers is None:
        workers = int(os.environ.get("BELLFORGE_WORKERS", "1") or 1)
    return max(1, int(workers))


def exhaustive_max(space: SearchSpace, workers: int | None = None, batch: int = BATCH) -> SearchResult:
    """Global maximum of X_BI over the whole grid.

    The grid is cut into fixed ranges of ``batch`` points regardless of the
    worker count, and per-range winners are merged in range order, so the
    result is identical for any number of workers.
    """
    t0 = time.perf_counter()
    _, _, per_beta = enumerate_orbits(space)
    total = per_beta * len(space.betas)
    if total > MAX_POINTS:
        raise SpaceTooLarge(f"{total} grid points exceed the limit of {MAX_POINTS}")
    ev = _Evaluator(space)
    ranges = [(s, min(s + batch, total)) for s in range(0, total, batch)]
    n = _worker_count(workers)
    if n == 1:
        global _WORKER_EVAL
        _WORKER_EVAL = ev
        results = map(_best_in_range, ranges)
        results = list(results)
    else:
        with ProcessPoolExecutor(max_workers=n, initializer=_init_worker, initargs=(space,)) as pool:
            results = list(pool.map(_best_in_range, ranges, chunksize=4))
    best_x, best_k = results[0]
    for x, k in results[1:]:
        if x > best_x:
            best_x, best_k = x, k
    idx = np.unravel_index(best_k, ev.dims)
    return SearchResult(best_x, ev.assignment([int(i) for i in idx]), total,
                        wall_time=time.perf_counter() - t0, strategy="exhaustive")


def _grid_index(space: SearchSpace, assignment: Assignment) -> list[int]:
    fo, eo, _ = enumerate_orbits(space)
    if len(assignment.fields) != len(fo) or len(assignment.couplings) != len(eo):
        raise BadStart("start does not match the orbit structure")
    try:
        return ([space.betas.index(float(assignment.beta))]
                + [space.field_values.index(float(h)) for h in assignment.fields]
                + [space.coupling_values.index(float(c)) for c in assignment.couplings])
    except ValueError:
        raise BadStart(f"{assignment} is not a grid point") from None


def _climb(ev: _Evaluator, idx: list[int]):
    """Steepest ascent from ``idx``; β (position 0) stays fixed."""
    x = float(ev.x_values(*ev.params(np.array([idx])))[0])
    path = [(list(idx), x)]
    evals = 1
    while True:
        moves = []
        for k in range(1, len(idx)):
            for step in (-1, 1):
                j = idx[k] + step
                if 0 <= j < ev.dims[k]:
                    cand = list(idx)
                    cand[k] = j
                    moves.append(cand)
        if not moves:
            return path, evals
        xs = ev.x_values(*ev.params(np.array(moves)))
        evals += len(moves)
        k = int(np.argmax(xs))
        if not xs[k] > x:
            return path, evals
        idx, x = moves[k], float(xs[k])
        path.append((list(idx), x))


def hill_climb(space: SearchSpace, start: Assignment | None = None, seed: int = 0,
               restarts: int = 1) -> SearchResult:
    """Steepest-ascent search over single-orbit moves to an adjacent value.

    The first climb begins at ``start`` (or a seeded random grid point when
    ``start`` is None); each further restart begins at a random point drawn
    from ``numpy.random.default_rng(seed)``.  The trajectory of the best
    climb is kept.
    """
    t0 = time.perf_counter()
    ev = _Evaluator(space)
    rng = np.random.default_rng(seed)
    starts = []
    if start is not None:
        starts.append(_grid_index(space, start))
    while len(starts) < max(1, restarts):
        starts.append([int(rng.integers(d)) for d in ev.dims])
    best_path, evals = None, 0
    for s in starts:
        path, n = _climb(ev, s)
        evals += n
        if best_path is None or path[-1][1] > best_path[-1][1]:
            best_path = path
    traj = [(ev.assignment(i), x) for i, x in best_path]
    return SearchResult(traj[-1][1], traj[-1][0], evals, traj, time.perf_counter() - t0, "hill-climb")


def _slice_target(space: SearchSpace, free: str):
    fl, el = orbit_labels(space)
    if free == "beta":
        return 0
    for prefix, labels, offset in (("h", fl, 1), ("J", el, 1 + len(fl))):
        if free.startswith(prefix) and free[1:].isdigit() and int(free[1:]) < len(labels):
            return offset + int(free[1:])
        if free.startswith(prefix + ":") and free[2:] in labels:
            return offset + labels.index(free[2:])
    raise BadSlice(f"unknown free orbit {free!r}; use 'beta', 'h<k>', 'J<k>', 'h:<label>' or 'J:<label>'")


def landscape_slice(space: SearchSpace, frozen: Assignment, free: str) -> list[tuple[float, float]]:
    """X_BI as one orbit (or β) runs over its value list, everything else frozen."""
    k = _slice_target(space, free)
    fo, eo, _ = enumerate_orbits(space)
    if len(frozen.fields) != len(fo) or len(frozen.couplings) != len(eo):
        raise BadSlice("frozen assignment does not match the orbit structure")
    ev = _Evaluator(space)
    base = [frozen.beta, *frozen.fields, *frozen.couplings]
    values = (space.betas, *([space.field_values] * len(fo)), *([space.coupling_values] * len(eo)))[k]
    beta = np.array([v if k == 0 else base[0] for v in values], dtype=float)
    rows = []
    for v in values:
        row = list(base[1:])
        if k > 0:
            row[k - 1] = v
        rows.append(row)
    p = np.array(rows, dtype=float).reshape(len(values), len(base) - 1)
    xs = ev.x_values(beta, p)
    return [(float(v), float(x)) for v, x in zip(values, xs)]


# -- presets ---------------------------------------------------------------

GRID_FIELDS = (-1.0, 1.0, 3.0)
GRID_COUPLINGS = (1.0, 2.0, 3.0, 4.0)


def paper_grid() -> SearchSpace:
    """Ladder with mirror constraint, β = 1, h ∈ {-1, 1, 3}, J ∈ {1, 2, 3, 4}."""
    return SearchSpace(ladder10(), (1.0,), GRID_FIELDS, GRID_COUPLINGS, LADDER_MIRROR)


def hexagon_grid(order: Sequence[str] = HEXAGON_ORDER, betas=(1.0,), field_values=GRID_FIELDS,
                 coupling_values=(-4.0, -3.0, -2.0, -1.0, 1.0, 2.0, 3.0, 4.0)) -> SearchSpace:
    return SearchSpace(hexagon6(order), tuple(betas), tuple(field_values), tuple(coupling_values),
                       ring_mirror(order))


def homogeneous_beta_space(template: SpinLattice | None = None, betas=None, J: float = 1.0) -> SearchSpace:
    """Homogeneous lattice (h = 0, one J) with β as the only free parameter."""
    template = template or ladder10()
    betas = betas if betas is not None else tuple(round(0.05 * k, 10) for k in range(1, 51))
    return SearchSpace(template, tuple(betas), (0.0,), (J,), None)
