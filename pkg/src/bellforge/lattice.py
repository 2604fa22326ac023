"""Exact Boltzmann statistics on small Ising lattices.

Configurations are packed into integers: bit ``i`` of the index holds node
``i`` (in ``SpinLattice.nodes`` order), with bit value 0 meaning spin +1 and
1 meaning spin -1.  All 2^N configurations are enumerated; N is capped at 24.
"""
from __future__ import annotations

import itertools
import math
import os
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import BadArrangement, LatticeError, PartitionError, RangeError, ShapeMismatch, TooManySpins
from .metrics import ChshReport, SettingsQuad, chsh
from .models import L0, L1, L2, S1, S2, X, Y, HiddenVariableModel, build_model
from .prob import ConditionalTable, VariableSpec, make_table, spin

MAX_SPINS = 24
CHUNK_BITS = 16
ROLES = ("sigma1", "sigma2", "sigma_a", "sigma_b")
LATTICE_QUAD = SettingsQuad(1, -1, 1, -1)

SIGMA_A, SIGMA_B = "sigma_a", "sigma_b"


@dataclass(frozen=True, eq=False)
class SpinLattice:
    """Ising lattice with per-edge couplings, per-node fields and four boundary roles."""

    nodes: tuple[str, ...]
    edges: tuple[tuple[str, str, float], ...]
    fields: Mapping[str, float]
    beta: float
    roles: Mapping[str, str]
    _pos: dict = field(init=False, repr=False)

    def __post_init__(self):
        nodes = tuple(str(n) for n in self.nodes)
        if len(set(nodes)) != len(nodes):
            raise LatticeError("duplicate node ids")
        if len(nodes) > MAX_SPINS:
            raise TooManySpins(f"{len(nodes)} spins exceed the enumeration bound of {MAX_SPINS}")
        pos = {n: i for i, n in enumerate(nodes)}
        edges, seen = [], set()
        for e in self.edges:
            i, j, coupling = str(e[0]), str(e[1]), float(e[2])
            if i not in pos or j not in pos:
                raise LatticeError(f"edge ({i}, {j}) references an unknown node")
            if i == j:
                raise LatticeError(f"self-loop on node {i}")
            key = frozenset((i, j))
            if key in seen:
                raise LatticeError(f"duplicate edge ({i}, {j})")
            seen.add(key)
            edges.append((i, j, coupling))
        fields = {n: 0.0 for n in nodes}
        for n, h in dict(self.fields).items():
            if str(n) not in pos:
                raise LatticeError(f"field on unknown node {n}")
            fields[str(n)] = float(h)
        roles = {r: str(n) for r, n in dict(self.roles).items()}
        if set(roles) != set(ROLES):
            raise LatticeError(f"roles must be exactly {ROLES}")
        if len(set(roles.values())) != 4 or not set(roles.values()) <= set(pos):
            raise LatticeError("roles must name four distinct existing nodes")
        if not self.beta >= 0:
            raise LatticeError("beta must be non-negative")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", tuple(edges))
        object.__setattr__(self, "fields", fields)
        object.__setattr__(self, "roles", roles)
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "_pos", pos)

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def hidden(self) -> tuple[str, ...]:
        boundary = set(self.roles.values())
        return tuple(n for n in self.nodes if n not in boundary)

    def index(self, node: str) -> int:
        return self._pos[str(node)]

    def neighbors(self, node: str) -> tuple[str, ...]:
        node = str(node)
        out = []
        for i, j, _ in self.edges:
            if i == node:
                out.append(j)
            elif j == node:
                out.append(i)
        return tuple(out)

    def coupling(self, i: str, j: str) -> float:
        key = {str(i), str(j)}
        for a, b, c in self.edges:
            if {a, b} == key:
                return c
        raise KeyError((i, j))

    def with_couplings(self, couplings: float | Mapping[frozenset, float]) -> "SpinLattice":
        """Copy with a uniform coupling or a ``{frozenset({i, j}): J}`` override map."""
        if isinstance(couplings, Mapping):
            edges = tuple((i, j, couplings.get(frozenset((i, j)), c)) for i, j, c in self.edges)
        else:
            edges = tuple((i, j, float(couplings)) for i, j, _ in self.edges)
        return replace(self, edges=edges)

    def with_fields(self, fields: float | Mapping[str, float]) -> "SpinLattice":
        if isinstance(fields, Mapping):
            new = dict(self.fields)
            new.update({str(k): float(v) for k, v in fields.items()})
        else:
            new = {n: float(fields) for n in self.nodes}
        return replace(self, fields=new)

    def with_beta(self, beta: float) -> "SpinLattice":
        return replace(self, beta=beta)


# -- presets ---------------------------------------------------------------

LADDER_EDGES = (
    ("1", "3"), ("3", "4"), ("4", "5"), ("5", "2"),     # top row
    ("a", "6"), ("6", "7"), ("7", "8"), ("8", "b"),     # bottom row
    ("1", "a"), ("3", "6"), ("4", "7"), ("5", "8"), ("2", "b"),  # rungs
)
LADDER_MIRROR = {"a": "b", "b": "a", "1": "2", "2": "1", "3": "5", "5": "3",
                 "6": "8", "8": "6", "4": "4", "7": "7"}


def ladder10(J: float = 1.0, h: float = 0.0, beta: float = 1.0) -> SpinLattice:
    """The 2×5 ladder: top row 1–3–4–5–2, bottom row a–6–7–8–b, five rungs."""
    nodes = ("a", "b", "1", "2", "3", "4", "5", "6", "7", "8")
    return SpinLattice(
        nodes=nodes,
        edges=tuple((i, j, J) for i, j in LADDER_EDGES),
        fields={n: h for n in nodes},
        beta=beta,
        roles={"sigma1": "1", "sigma2": "2", "sigma_a": "a", "sigma_b": "b"},
    )


HEXAGON_ORDER = ("a", "1", "u", "2", "b", "v")


def hexagon6(order: Sequence[str] = HEXAGON_ORDER, J: float = 1.0, h: float = 0.0,
             beta: float = 1.0) -> SpinLattice:
    """Six-spin ring in the cyclic ``order``; nodes named a, 1, 2, b take the four roles."""
    order = tuple(str(n) for n in order)
    if len(order) != 6 or len(set(order)) != 6:
        raise BadArrangement("a hexagon needs six distinct node ids")
    if not {"a", "b", "1", "2"} <= set(order):
        raise BadArrangement("arrangement must contain the role nodes a, b, 1, 2")
    nodes = ("a", "b", "1", "2") + tuple(n for n in order if n not in {"a", "b", "1", "2"})
    edges = tuple((order[k], order[(k + 1) % 6], J) for k in range(6))
    return SpinLattice(nodes, edges, {n: h for n in nodes}, beta,
                       {"sigma1": "1", "sigma2": "2", "sigma_a": "a", "sigma_b": "b"})


def ring_mirror(order: Sequence[str] = HEXAGON_ORDER) -> dict[str, str]:
    """Reflection of the ring that swaps a↔b and 1↔2."""
    order = [str(n) for n in order]
    k = len(order)
    for shift in range(k):
        m = {order[i]: order[(shift - i) % k] for i in range(k)}
        if m["a"] == "b" and m["1"] == "2":
            return m
    raise BadArrangement(f"no reflection of {order} swaps a↔b and 1↔2")


# -- enumeration -----------------------------------------------------------

def spin_configs(n: int, start: int = 0, stop: int | None = None) -> np.ndarray:
    """Spins (+1/-1, int8) of configurations ``start..stop``; one row per configuration."""
    stop = (1 << n) if stop is None else stop
    k = np.arange(start, stop, dtype=np.int64)
    bits = (k[:, None] >> np.arange(n, dtype=np.int64)) & 1
    return (1 - 2 * bits).astype(np.int8)


def _coefficients(lattice: SpinLattice):
    ii = np.array([lattice.index(i) for i, _, _ in lattice.edges], dtype=np.intp)
    jj = np.array([lattice.index(j) for _, j, _ in lattice.edges], dtype=np.intp)
    jv = np.array([c for _, _, c in lattice.edges])
    hv = np.array([lattice.fields[n] for n in lattice.nodes])
    return ii, jj, jv, hv


def _energy_block(lattice, coef, start, stop):
    ii, jj, jv, hv = coef
    s = spin_configs(lattice.n, start, stop).astype(float)
    return -(s[:, ii] * s[:, jj]) @ jv - s @ hv


def _workers(workers: int | None) -> int:
    if workers is None:
        workers = int(os.environ.get("BELLFORGE_WORKERS", "1") or 1)
    return max(1, workers)


def _chunked(lattice, fn, workers=None):
    """Apply ``fn(start, stop)`` over fixed index ranges; results in range order."""
    total = 1 << lattice.n
    size = min(total, 1 << CHUNK_BITS)
    ranges = [(s, min(s + size, total)) for s in range(0, total, size)]
    w = _workers(workers)
    if w == 1 or len(ranges) == 1:
        return [fn(a, b) for a, b in ranges]
    with ThreadPoolExecutor(max_workers=w) as pool:
        return list(pool.map(lambda r: fn(*r), ranges))


def energies(lattice: SpinLattice, workers: int | None = None) -> np.ndarray:
    """H(θ) for every configuration, indexed by packed configuration."""
    coef = _coefficients(lattice)
    return np.concatenate(_chunked(lattice, lambda a, b: _energy_block(lattice, coef, a, b), workers))


def hamiltonian(lattice: SpinLattice, config) -> float:
    """H(θ) = -Σ J_ij σ_i σ_j - Σ h_i σ_i for one configuration.

    ``config`` is a packed integer, a sequence of ±1 in node order, or a
    mapping node → ±1.
    """
    if isinstance(config, (int, np.integer)):
        if not 0 <= config < (1 << lattice.n):
            raise ShapeMismatch(f"configuration index {config} out of range")
        s = spin_configs(lattice.n, int(config), int(config) + 1)[0]
    elif isinstance(config, Mapping):
        if set(map(str, config)) != set(lattice.nodes):
            raise ShapeMismatch("configuration must assign every node")
        s = np.array([config[n] for n in lattice.nodes])
    else:
        s = np.asarray(config)
        if s.shape != (lattice.n,):
            raise ShapeMismatch(f"configuration of length {s.size} for {lattice.n} nodes")
    if not np.all(np.abs(s) == 1):
        raise ShapeMismatch("spins must be ±1")
    s = s.astype(float)
    e = 0.0
    for i, j, c in lattice.edges:
        e -= c * s[lattice.index(i)] * s[lattice.index(j)]
    for node, h in lattice.fields.items():
        e -= h * s[lattice.index(node)]
    return e


def boltzmann_joint(lattice: SpinLattice, workers: int | None = None) -> np.ndarray:
    """P(θ) = exp(-βH(θ))/Z over all configurations (packed-index order)."""
    if lattice.n > MAX_SPINS:
        raise TooManySpins(f"{lattice.n} spins exceed {MAX_SPINS}")
    e = energies(lattice, workers)
    # shift by the ground-state energy so every weight is ≤ 1
    w = np.exp(-lattice.beta * (e - e.min()))
    size = min(w.size, 1 << CHUNK_BITS)
    z = 0.0
    for s in range(0, w.size, size):
        z += float(np.sum(w[s:s + size]))
    return w / z


def node_marginal(lattice: SpinLattice, p: np.ndarray, nodes: Sequence[str]) -> np.ndarray:
    """Joint marginal of ``nodes``: shape (2,)*len(nodes), axis order = ``nodes``, index 0 ↔ +1."""
    n = lattice.n
    # C-order reshape puts the highest bit (last node) on axis 0
    arr = p.reshape((2,) * n)
    axis_of = {node: n - 1 - lattice.index(node) for node in lattice.nodes}
    keep = [axis_of[str(v)] for v in nodes]
    drop = tuple(a for a in range(n) if a not in keep)
    m = arr.sum(axis=drop)
    remaining = sorted(keep)
    return np.transpose(m, [remaining.index(a) for a in keep])


def bell_conditional(lattice: SpinLattice, workers: int | None = None) -> ConditionalTable:
    """P(σ1, σ2 | σ_a, σ_b) with the hidden spins summed out."""
    p = boltzmann_joint(lattice, workers)
    r = lattice.roles
    m = node_marginal(lattice, p, [r["sigma_a"], r["sigma_b"], r["sigma1"], r["sigma2"]])
    cond = m / m.sum(axis=(2, 3), keepdims=True)
    return make_table([spin(SIGMA_A), spin(SIGMA_B)], [spin(S1), spin(S2)], cond)


def lattice_chsh(lattice: SpinLattice, workers: int | None = None) -> ChshReport:
    """CHSH with a ≡ b ≡ +1 and a′ ≡ b′ ≡ -1."""
    return chsh(bell_conditional(lattice, workers), LATTICE_QUAD)


def closed_form_ladder(K: float) -> ConditionalTable:
    """High-temperature-expansion result for the homogeneous ladder (h = 0), K = tanh(βJ).

    Ratio of the path-sum polynomial for Z·P(σ1,σ2,σa,σb) to the one for
    Z·P(σa,σb); the common prefactor cosh(βJ)^13 cancels.
    """
    if not -1 < K < 1:
        raise RangeError(f"K = tanh(βJ) must lie in (-1, 1), got {K}")
    arr = np.empty((2, 2, 2, 2))
    sup = (1, -1)
    for (ia, sa), (ib, sb) in itertools.product(enumerate(sup), repeat=2):
        den = 2**8 * (1 + sa * sb * (K**4 + 10 * K**6 + 5 * K**8)
                      + 4 * K**4 + 3 * K**6 + 5 * K**8 + 3 * K**10)
        for (i1, s1), (i2, s2) in itertools.product(enumerate(sup), repeat=2):
            bracket = (1
                       + (K**3 + K**5 + 2 * K**7) * (s1 * sa + s2 * sb)
                       + (K**4 + 3 * K**6) * (s1 * s2 + sa * sb)
                       + (K**6 + 3 * K**8) * s1 * s2 * sa * sb
                       + (3 * K**5 + K**7) * (s1 * sb + s2 * sa)
                       + 2 * K**4 + K**6)
            num = 2**6 * (1 + K * s1 * sa) * (1 + K * s2 * sb) * bracket
            arr[ia, ib, i1, i2] = num / den
    return make_table([spin(SIGMA_A), spin(SIGMA_B)], [spin(S1), spin(S2)], arr)


def p_plus_plus_closed_form(K: float) -> float:
    """P(+,+|+,+) on the homogeneous ladder as a single rational function of K."""
    num = (1 + K) ** 2 * (1 + 2 * K**3 + 4 * K**4 + 8 * K**5 + 8 * K**6 + 6 * K**7 + 3 * K**8)
    den = 4 * (1 + 5 * K**4 + 13 * K**6 + 10 * K**8 + 3 * K**10)
    return num / den


# -- lattice as a hidden-variable model ------------------------------------

def _separated(lattice: SpinLattice, a: Iterable[str], b: Iterable[str], blocked: Iterable[str]) -> bool:
    """True if every path from ``a`` to ``b`` passes through ``blocked``."""
    blocked, b = set(blocked), set(b)
    seen = set(a)
    queue = deque(seen)
    while queue:
        node = queue.popleft()
        if node in b:
            return False
        for nb in lattice.neighbors(node):
            if nb not in seen and nb not in blocked:
                seen.add(nb)
                queue.append(nb)
    return True


def _group_spec(name: str, nodes: Sequence[str]) -> VariableSpec:
    return VariableSpec(name, tuple(itertools.product((1, -1), repeat=len(nodes))))


def lattice_as_hv_model(lattice: SpinLattice, lambda0_nodes: Sequence[str], lambda1_nodes: Sequence[str],
                        lambda2_nodes: Sequence[str], workers: int | None = None) -> HiddenVariableModel:
    """Read the lattice as a background model with settings (σ_a, σ_b).

    The three node groups must be disjoint subsets of the hidden spins;
    hidden spins listed in no group are summed out.  The grouping must let
    the model's factorization be exact: σ1 separated from λ2 by
    (λ0, λ1, σ_a, σ_b) and σ2 separated from λ1 by (σ1, λ0, λ2, σ_a, σ_b).
    Hidden-variable values are tuples of spins in the listed node order.  The
    setting distribution is the lattice's own P(σ_a, σ_b).
    """
    groups = [tuple(map(str, g)) for g in (lambda0_nodes, lambda1_nodes, lambda2_nodes)]
    flat = [n for g in groups for n in g]
    if len(flat) != len(set(flat)) or not set(flat) <= set(lattice.hidden):
        raise PartitionError(f"groups {groups} are not disjoint subsets of the hidden spins {lattice.hidden}")
    r = lattice.roles
    sa, sb, s1, s2 = r["sigma_a"], r["sigma_b"], r["sigma1"], r["sigma2"]
    g0, g1, g2 = groups
    if not _separated(lattice, [s1], g2, set(g0) | set(g1) | {sa, sb}):
        raise PartitionError("σ1 is not separated from λ2 by (λ0, λ1, settings)")
    if not _separated(lattice, [s2], g1, set(g0) | set(g2) | {s1, sa, sb}):
        raise PartitionError("σ2 is not separated from λ1 by (σ1, λ0, λ2, settings)")

    p = boltzmann_joint(lattice, workers)
    m = node_marginal(lattice, p, [sa, sb, *g0, *g1, *g2, s1, s2])
    n0, n1, n2 = (1 << len(g) for g in groups)
    m = m.reshape(2, 2, n0, n1, n2, 2, 2)                  # x y a b c s t
    pxy = m.sum(axis=(2, 3, 4, 5, 6))
    j = m / pxy[:, :, None, None, None, None, None]         # P(· | x, y)

    p0 = j.sum(axis=(3, 4, 5, 6))                           # x y a
    p01 = j.sum(axis=(4, 5, 6))                             # x y a b
    p012 = j.sum(axis=(5, 6))                               # x y a b c
    p01s = j.sum(axis=(4, 6))                               # x y a b s
    p02s = j.sum(axis=3)                                    # x y a c s t
    rho0 = p0                                               # (x, y, λ0)
    lam1 = (p01 / p0[..., None]).transpose(2, 0, 1, 3)      # (λ0, x, y, λ1)
    lam2 = (p012 / p01[..., None]).transpose(2, 3, 0, 1, 4)  # (λ0, λ1, x, y, λ2)
    sig1 = (p01s / p01[..., None]).transpose(2, 3, 0, 1, 4)  # (λ0, λ1, x, y, σ1)
    sig2 = (p02s / p02s.sum(axis=-1, keepdims=True)).transpose(4, 2, 3, 0, 1, 5)  # (σ1, λ0, λ2, x, y, σ2)

    x, y = VariableSpec(X, (1, -1)), VariableSpec(Y, (1, -1))
    l0, l1, l2 = _group_spec(L0, g0), _group_spec(L1, g1), _group_spec(L2, g2)
    s1v, s2v = spin(S1), spin(S2)
    return build_model(
        x, y, l0, l1, l2,
        rho0=make_table([x, y], [l0], rho0),
        lambda1_table=make_table([l0, x, y], [l1], lam1),
        lambda2_table=make_table([l0, l1, x, y], [l2], lam2),
        sigma1=make_table([l0, l1, x, y], [s1v], sig1),
        sigma2=make_table([s1v, l0, l2, x, y], [s2v], sig2),
        setting_distribution=make_table([], [x, y], pxy),
        name="lattice",
    )


# λ0 = σ4, λ1 = (σ3, σ6), λ2 = (σ5, σ8); σ7 is summed out
LADDER_PARTITION = (("4",), ("3", "6"), ("5", "8"))
# the same split with σ7 folded into λ0, which makes λ1 and λ2 conditionally independent
LADDER_PARTITION_FOLDED = (("4", "7"), ("3", "6"), ("5", "8"))


# -- topology checks -------------------------------------------------------

def simple_paths(lattice: SpinLattice, start: str, end: str) -> list[tuple[str, ...]]:
    """All self-avoiding paths from ``start`` to ``end``."""
    out = []

    def walk(path):
        node = path[-1]
        if node == end:
            out.append(tuple(path))
            return
        for nb in lattice.neighbors(node):
            if nb not in path:
                walk(path + [nb])
    walk([str(start)])
    return out


def has_cycle(lattice: SpinLattice, cycle: Sequence[str]) -> bool:
    cycle = [str(c) for c in cycle]
    pairs = {frozenset((i, j)) for i, j, _ in lattice.edges}
    return all(frozenset((cycle[k], cycle[(k + 1) % len(cycle)])) in pairs for k in range(len(cycle)))


def ladder_topology_problems(lattice: SpinLattice) -> list[str]:
    """Differences between ``lattice`` and the ladder structure the closed forms rely on."""
    want = {frozenset(e) for e in LADDER_EDGES}
    have = {frozenset((i, j)) for i, j, _ in lattice.edges}
    problems = []
    if set(lattice.nodes) != set(LADDER_MIRROR):
        problems.append(f"nodes {sorted(lattice.nodes)} differ from the ladder's ten nodes")
    problems += [f"missing pair {'-'.join(sorted(e))}" for e in sorted(want - have, key=sorted)]
    problems += [f"unexpected pair {'-'.join(sorted(e))}" for e in sorted(have - want, key=sorted)]
    if dict(lattice.roles) != {"sigma1": "1", "sigma2": "2", "sigma_a": "a", "sigma_b": "b"}:
        problems.append("roles differ from σ1=1, σ2=2, σa=a, σb=b")
    return problems
