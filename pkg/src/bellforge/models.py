"""Background-based hidden-variable models and their composition.

A model factorizes the hidden/outcome statistics at fixed settings (x, y) as

    P(λ0|x,y) P(λ1|λ0,x,y) P(λ2|λ0,λ1,x,y) P(σ1|λ0,λ1,x,y) P(σ2|σ1,λ0,λ2,x,y)

Every table is stored in that canonical (widest) conditioning.  The usual
local background model is the special case where λ0 ignores both settings,
λ1 and σ1 ignore y, and λ2 and σ2 ignore x; tables can be supplied in any
narrower conditioning and are broadcast on construction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .errors import ComposeError
from .metrics import SettingsQuad
from .prob import (
    DEFAULT_ANGLE_GRID,
    NORM_TOL,
    ConditionalTable,
    VariableSpec,
    expand,
    make_table,
    quantize_angle,
    spin,
)

X, Y = "x", "y"
L0, L1, L2 = "lambda0", "lambda1", "lambda2"
S1, S2 = "sigma1", "sigma2"

TABLE_TARGETS = {"rho0": L0, "lambda1": L1, "lambda2": L2, "sigma1": S1, "sigma2": S2}
CANONICAL_GIVENS = {
    "rho0": (X, Y),
    "lambda1": (L0, X, Y),
    "lambda2": (L0, L1, X, Y),
    "sigma1": (L0, L1, X, Y),
    "sigma2": (S1, L0, L2, X, Y),
}


@dataclass(frozen=True)
class Direction:
    """Unit vector in the plane, stored as its angle in radians."""

    angle: float

    @property
    def vector(self) -> np.ndarray:
        return np.array([math.cos(self.angle), math.sin(self.angle)])

    def dot(self, other: "Direction") -> float:
        return math.cos(self.angle - other.angle)

    def quantized(self, grid: int = DEFAULT_ANGLE_GRID) -> "Direction":
        return Direction(quantize_angle(self.angle, grid))

    def opposite(self, grid: int = DEFAULT_ANGLE_GRID) -> "Direction":
        return Direction(quantize_angle(self.angle + math.pi, grid))


class Residual(NamedTuple):
    table: str
    given: tuple
    residual: float


@dataclass(frozen=True, eq=False)
class HiddenVariableModel:
    x: VariableSpec
    y: VariableSpec
    lambda0: VariableSpec
    lambda1: VariableSpec
    lambda2: VariableSpec
    setting_distribution: ConditionalTable
    tables: Mapping[str, ConditionalTable]
    name: str = ""

    def spec(self, name: str) -> VariableSpec:
        return {X: self.x, Y: self.y, L0: self.lambda0, L1: self.lambda1, L2: self.lambda2,
                S1: spin(S1), S2: spin(S2)}[name]

    def settings_quad(self) -> SettingsQuad:
        if self.x.size != 2 or self.y.size != 2:
            raise ValueError("settings_quad needs exactly two settings per wing")
        return SettingsQuad(self.x.support[0], self.x.support[1], self.y.support[0], self.y.support[1])

    def joint(self) -> ConditionalTable:
        """``P(λ0, λ1, λ2, σ1, σ2 | x, y)``."""
        t = self.tables
        arr = np.einsum(
            "xya,axyb,abxyc,abxyd,dacxye->xyabcde",
            t["rho0"].probs, t["lambda1"].probs, t["lambda2"].probs,
            t["sigma1"].probs, t["sigma2"].probs,
        )
        return ConditionalTable([self.x, self.y],
                                [self.lambda0, self.lambda1, self.lambda2, spin(S1), spin(S2)], arr)

    def full_joint(self) -> ConditionalTable:
        """Unconditional ``P(x, y, λ0, λ1, λ2, σ1, σ2)`` using the setting distribution."""
        j = self.joint()
        pxy = self.setting_distribution.probs
        arr = pxy.reshape(pxy.shape + (1,) * len(j.target_vars)) * j.probs
        return ConditionalTable([], [self.x, self.y] + list(j.target_vars), arr)

    def lambda0_setting_dependence(self) -> float:
        """Largest TV distance between the λ0 rows of two setting pairs (0 for a proper background model)."""
        rows = self.tables["rho0"].probs.reshape(-1, self.lambda0.size)
        return float(max(0.5 * np.abs(r - s).sum() for r in rows for s in rows))


def uniform_settings(x: VariableSpec, y: VariableSpec) -> ConditionalTable:
    n = x.size * y.size
    return make_table([], [x, y], np.full((x.size, y.size), 1.0 / n))


def build_model(
    x: VariableSpec,
    y: VariableSpec,
    lambda0: VariableSpec,
    lambda1: VariableSpec,
    lambda2: VariableSpec,
    *,
    rho0: ConditionalTable,
    lambda1_table: ConditionalTable,
    lambda2_table: ConditionalTable,
    sigma1: ConditionalTable,
    sigma2: ConditionalTable,
    setting_distribution: ConditionalTable | None = None,
    name: str = "",
) -> HiddenVariableModel:
    """Assemble a model from component tables in any admissible conditioning.

    Variables must be named ``x, y, lambda0, lambda1, lambda2, sigma1,
    sigma2``; each table may condition on any subset of its canonical givens.
    """
    specs = {X: x, Y: y, L0: lambda0, L1: lambda1, L2: lambda2, S1: spin(S1), S2: spin(S2)}
    supplied = {"rho0": rho0, "lambda1": lambda1_table, "lambda2": lambda2_table,
                "sigma1": sigma1, "sigma2": sigma2}
    tables = {}
    for key, table in supplied.items():
        target = TABLE_TARGETS[key]
        if table.target_names != (target,):
            raise ComposeError(f"{key} table must have the single target {target!r}, got {table.target_names}")
        if table.target_vars[0].support != specs[target].support:
            raise ComposeError(f"{key} table support differs from the declared {target!r} support")
        allowed = CANONICAL_GIVENS[key]
        extra = set(table.given_names) - set(allowed)
        if extra:
            raise ComposeError(f"{key} table may not condition on {sorted(extra)}")
        try:
            tables[key] = expand(table, [specs[n] for n in allowed])
        except ValueError as exc:
            raise ComposeError(f"{key}: {exc}") from None
    if setting_distribution is None:
        setting_distribution = uniform_settings(x, y)
    elif setting_distribution.target_names != (X, Y) or setting_distribution.given_vars:
        raise ComposeError("setting distribution must be an unconditional table over (x, y)")
    return HiddenVariableModel(x, y, lambda0, lambda1, lambda2, setting_distribution, tables, name)


def validate(model: HiddenVariableModel, tolerance: float = NORM_TOL) -> list[Residual]:
    """Normalization residuals exceeding ``tolerance``, one per table row.

    An empty list means every component table is normalized.
    """
    out = []
    items = [("settings", model.setting_distribution)] + list(model.tables.items())
    for key, table in items:
        res = table.residuals()
        for idx in zip(*np.nonzero(res > tolerance)) if res.ndim else ([()] if res > tolerance else []):
            given = tuple(v.support[i] for v, i in zip(table.given_vars, idx))
            out.append(Residual(key, given, float(res[idx])))
    return out


def compose_bb(model: HiddenVariableModel) -> ConditionalTable:
    """Outcome statistics ``P(σ1, σ2 | x, y)`` of a background-based model."""
    bad = validate(model)
    if bad:
        raise ComposeError(f"model is not normalized: {bad[:3]}{' ...' if len(bad) > 3 else ''}")
    arr = model.joint().probs.sum(axis=(2, 3, 4))
    return make_table([model.x, model.y], [spin(S1), spin(S2)], arr)


def _local_parts(rho, s1, s2):
    if rho.given_vars or len(rho.target_vars) != 1:
        raise ComposeError("ρ(λ) must be an unconditional table over a single hidden variable")
    lam = rho.target_vars[0]
    if set(s1.given_names) != {X, lam.name} or s1.target_names != (S1,):
        raise ComposeError(f"expected P(sigma1|x,{lam.name}), got {s1!r}")
    if set(s2.given_names) != {Y, lam.name} or s2.target_names != (S2,):
        raise ComposeError(f"expected P(sigma2|y,{lam.name}), got {s2!r}")
    return lam, s1.reorder(given=[X, lam.name]), s2.reorder(given=[Y, lam.name])


def compose_local(rho: ConditionalTable, sigma1: ConditionalTable, sigma2: ConditionalTable) -> ConditionalTable:
    """``P(σ1,σ2|x,y) = Σ_λ P(σ1|x,λ) P(σ2|y,λ) ρ(λ)``."""
    lam, s1, s2 = _local_parts(rho, sigma1, sigma2)
    arr = np.einsum("l,xli,ylj->xyij", rho.probs, s1.probs, s2.probs)
    return make_table([s1.var(X), s2.var(Y)], [spin(S1), spin(S2)], arr)


def local_model(rho: ConditionalTable, sigma1: ConditionalTable, sigma2: ConditionalTable,
                name: str = "local") -> HiddenVariableModel:
    """Wrap a factorizable model as a background model with λ0 ≡ λ."""
    lam, s1, s2 = _local_parts(rho, sigma1, sigma2)
    l0 = VariableSpec(L0, lam.support)
    single1, single2 = VariableSpec(L1, (0,)), VariableSpec(L2, (0,))
    ren = {lam.name: L0}
    return build_model(
        s1.var(X), s2.var(Y), l0, single1, single2,
        rho0=rho.rename(ren),
        lambda1_table=make_table([], [single1], [1.0]),
        lambda2_table=make_table([], [single2], [1.0]),
        sigma1=s1.rename(ren),
        sigma2=s2.rename(ren),
        name=name,
    )


def bb1() -> HiddenVariableModel:
    """The semi-deterministic toy model BB-1 (X_BI = 4, non-signaling)."""
    x = VariableSpec(X, ("a", "a'"))
    y = VariableSpec(Y, ("b", "b'"))
    l0 = VariableSpec(L0, (0,))
    l1 = VariableSpec(L1, (1, 2))
    l2 = VariableSpec(L2, (1, 2))
    s1, s2 = spin(S1), spin(S2)

    def det(value, support):
        return [1.0 if v == value else 0.0 for v in support]

    lam1 = make_table([x], [l1], [[0.5, 0.5], [0.5, 0.5]])
    # outcome σ1 for (λ1, x)
    sig1_rule = {(1, "a"): 1, (2, "a'"): 1, (1, "a'"): -1, (2, "a"): -1}
    sig1 = make_table([l1, x], [s1], [[det(sig1_rule[(l, xv)], s1.support) for xv in x.support] for l in l1.support])
    # λ2 for (λ1, y)
    lam2_rule = {(1, "b"): 1, (2, "b"): 1, (1, "b'"): 2, (2, "b'"): 1}
    lam2 = make_table([l1, y], [l2], [[det(lam2_rule[(l, yv)], l2.support) for yv in y.support] for l in l1.support])
    # σ2 for (σ1, λ2, y)
    sig2_rule = {
        (1, 1, "b"): 1, (1, 2, "b"): 1, (1, 1, "b'"): -1, (1, 2, "b'"): 1,
        (-1, 1, "b"): -1, (-1, 2, "b"): 1, (-1, 1, "b'"): -1, (-1, 2, "b'"): 1,
    }
    sig2 = make_table([s1, l2, y], [s2], [[[det(sig2_rule[(a, l, yv)], s2.support) for yv in y.support]
                                          for l in l2.support] for a in s1.support])
    return build_model(
        x, y, l0, l1, l2,
        rho0=make_table([], [l0], [1.0]),
        lambda1_table=lam1, lambda2_table=lam2, sigma1=sig1, sigma2=sig2,
        name="bb1",
    )


# angles at which the singlet correlation reaches |X_BI| = 2√2
STANDARD_QUAD = SettingsQuad(0.0, math.pi / 2, math.pi / 4, -math.pi / 4)


def dilorenzo(settings: SettingsQuad = STANDARD_QUAD, grid: int = DEFAULT_ANGLE_GRID) -> HiddenVariableModel:
    """Four-atom model reproducing the singlet correlation through λ-setting dependence.

    At settings (x, y) the pair (λ̄1, λ̄2) takes the values (p, -p) with weight ¼
    for each p in {+x̄, -x̄, +ȳ, -ȳ}.  Settings are angles in radians, snapped to
    ``grid`` points per turn; hidden variables carry the direction angles.
    """
    if grid % 2:
        raise ValueError("angle grid must have an even number of points so that -p is on the grid")
    xs = tuple(Direction(a).quantized(grid) for a in (settings.a, settings.a_prime))
    ys = tuple(Direction(b).quantized(grid) for b in (settings.b, settings.b_prime))
    x = VariableSpec(X, tuple(d.angle for d in xs))
    y = VariableSpec(Y, tuple(d.angle for d in ys))
    atoms = sorted({d.angle for d in xs + ys} | {d.opposite(grid).angle for d in xs + ys})
    index = {a: i for i, a in enumerate(atoms)}
    l0 = VariableSpec(L0, (0,))
    l1 = VariableSpec(L1, tuple(atoms))
    l2 = VariableSpec(L2, tuple(atoms))
    s1, s2 = spin(S1), spin(S2)

    lam1 = np.zeros((x.size, y.size, len(atoms)))
    for i, dx in enumerate(xs):
        for j, dy in enumerate(ys):
            for p in (dx, dx.opposite(grid), dy, dy.opposite(grid)):
                lam1[i, j, index[p.angle]] += 0.25
    lam2 = np.zeros((len(atoms), len(atoms)))
    for a in atoms:
        lam2[index[a], index[Direction(a).opposite(grid).angle]] = 1.0

    def response(lams, dirs):
        # P(σ|λ̄, s̄) = ½(1 + σ λ̄·s̄), axes (λ, setting, σ)
        c = np.array([[Direction(lv).dot(d) for d in dirs] for lv in lams])
        return np.stack([0.5 * (1 + c), 0.5 * (1 - c)], axis=-1)

    return build_model(
        x, y, l0, l1, l2,
        rho0=make_table([], [l0], [1.0]),
        lambda1_table=make_table([x, y], [l1], lam1),
        lambda2_table=make_table([l1], [l2], lam2),
        sigma1=make_table([l1, x], [s1], response(atoms, xs)),
        sigma2=make_table([l2, y], [s2], response(atoms, ys)),
        name="dilorenzo",
    )


# -- random generators for property suites ---------------------------------

def _dirichlet_rows(rng: np.random.Generator, rows: Sequence[int], k: int) -> np.ndarray:
    n = int(np.prod(rows)) if rows else 1
    return rng.dirichlet(np.ones(k), size=n).reshape(tuple(rows) + (k,))


def random_local_tables(rng: np.random.Generator, n_settings: int = 2, lambda_size: int | None = None):
    """Random (ρ(λ), P(σ1|x,λ), P(σ2|y,λ)) with Dirichlet-flat rows.

    λ has 2–8 values unless ``lambda_size`` is given; settings are integer labels.
    """
    m = int(rng.integers(2, 9)) if lambda_size is None else lambda_size
    lam = VariableSpec("lambda", tuple(range(m)))
    x = VariableSpec(X, tuple(range(n_settings)))
    y = VariableSpec(Y, tuple(range(n_settings)))
    rho = make_table([], [lam], _dirichlet_rows(rng, [], m))
    s1 = make_table([x, lam], [spin(S1)], _dirichlet_rows(rng, [n_settings, m], 2))
    s2 = make_table([y, lam], [spin(S2)], _dirichlet_rows(rng, [n_settings, m], 2))
    return rho, s1, s2


def random_background_model(
    rng: np.random.Generator,
    *,
    mi: bool = False,
    oi: bool = False,
    pi: bool = False,
    max_lambda: int = 3,
) -> HiddenVariableModel:
    """Random model with each premise imposed by construction when requested.

    ``mi``: all λ tables ignore the settings; ``oi``: σ2 ignores σ1;
    ``pi``: σ1 ignores y and σ2 ignores x.  Unimposed dependencies are drawn
    Dirichlet-flat and are generically present.
    """
    x = VariableSpec(X, (0, 1))
    y = VariableSpec(Y, (0, 1))
    l0, l1, l2 = (VariableSpec(n, tuple(range(int(rng.integers(1, max_lambda + 1))))) for n in (L0, L1, L2))
    specs = {X: x, Y: y, L0: l0, L1: l1, L2: l2, S1: spin(S1), S2: spin(S2)}

    def draw(key, drop=()):
        givens = [specs[n] for n in CANONICAL_GIVENS[key] if n not in drop]
        target = specs[TABLE_TARGETS[key]]
        return make_table(givens, [target], _dirichlet_rows(rng, [g.size for g in givens], target.size))

    settings = (X, Y) if mi else ()
    return build_model(
        x, y, l0, l1, l2,
        rho0=draw("rho0", (X, Y)),
        lambda1_table=draw("lambda1", settings),
        lambda2_table=draw("lambda2", settings),
        sigma1=draw("sigma1", (Y,) if pi else ()),
        sigma2=draw("sigma2", ((S1,) if oi else ()) + ((X,) if pi else ())),
        name="random",
    )
