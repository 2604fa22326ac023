"""Correlators, CHSH scores and the singlet-state reference correlation."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Hashable, Iterable, Sequence

import numpy as np

from .errors import EmptyGrid, UnknownSetting, UnknownVariable
from .prob import ConditionalTable, VariableSpec, make_table, spin

TSIRELSON = 2 * math.sqrt(2)
LOCAL_BOUND = 2.0


@dataclass(frozen=True)
class SettingsQuad:
    """The four analyzer settings (a, a′, b, b′) entering one CHSH score."""

    a: Hashable
    a_prime: Hashable
    b: Hashable
    b_prime: Hashable

    def __post_init__(self):
        if self.a == self.a_prime or self.b == self.b_prime:
            raise ValueError(f"degenerate settings quad {self}")

    def pairs(self):
        return ((self.a, self.b), (self.a_prime, self.b), (self.a, self.b_prime), (self.a_prime, self.b_prime))

    def as_tuple(self):
        return (self.a, self.a_prime, self.b, self.b_prime)


@dataclass(frozen=True)
class ChshReport:
    M_ab: float
    M_apb: float
    M_abp: float
    M_apbp: float
    X_BI: float
    settings: SettingsQuad

    @property
    def abs_score(self) -> float:
        return abs(self.X_BI)

    @property
    def violates(self) -> bool:
        """Violation of the one-sided bound X_BI ≤ 2."""
        return self.X_BI > LOCAL_BOUND

    @property
    def violates_abs(self) -> bool:
        return abs(self.X_BI) > LOCAL_BOUND


def _check_outcome_table(joint: ConditionalTable):
    if len(joint.given_vars) != 2 or len(joint.target_vars) != 2:
        raise ValueError(f"expected a table P(σ1,σ2|x,y), got {joint!r}")
    for v in joint.target_vars:
        if set(v.support) != {1, -1} or v.size != 2:
            raise ValueError(f"outcome {v.name!r} must have support {{+1, -1}}")


def correlator(joint: ConditionalTable, x, y) -> float:
    """Average product ⟨σ1 σ2⟩ at settings (x, y)."""
    _check_outcome_table(joint)
    try:
        row = joint.row((x, y))
    except UnknownVariable:
        raise UnknownSetting(f"settings ({x!r}, {y!r}) are not in {joint!r}") from None
    s1 = np.array(joint.target_vars[0].support, dtype=float)
    s2 = np.array(joint.target_vars[1].support, dtype=float)
    return float(np.einsum("i,j,ij->", s1, s2, row))


def chsh(joint: ConditionalTable, settings: SettingsQuad) -> ChshReport:
    m = [correlator(joint, x, y) for x, y in settings.pairs()]
    return ChshReport(*m, X_BI=m[0] + m[1] + m[2] - m[3], settings=settings)


def quantum_correlation(s1: int, s2: int, a: float, b: float) -> float:
    """Singlet-state joint probability ¼[1 - σ1 σ2 cos(a - b)]."""
    return 0.25 * (1.0 - s1 * s2 * math.cos(a - b))


def quantum_table(x_angles: Sequence[float], y_angles: Sequence[float],
                  names=("x", "y", "sigma1", "sigma2")) -> ConditionalTable:
    """Singlet joint ``P(σ1,σ2|x,y)`` over the given analyzer angles."""
    x = VariableSpec(names[0], tuple(x_angles))
    y = VariableSpec(names[1], tuple(y_angles))
    s1, s2 = spin(names[2]), spin(names[3])
    arr = np.array([[[[quantum_correlation(i, j, a, b) for j in s2.support] for i in s1.support]
                     for b in y.support] for a in x.support])
    return make_table([x, y], [s1, s2], arr)


def chsh_scan(joint_family: ConditionalTable | Callable[[SettingsQuad], ConditionalTable],
              grid: Iterable[SettingsQuad]) -> tuple[ChshReport, SettingsQuad]:
    """Report with the largest |X_BI| over ``grid``.

    ``joint_family`` is either one table holding every setting in the grid or
    a callable returning the table for a given quad.  The first quad in grid
    order wins ties.
    """
    best = None
    for quad in grid:
        table = joint_family(quad) if callable(joint_family) else joint_family
        rep = chsh(table, quad)
        if best is None or rep.abs_score > best.abs_score:
            best = rep
    if best is None:
        raise EmptyGrid("chsh_scan needs at least one settings quad")
    return best, best.settings


def angle_quads(angles: Sequence[float]) -> Iterable[SettingsQuad]:
    """All non-degenerate quads with every setting drawn from ``angles``."""
    for a in angles:
        for ap in angles:
            if ap == a:
                continue
            for b in angles:
                for bp in angles:
                    if bp != b:
                        yield SettingsQuad(a, ap, b, bp)
