"""Machine-checkable premises of the Bell inequality.

Every checker takes a :class:`~bellforge.models.HiddenVariableModel` and
returns a :class:`CheckVerdict` carrying the worst deviation found and the
assignment where it occurs.  Distribution comparisons use total variation,
pointwise equalities use the absolute difference.  Conditioning events whose
probability (given the settings they mention) is below ``ZERO_EVENT`` are
skipped and counted.

All conditionals are read off the unconditional joint
P(x, y, λ0, λ1, λ2, σ1, σ2), so a conditional on one setting such as
P(σ2|y, λ) is the mixture over the remote setting weighted by the model's
setting distribution.

OI, PI and factorability take a ``scope``.  With ``scope="wing"`` (default)
each outcome is conditioned on its own wing's hidden variables: (λ0, λ1) for
σ1 and (λ0, λ2) for σ2, which is how locality is phrased for background
models.  ``scope="full"`` conditions both outcomes on the whole λ.  In both
scopes factorability holds exactly when OI and PI do.

:func:`recheck` re-evaluates a verdict's witness through the
:class:`~bellforge.prob.ConditionalTable` API, independently of the
vectorized checkers.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .errors import ComposeError
from .models import L0, L1, L2, S1, S2, X, Y, HiddenVariableModel, validate
from .prob import ZERO_EVENT, marginalize

DEFAULT_TOLERANCE = 1e-10
NS_IDS = ("NS1", "NS2", "NS3", "NS4", "NS5", "NS6")
SCOPES = ("wing", "full")

_AXES = (X, Y, L0, L1, L2, S1, S2)
_SETTINGS = (X, Y)


@dataclass(frozen=True)
class CheckVerdict:
    condition_id: str
    max_deviation: float
    witness: dict[str, Any] | None
    satisfied: bool
    tolerance: float
    skipped: int = 0
    scope: str = "wing"
    description: str = field(default="", compare=False)


def _hidden(scope: str, wing: int) -> tuple[str, ...]:
    if scope == "full":
        return (L0, L1, L2)
    if scope == "wing":
        return (L0, L1) if wing == 1 else (L0, L2)
    raise ValueError(f"scope must be one of {SCOPES}, got {scope!r}")


def _ordered(names) -> tuple[str, ...]:
    return tuple(n for n in _AXES if n in set(names))


class _Joint:
    """Unconditional joint with keepdims marginals and conditionals over named axes."""

    def __init__(self, model: HiddenVariableModel):
        bad = validate(model)
        if bad:
            raise ComposeError(f"model is not normalized: {bad[:3]}")
        self.model = model
        self.p = model.full_joint().probs
        self.specs = [model.spec(n) for n in _AXES]

    def marg(self, keep: Sequence[str]) -> np.ndarray:
        drop = tuple(i for i, n in enumerate(_AXES) if n not in keep)
        return self.p.sum(axis=drop, keepdims=True)

    def cond(self, target: Sequence[str], given: Sequence[str]):
        """``(P(target|given), event)``, both broadcastable over all axes.

        ``event`` is the probability of the given assignment conditional on
        the settings it contains.
        """
        num = self.marg(tuple(target) + tuple(given))
        den = self.marg(given)
        settings = self.marg([n for n in given if n in _SETTINGS])
        with np.errstate(invalid="ignore", divide="ignore"):
            c = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
            event = np.where(settings > 0, den / np.where(settings > 0, settings, 1.0), 0.0)
        return c, event

    def verdict(self, cid, dev, defined, quantified, tolerance, scope, description, extra=None):
        """Reduce a keepdims deviation array over the ``quantified`` axes to a verdict."""
        q = _ordered(quantified)
        qi = [_AXES.index(n) for n in q]
        shape = [1] * len(_AXES)
        for i in qi:
            shape[i] = self.specs[i].size
        dev = np.broadcast_to(dev, shape).reshape([shape[i] for i in qi])
        defined = np.broadcast_to(defined, shape).reshape(dev.shape)
        skipped = int(dev.size - np.count_nonzero(defined))
        if not defined.any():
            return CheckVerdict(cid, 0.0, None, True, tolerance, skipped, scope, description)
        idx = np.unravel_index(int(np.argmax(np.where(defined, dev, -np.inf))), dev.shape)
        worst = float(dev[idx])
        witness = dict(extra or {})
        witness.update({n: self.specs[_AXES.index(n)].support[i] for n, i in zip(q, idx)})
        return CheckVerdict(cid, worst, witness, worst <= tolerance, tolerance, skipped, scope, description)

    def tv_equality(self, cid, target, given_a, given_b, tolerance, scope, description, extra=None):
        """TV distance between P(target|given_a) and P(target|given_b), given_b ⊆ given_a."""
        a, ev_a = self.cond(target, given_a)
        b, ev_b = self.cond(target, given_b)
        t_axes = tuple(_AXES.index(n) for n in target)
        dev = 0.5 * np.abs(a - b).sum(axis=t_axes, keepdims=True)
        defined = (ev_a >= ZERO_EVENT) & (ev_b >= ZERO_EVENT)
        return self.verdict(cid, dev, defined, given_a, tolerance, scope, description, extra)


def _worse(cid, verdicts, description):
    best = max(verdicts, key=lambda v: v.max_deviation)
    return CheckVerdict(cid, best.max_deviation, best.witness, all(v.satisfied for v in verdicts),
                        best.tolerance, sum(v.skipped for v in verdicts), best.scope, description)


def check_oi(model: HiddenVariableModel, tolerance: float = DEFAULT_TOLERANCE, scope: str = "wing") -> CheckVerdict:
    """Outcome independence, both directions; the worse direction is reported.

    wing 1: P(σ1|σ2,x,y,λ₁*) = P(σ1|x,y,λ₁*);  wing 2: P(σ2|σ1,x,y,λ₂*) = P(σ2|x,y,λ₂*)
    where λᵢ* is the hidden set selected by ``scope``.
    """
    j = _Joint(model)
    h1, h2 = _hidden(scope, 1), _hidden(scope, 2)
    v1 = j.tv_equality("OI", [S1], _SETTINGS + h1 + (S2,), _SETTINGS + h1, tolerance, scope, "", {"wing": 1})
    v2 = j.tv_equality("OI", [S2], _SETTINGS + h2 + (S1,), _SETTINGS + h2, tolerance, scope, "", {"wing": 2})
    return _worse("OI", [v1, v2], "P(σ1|σ2,x,y,λ) = P(σ1|x,y,λ) and mirror")


def check_pi(model: HiddenVariableModel, tolerance: float = DEFAULT_TOLERANCE, scope: str = "wing") -> CheckVerdict:
    """Parameter independence on both wings; the worse wing is reported."""
    j = _Joint(model)
    h1, h2 = _hidden(scope, 1), _hidden(scope, 2)
    v1 = j.tv_equality("PI", [S1], _SETTINGS + h1, (X,) + h1, tolerance, scope, "", {"wing": 1})
    v2 = j.tv_equality("PI", [S2], _SETTINGS + h2, (Y,) + h2, tolerance, scope, "", {"wing": 2})
    return _worse("PI", [v1, v2], "P(σ1|x,y,λ) = P(σ1|x,λ) and P(σ2|x,y,λ) = P(σ2|y,λ)")


def check_factorability(model: HiddenVariableModel, tolerance: float = DEFAULT_TOLERANCE,
                        scope: str = "wing") -> CheckVerdict:
    """Factorability P(σ1,σ2|x,y,λ) = P(σ1|x,λ₁*) P(σ2|y,λ₂*)."""
    j = _Joint(model)
    h1, h2 = _hidden(scope, 1), _hidden(scope, 2)
    full = (L0, L1, L2)
    lhs, ev = j.cond([S1, S2], _SETTINGS + full)
    f1, ev1 = j.cond([S1], (X,) + h1)
    f2, ev2 = j.cond([S2], (Y,) + h2)
    dev = np.abs(lhs - f1 * f2)
    defined = (ev >= ZERO_EVENT) & (ev1 >= ZERO_EVENT) & (ev2 >= ZERO_EVENT)
    return j.verdict("FACT", dev, defined, _AXES, tolerance, scope, "P(σ1,σ2|x,y,λ) = P(σ1|x,λ) P(σ2|y,λ)")


def check_mi(model: HiddenVariableModel, tolerance: float = DEFAULT_TOLERANCE) -> CheckVerdict:
    """Measurement independence: ρ(λ|x,y) equal across setting pairs and to the pooled ρ(λ)."""
    j = _Joint(model)
    pxy = model.setting_distribution.probs
    cond = model.joint().probs.sum(axis=(5, 6)).reshape(pxy.size, -1)
    pooled = j.marg((L0, L1, L2)).reshape(-1)
    rows = np.vstack([cond, pooled])
    pairs = [(a, b) for a in model.x.support for b in model.y.support] + [None]
    dev = 0.5 * np.abs(rows[:, None, :] - rows[None, :, :]).sum(axis=-1)
    i, k = np.unravel_index(int(np.argmax(dev)), dev.shape)
    worst = float(dev[i, k])
    a, b = pairs[i], pairs[k]
    if a is None:
        a, b = b, a
    witness = {X: a[0], Y: a[1], "x_alt": None if b is None else b[0], "y_alt": None if b is None else b[1]}
    return CheckVerdict("MI", worst, witness, worst <= tolerance, tolerance, 0, "full",
                        "ρ(λ|x,y) = ρ(λ|x',y') = ρ(λ)")


def _ns(cid, dist, model, remote, tolerance, description):
    """Compare a per-setting distribution dist[x, y, k] across pairs of remote settings."""
    if remote == Y:
        d, local_spec, remote_spec, local = dist, model.x, model.y, X
    else:
        d, local_spec, remote_spec, local = dist.transpose(1, 0, 2), model.y, model.x, Y
    dev = 0.5 * np.abs(d[:, :, None, :] - d[:, None, :, :]).sum(axis=-1)
    i, r, s = np.unravel_index(int(np.argmax(dev)), dev.shape)
    worst = float(dev[i, r, s])
    witness = {local: local_spec.support[i], remote: remote_spec.support[r],
               remote + "_alt": remote_spec.support[s]}
    return CheckVerdict(cid, worst, witness, worst <= tolerance, tolerance, 0, "full", description)


def check_no_signaling(model: HiddenVariableModel, tolerance: float = DEFAULT_TOLERANCE) -> list[CheckVerdict]:
    """The six marginal non-signaling conditions, wing 1 first."""
    _Joint(model)  # validation
    j = model.joint().probs
    nx, ny = j.shape[:2]
    return [
        _ns("NS1", j.sum(axis=(2, 3, 4, 6)), model, Y, tolerance, "P(σ1|x,y) = P(σ1|x,y')"),
        _ns("NS2", j.sum(axis=(2, 4, 5, 6)), model, Y, tolerance, "P(λ1|x,y) = P(λ1|x,y')"),
        _ns("NS3", j.sum(axis=(2, 4, 6)).reshape(nx, ny, -1), model, Y, tolerance,
            "P(σ1,λ1|x,y) = P(σ1,λ1|x,y')"),
        _ns("NS4", j.sum(axis=(2, 3, 4, 5)), model, X, tolerance, "P(σ2|x,y) = P(σ2|x',y)"),
        _ns("NS5", j.sum(axis=(2, 3, 5, 6)), model, X, tolerance, "P(λ2|x,y) = P(λ2|x',y)"),
        _ns("NS6", j.sum(axis=(2, 3, 5)).reshape(nx, ny, -1), model, X, tolerance,
            "P(σ2,λ2|x,y) = P(σ2,λ2|x',y)"),
    ]


def check_screening_off(model: HiddenVariableModel, tolerance: float = DEFAULT_TOLERANCE) -> CheckVerdict:
    """Whether P(λ1,λ2|λ0,x,y) = P(λ1|λ0,x) P(λ2|λ0,y) holds.

    ``satisfied`` means the equality holds; background models are expected
    to report it violated.
    """
    j = _Joint(model)
    lhs, ev = j.cond([L1, L2], (X, Y, L0))
    f1, ev1 = j.cond([L1], (X, L0))
    f2, ev2 = j.cond([L2], (Y, L0))
    dev = np.abs(lhs - f1 * f2)
    defined = (ev >= ZERO_EVENT) & (ev1 >= ZERO_EVENT) & (ev2 >= ZERO_EVENT)
    return j.verdict("SCREEN", dev, defined, (X, Y, L0, L1, L2), tolerance, "full",
                     "P(λ1,λ2|λ0,x,y) = P(λ1|λ0,x) P(λ2|λ0,y)")


def check_all(model: HiddenVariableModel, tolerance: float = DEFAULT_TOLERANCE,
              scope: str = "wing") -> dict[str, CheckVerdict]:
    out = {
        "OI": check_oi(model, tolerance, scope),
        "PI": check_pi(model, tolerance, scope),
        "MI": check_mi(model, tolerance),
        "FACT": check_factorability(model, tolerance, scope),
    }
    for v in check_no_signaling(model, tolerance):
        out[v.condition_id] = v
    out["SCREEN"] = check_screening_off(model, tolerance)
    return out


# -- independent re-evaluation of witnesses --------------------------------

def _cond(full, target, on):
    drop = [n for n in full.target_names if n not in target and n not in on]
    t, _ = marginalize(full, drop).condition(list(on), threshold=0.0)
    return t.reorder(target=list(target))


def _tv(t1, t2, w):
    return 0.5 * float(np.abs(t1.row({k: w[k] for k in t1.given_names})
                              - t2.row({k: w[k] for k in t2.given_names})).sum())


def recheck(model: HiddenVariableModel, verdict: CheckVerdict) -> float:
    """Recompute the deviation at ``verdict.witness`` through ConditionalTable operations."""
    w = verdict.witness
    if w is None:
        return 0.0
    full = model.full_joint()
    cid, scope = verdict.condition_id, verdict.scope
    if cid in ("OI", "PI"):
        wing = w["wing"]
        h = list(_hidden(scope, wing))
        s, other, local = (S1, S2, X) if wing == 1 else (S2, S1, Y)
        if cid == "OI":
            return _tv(_cond(full, [s], [X, Y] + h + [other]), _cond(full, [s], [X, Y] + h), w)
        return _tv(_cond(full, [s], [X, Y] + h), _cond(full, [s], [local] + h), w)
    if cid == "FACT":
        a = _cond(full, [S1, S2], [X, Y, L0, L1, L2])
        b1 = _cond(full, [S1], [X] + list(_hidden(scope, 1)))
        b2 = _cond(full, [S2], [Y] + list(_hidden(scope, 2)))

        def at(t, target):
            return t.prob(target, {k: w[k] for k in t.given_names})
        return abs(at(a, (w[S1], w[S2])) - at(b1, (w[S1],)) * at(b2, (w[S2],)))
    if cid == "MI":
        rho = _cond(full, [L0, L1, L2], [X, Y])
        r1 = rho.row({X: w[X], Y: w[Y]})
        if w["x_alt"] is None:
            r2 = marginalize(full, [X, Y, S1, S2]).probs
        else:
            r2 = rho.row({X: w["x_alt"], Y: w["y_alt"]})
        return 0.5 * float(np.abs(r1 - r2).sum())
    if cid in NS_IDS:
        k = NS_IDS.index(cid)
        wing_vars = ([S1], [L1], [S1, L1], [S2], [L2], [S2, L2])[k]
        remote = Y if k < 3 else X
        t = _cond(full, wing_vars, [X, Y])
        alt = dict(w)
        alt[remote] = w[remote + "_alt"]
        return 0.5 * float(np.abs(t.row({X: w[X], Y: w[Y]}) - t.row({X: alt[X], Y: alt[Y]})).sum())
    if cid == "SCREEN":
        a = _cond(full, [L1, L2], [X, Y, L0])
        b1 = _cond(full, [L1], [X, L0])
        b2 = _cond(full, [L2], [Y, L0])

        def at(t, target):
            return t.prob(target, {k: w[k] for k in t.given_names})
        return abs(at(a, (w[L1], w[L2])) - at(b1, (w[L1],)) * at(b2, (w[L2],)))
    raise ValueError(f"unknown condition {cid!r}")
