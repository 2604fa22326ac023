"""JSON documents for models, lattices, search spaces and reports; CSV curves.

Probabilities are written as decimal strings with 17 significant digits,
which round-trips every IEEE double exactly.
"""
from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from . import __version__
from .errors import ConfigError, IoError
from .lattice import SpinLattice
from .models import L0, L1, L2, S1, S2, TABLE_TARGETS, X, Y, HiddenVariableModel, build_model
from .optimize import Assignment, SearchResult, SearchSpace, orbit_labels
from .prob import ConditionalTable, VariableSpec, make_table, spin


def fmt(value: float) -> str:
    return "%.17g" % float(value)


def _decode_value(v):
    """JSON lists come back as tuples so composite supports stay hashable."""
    if isinstance(v, list):
        return tuple(_decode_value(u) for u in v)
    return v


def _nested(arr: np.ndarray):
    if arr.ndim == 0:
        return fmt(arr)
    return [_nested(a) for a in arr]


def table_to_doc(table: ConditionalTable) -> dict:
    return {"given": list(table.given_names), "target": list(table.target_names),
            "probs": _nested(table.probs)}


def table_from_doc(doc: Mapping, specs: Mapping[str, VariableSpec], strict: bool = True) -> ConditionalTable:
    try:
        given = [specs[n] for n in doc["given"]]
        target = [specs[n] for n in doc["target"]]
        arr = np.array(doc["probs"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed table document: {exc}") from None
    try:
        arr = arr.reshape([v.size for v in given + target])
    except ValueError as exc:
        raise ConfigError(f"table {doc['target']} has the wrong shape: {exc}") from None
    return make_table(given, target, arr, strict=strict)


def model_to_doc(model: HiddenVariableModel) -> dict:
    return {
        "kind": "model",
        "name": model.name,
        "setting_supports": {X: list(model.x.support), Y: list(model.y.support)},
        "lambda0": list(model.lambda0.support),
        "lambda1": list(model.lambda1.support),
        "lambda2": list(model.lambda2.support),
        "setting_distribution": _nested(model.setting_distribution.probs),
        "tables": {key: table_to_doc(model.tables[key]) for key in TABLE_TARGETS},
    }


def model_from_doc(doc: Mapping, strict: bool = True) -> HiddenVariableModel:
    """Rebuild a model; ``strict=False`` keeps unnormalized rows for ``validate`` to report."""
    try:
        sup = doc["setting_supports"]
        x = VariableSpec(X, tuple(_decode_value(v) for v in sup[X]))
        y = VariableSpec(Y, tuple(_decode_value(v) for v in sup[Y]))
        lams = [VariableSpec(name, tuple(_decode_value(v) for v in doc[name])) for name in (L0, L1, L2)]
        tables = doc["tables"]
        missing = set(TABLE_TARGETS) - set(tables)
        if missing:
            raise ConfigError(f"model document lacks tables {sorted(missing)}")
    except KeyError as exc:
        raise ConfigError(f"model document lacks field {exc}") from None
    specs = {X: x, Y: y, L0: lams[0], L1: lams[1], L2: lams[2], S1: spin(S1), S2: spin(S2)}
    t = {k: table_from_doc(tables[k], specs, strict) for k in TABLE_TARGETS}
    dist = None
    if doc.get("setting_distribution") is not None:
        dist = make_table([], [x, y], np.array(doc["setting_distribution"], dtype=float))
    return build_model(x, y, *lams, rho0=t["rho0"], lambda1_table=t["lambda1"], lambda2_table=t["lambda2"],
                       sigma1=t["sigma1"], sigma2=t["sigma2"], setting_distribution=dist,
                       name=doc.get("name", ""))


def lattice_to_doc(lattice: SpinLattice) -> dict:
    return {
        "kind": "lattice",
        "nodes": list(lattice.nodes),
        "edges": [[i, j, c] for i, j, c in lattice.edges],
        "fields": dict(lattice.fields),
        "beta": lattice.beta,
        "roles": dict(lattice.roles),
    }


def lattice_from_doc(doc: Mapping) -> SpinLattice:
    try:
        return SpinLattice(
            nodes=tuple(doc["nodes"]),
            edges=tuple(tuple(e) for e in doc["edges"]),
            fields=doc.get("fields", {}),
            beta=doc.get("beta", 1.0),
            roles=doc["roles"],
        )
    except KeyError as exc:
        raise ConfigError(f"lattice document lacks field {exc}") from None
    except (TypeError, IndexError) as exc:
        raise ConfigError(f"malformed lattice document: {exc}") from None


def space_to_doc(space: SearchSpace, template_ref: str | None = None) -> dict:
    return {
        "kind": "search-space",
        "template": template_ref if template_ref is not None else lattice_to_doc(space.template),
        "mirror": dict(space.mirror),
        "betas": list(space.betas),
        "field_values": list(space.field_values),
        "coupling_values": list(space.coupling_values),
    }


def space_from_doc(doc: Mapping, templates: Mapping[str, Any] | None = None) -> SearchSpace:
    """``template`` is either an embedded lattice document or the name of a preset in ``templates``."""
    try:
        ref = doc["template"]
        if isinstance(ref, str):
            if not templates or ref not in templates:
                raise ConfigError(f"unknown lattice template {ref!r}")
            template = templates[ref]()
        else:
            template = lattice_from_doc(ref)
        return SearchSpace(template, tuple(doc["betas"]), tuple(doc["field_values"]),
                           tuple(doc["coupling_values"]), doc.get("mirror"))
    except KeyError as exc:
        raise ConfigError(f"search-space document lacks field {exc}") from None


def assignment_to_doc(space: SearchSpace, a: Assignment) -> dict:
    fl, el = orbit_labels(space)
    return {"beta": a.beta, "fields": dict(zip(fl, a.fields)), "couplings": dict(zip(el, a.couplings))}


def assignment_from_doc(space: SearchSpace, doc: Mapping) -> Assignment:
    fl, el = orbit_labels(space)
    try:
        return Assignment(float(doc["beta"]), tuple(float(doc["fields"][k]) for k in fl),
                          tuple(float(doc["couplings"][k]) for k in el))
    except KeyError as exc:
        raise ConfigError(f"assignment lacks {exc}") from None


def result_to_doc(space: SearchSpace, result: SearchResult) -> dict:
    return {
        "strategy": result.strategy,
        "best_x": fmt(result.best_x),
        "assignment": assignment_to_doc(space, result.assignment),
        "evaluations": result.evaluations,
        "trajectory": [{"assignment": assignment_to_doc(space, a), "x": fmt(x)} for a, x in result.trajectory],
    }


def config_hash(config: Mapping) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


def provenance(config: Mapping, seed: int | None) -> dict:
    return {"tool": "bellforge", "version": __version__, "seed": seed, "config_hash": config_hash(config)}


def read_json(path: str | Path) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"no such file: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from None
    except OSError as exc:
        raise IoError(str(exc)) from None


def write_json(path: str | Path, doc: Any) -> None:
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=False)
            fh.write("\n")
    except OSError as exc:
        raise IoError(str(exc)) from None


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row in rows:
                w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    except OSError as exc:
        raise IoError(str(exc)) from None


def save_model(model: HiddenVariableModel, path) -> None:
    write_json(path, model_to_doc(model))


def load_model(path, strict: bool = True) -> HiddenVariableModel:
    return model_from_doc(read_json(path), strict)


def save_lattice(lattice: SpinLattice, path) -> None:
    write_json(path, lattice_to_doc(lattice))


def load_lattice(path) -> SpinLattice:
    return lattice_from_doc(read_json(path))
