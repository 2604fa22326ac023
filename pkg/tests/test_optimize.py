import itertools
import math

import numpy as np
import pytest

from bellforge.errors import BadSlice, BadStart, BadSymmetry, SpaceTooLarge
from bellforge.lattice import LADDER_MIRROR, bell_conditional, hexagon6, ladder10, lattice_chsh
from bellforge.metrics import TSIRELSON
from bellforge.optimize import (Assignment, SearchSpace, enumerate_orbits, evaluate, exhaustive_max, hexagon_grid,
                                hill_climb, homogeneous_beta_space, landscape_slice, lattice_for, orbit_labels,
                                paper_grid)
from bellforge.reproduce import GRID_OPTIMUM


def _small_ladder_space():
    return SearchSpace(ladder10(), (1.0,), (-1.0, 3.0), (1.0, 4.0), LADDER_MIRROR)


def _tiny_hexagon_space():
    return hexagon_grid(field_values=(-1.0, 1.0), coupling_values=(-1.0, 2.0))


def test_ladder_orbits():
    fo, eo, per_beta = enumerate_orbits(paper_grid())
    assert fo == (("a", "b"), ("1", "2"), ("3", "5"), ("4",), ("6", "8"), ("7",))
    assert len(eo) == 7
    assert per_beta == 3**6 * 4**7 == 11_943_936
    fl, el = orbit_labels(paper_grid())
    assert fl[0] == "a|b" and el[0] == "1-3|5-2" and el[-1] == "4-7"


def test_hexagon_orbits():
    fo, eo, per_beta = enumerate_orbits(hexagon_grid())
    assert (len(fo), len(eo)) == (4, 3)
    assert per_beta == 3**4 * 8**3


def test_identity_mirror_gives_singleton_orbits():
    fo, eo, _ = enumerate_orbits(SearchSpace(ladder10(), (1.0,), (0.0,), (1.0,)))
    assert len(fo) == 10 and len(eo) == 13


def test_bad_symmetry():
    bad = dict(LADDER_MIRROR, **{"3": "4", "4": "3", "5": "5"})
    with pytest.raises(BadSymmetry):
        enumerate_orbits(SearchSpace(ladder10(), (1.0,), (0.0,), (1.0,), bad))
    not_involution = dict(LADDER_MIRROR, **{"3": "5", "5": "4", "4": "3"})
    with pytest.raises(BadSymmetry):
        enumerate_orbits(SearchSpace(ladder10(), (1.0,), (0.0,), (1.0,), not_involution))


def test_empty_value_list():
    with pytest.raises(ValueError):
        SearchSpace(ladder10(), (), (0.0,), (1.0,))


def test_space_too_large():
    space = SearchSpace(ladder10(), (1.0,), tuple(range(10)), tuple(range(10)))
    with pytest.raises(SpaceTooLarge):
        exhaustive_max(space)


def test_single_point_space():
    space = SearchSpace(ladder10(), (1.0,), (0.0,), (1.0,), LADDER_MIRROR)
    res = exhaustive_max(space)
    assert res.evaluations == 1
    assert np.isclose(res.best_x, lattice_chsh(ladder10()).X_BI, rtol=0, atol=1e-12)


def test_exhaustive_matches_plain_evaluation_everywhere():
    space = _tiny_hexagon_space()
    fo, eo, total = enumerate_orbits(space)
    best = -math.inf
    for fields in itertools.product(space.field_values, repeat=len(fo)):
        for couplings in itertools.product(space.coupling_values, repeat=len(eo)):
            best = max(best, evaluate(space, Assignment(1.0, fields, couplings)).X_BI)
    res = exhaustive_max(space)
    assert res.evaluations == total == 128
    assert np.isclose(res.best_x, best, rtol=0, atol=1e-12)


@pytest.mark.parametrize("workers", [1, 4, 16])
def test_exhaustive_is_worker_independent(workers):
    space = _small_ladder_space()
    ref = exhaustive_max(space, workers=1, batch=512)
    res = exhaustive_max(space, workers=workers, batch=512)
    assert res.best_x == ref.best_x
    assert res.assignment == ref.assignment


def test_ties_go_to_first_grid_point():
    space = SearchSpace(ladder10(), (1.0,), (0.0, 0.0), (1.0, 1.0), LADDER_MIRROR)
    res = exhaustive_max(space, batch=64)
    assert res.assignment == Assignment(1.0, (0.0,) * 6, (1.0,) * 7)


def test_reevaluation_of_argmax():
    space = _small_ladder_space()
    res = exhaustive_max(space)
    assert abs(evaluate(space, res.assignment).X_BI - res.best_x) <= 1e-12


def test_hill_climb_dominated_by_exhaustive():
    space = _small_ladder_space()
    ex = exhaustive_max(space)
    for seed in range(5):
        hc = hill_climb(space, seed=seed, restarts=3)
        assert hc.best_x <= ex.best_x + 1e-12
        xs = [x for _, x in hc.trajectory]
        assert all(b > a for a, b in zip(xs, xs[1:]))


def test_hill_climb_is_seed_deterministic():
    a = hill_climb(_small_ladder_space(), seed=3, restarts=4)
    b = hill_climb(_small_ladder_space(), seed=3, restarts=4)
    assert a.best_x == b.best_x and a.assignment == b.assignment and a.evaluations == b.evaluations


def test_grid_optimum_is_a_fixed_point():
    res = hill_climb(paper_grid(), start=GRID_OPTIMUM, restarts=1)
    assert res.assignment == GRID_OPTIMUM
    assert len(res.trajectory) == 1
    assert res.best_x > TSIRELSON


def test_grid_optimum_value():
    x = evaluate(paper_grid(), GRID_OPTIMUM).X_BI
    assert abs(x - 2.997122527681786) <= 1e-12


def test_bad_start():
    with pytest.raises(BadStart):
        hill_climb(paper_grid(), start=Assignment(1.0, (0.0,) * 6, (1.0,) * 7))
    with pytest.raises(BadStart):
        hill_climb(paper_grid(), start=Assignment(1.0, (1.0,) * 5, (1.0,) * 7))


def test_lattice_for_respects_mirror():
    lat = lattice_for(paper_grid(), GRID_OPTIMUM)
    for i, j, c in lat.edges:
        assert lat.coupling(LADDER_MIRROR[i], LADDER_MIRROR[j]) == c
    for n, h in lat.fields.items():
        assert lat.fields[LADDER_MIRROR[n]] == h
    t = bell_conditional(lat).probs
    assert np.allclose(t, t.transpose(1, 0, 3, 2), rtol=0, atol=1e-12)


def test_slice_peaks_at_optimum():
    space = paper_grid()
    fl, el = orbit_labels(space)
    for free in [f"h{k}" for k in range(len(fl))] + [f"J{k}" for k in range(len(el))]:
        pts = landscape_slice(space, GRID_OPTIMUM, free)
        xs = [x for _, x in pts]
        assert max(xs) <= 2.997122527681786 + 1e-12


def test_slice_by_label_matches_index():
    space = paper_grid()
    assert landscape_slice(space, GRID_OPTIMUM, "J:4-7") == landscape_slice(space, GRID_OPTIMUM, "J6")
    assert landscape_slice(space, GRID_OPTIMUM, "h:a|b") == landscape_slice(space, GRID_OPTIMUM, "h0")


@pytest.mark.parametrize("free", ["gamma", "h9", "J:1-2", "h:"])
def test_bad_slice(free):
    with pytest.raises(BadSlice):
        landscape_slice(paper_grid(), GRID_OPTIMUM, free)


def test_homogeneous_beta_landscape():
    space = homogeneous_beta_space()
    frozen = Assignment(1.0, (0.0,) * 10, (1.0,) * 13)
    curve = dict(landscape_slice(space, frozen, "beta"))
    assert abs(curve[1.0] - (-0.667)) <= 0.0005
    assert abs(curve[0.05]) < 0.01
    for beta in (0.05, 0.5, 1.0, 2.5):
        assert np.isclose(curve[beta], lattice_chsh(ladder10(beta=beta)).X_BI, rtol=0, atol=1e-12)


def test_hexagon_evaluator_matches_direct_lattice():
    space = _tiny_hexagon_space()
    a = Assignment(1.0, (1.0, -1.0, 1.0, -1.0), (2.0, -1.0, 2.0))
    lat = lattice_for(space, a)
    assert lat.nodes == hexagon6().nodes
    assert np.isclose(landscape_slice(space, a, "beta")[0][1], lattice_chsh(lat).X_BI, rtol=0, atol=1e-12)
