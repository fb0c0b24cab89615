import itertools
import json
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rangecap import (
    DegenerateGenerators,
    DuplicateGenerator,
    EmptyGeneratorSet,
    NonSymmetricGenerators,
    ValidationError,
    ball,
    group_from_spec,
    growth_profile,
    identity,
    inverse,
    load_group,
    make_group,
    multiply,
    word_length,
)
from rangecap.errors import BallTooLarge

from conftest import lattice

HEIS = make_group("heisenberg")
FREE3 = make_group("free_product_z2", {"arity": 3})
Z3 = lattice(3)

heis_elems = st.tuples(*[st.integers(-6, 6)] * 3)
free_words = st.lists(st.integers(1, 3), max_size=8).map(lambda w: FREE3.canonical(w))
z3_elems = st.tuples(*[st.integers(-20, 20)] * 3)


def test_heisenberg_product_convention():
    x, y = (1, 0, 0), (0, 1, 0)
    assert HEIS.multiply(x, y) == (1, 1, 1)
    assert HEIS.multiply(y, x) == (1, 1, 0)


def test_free_product_reduction():
    assert FREE3.multiply((1, 2), (2, 3)) == (1, 3)
    assert FREE3.multiply((1, 2), (2, 1)) == ()
    assert FREE3.canonical([1, 1, 2, 3, 3]) == (2,)


@pytest.mark.parametrize("G", [Z3, HEIS, FREE3], ids=["Z3", "heisenberg", "free3"])
def test_generators_symmetric(G):
    gens = set(G.generators)
    for g in G.generators:
        assert G.inverse(g) in gens
        assert G.multiply(g, G.inverse(g)) == G.identity()


@given(heis_elems, heis_elems, heis_elems)
def test_heisenberg_group_axioms(a, b, c):
    G = HEIS
    assert G.multiply(G.multiply(a, b), c) == G.multiply(a, G.multiply(b, c))
    assert G.multiply(a, G.inverse(a)) == G.identity()
    assert G.multiply(G.identity(), a) == a


@given(free_words, free_words, free_words)
def test_free_product_group_axioms(a, b, c):
    G = FREE3
    assert G.multiply(G.multiply(a, b), c) == G.multiply(a, G.multiply(b, c))
    assert G.multiply(G.inverse(a), a) == ()
    assert all(x != y for x, y in zip(a, a[1:]))


@given(z3_elems, z3_elems)
def test_word_length_triangle_inequality(a, b):
    la, lb, lab = word_length(Z3, a), word_length(Z3, b), word_length(Z3, multiply(Z3, a, b))
    assert lab <= la + lb
    assert word_length(Z3, inverse(Z3, a)) == la


def _heis_word(idx):
    x = HEIS.identity()
    for i in idx:
        x = HEIS.multiply(x, HEIS.generators[i])
    return x


heis_short = st.lists(st.integers(0, 3), max_size=6).map(_heis_word)


@given(heis_short, heis_short)
def test_heisenberg_triangle_inequality(a, b):
    G = HEIS
    assert word_length(G, G.multiply(a, b)) <= word_length(G, a) + word_length(G, b)


def _brute_l1_ball(d, r):
    return sum(1 for v in itertools.product(range(-r, r + 1), repeat=d) if sum(map(abs, v)) <= r)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_lattice_ball_sizes_match_brute_force(d):
    G = lattice(d)
    for r in range(6):
        assert len(ball(G, r)) == _brute_l1_ball(d, r)
    assert len(ball(G, 3, closed=False)) == _brute_l1_ball(d, 2)


def test_free_product_ball_sizes():
    # 1 + N sum_{k<r} (N-1)^k
    for r in range(7):
        assert len(ball(FREE3, r)) == 1 + 3 * sum(2**k for k in range(r))


def test_heisenberg_small_balls():
    sizes = [len(ball(HEIS, r)) for r in range(3)]
    assert sizes[:2] == [1, 5]
    # radius 2 by direct enumeration of all words of length <= 2
    words = {HEIS.multiply(a, b) for a in HEIS.generators for b in HEIS.generators}
    assert sizes[2] == len(words | set(HEIS.generators) | {HEIS.identity()})


def test_non_standard_generators_word_length():
    G = lattice(1, [[2], [-2], [3], [-3]])
    assert word_length(G, (1,)) == 2
    assert word_length(G, (5,)) == 2
    assert word_length(G, (0,)) == 0


def test_validation_errors():
    with pytest.raises(NonSymmetricGenerators):
        lattice(1, [[2]])
    with pytest.raises(DuplicateGenerator):
        lattice(1, [[1], [-1], [1]])
    with pytest.raises(EmptyGeneratorSet):
        make_group("lattice", {"dim": 2}, [])
    with pytest.raises(ValidationError):
        make_group("torus", {"dim": 2})
    with pytest.raises(ValidationError):
        make_group("lattice", {})
    assert issubclass(DegenerateGenerators, ValidationError)


def test_identity_generator_makes_lazy_walk():
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        G = lattice(1, [[0], [1], [-1]])
    assert G.lazy and w


def test_spec_round_trip(tmp_path):
    for G in (Z3, HEIS, FREE3, lattice(2, [[1, 1], [-1, -1], [1, -1], [-1, 1]])):
        spec = G.to_spec()
        H = group_from_spec(json.loads(json.dumps(spec)))
        assert H.generators == G.generators and H.backend == G.backend
    p = tmp_path / "g.json"
    p.write_text(json.dumps({"backend": "lattice", "dim": 2}))
    assert load_group(str(p)).generators == lattice(2).generators
    assert load_group('{"backend": "free_product_z2", "arity": 4}').size == 4
    with pytest.raises(ValidationError):
        load_group(str(tmp_path / "missing.json"))
    with pytest.raises(ValidationError):
        load_group("{not json")


def test_module_level_helpers():
    assert identity(Z3) == (0, 0, 0)
    assert multiply(Z3, (1, 2, 3), (1, 1, 1)) == (2, 3, 4)
    assert inverse(HEIS, (1, 0, 0)) == (-1, 0, 0)


def test_vector_advance_matches_multiply():
    rng = np.random.default_rng(0)
    steps = rng.integers(0, HEIS.size, size=(3, 40))
    pos = HEIS.advance(np.zeros((3, 3), dtype=np.int64), steps)
    for t in range(3):
        x = HEIS.identity()
        for k, s in enumerate(steps[t]):
            x = HEIS.multiply(x, HEIS.generators[s])
            assert tuple(pos[t, k]) == x


def test_growth_profiles():
    z = growth_profile(Z3, 10)
    assert abs(z.fitted_index - 3) < 0.4 and not z.superpolynomial
    h = growth_profile(HEIS, 12)
    assert abs(h.fitted_index - 4) < 0.4 and not h.superpolynomial
    f = growth_profile(FREE3, 10)
    assert f.superpolynomial


def test_ball_cap_raises():
    with pytest.raises(BallTooLarge) as exc:
        ball(FREE3, 30, cap=500)
    assert exc.value.radius_reached >= 1
