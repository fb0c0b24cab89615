import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rangecap import TooManyLevels, ValidationError, WindowOutOfBounds, make_group
from rangecap.walks import (
    dyadic_segments,
    exit_time,
    from_steps,
    local_times,
    path_to_csv,
    range_of,
    range_sizes,
    segment_boundaries,
    simulate,
    word_lengths,
)

from conftest import lattice

GROUPS = {
    "Z2": lattice(2),
    "Z3": lattice(3),
    "heisenberg": make_group("heisenberg"),
    "free3": make_group("free_product_z2", {"arity": 3}),
}
group_names = st.sampled_from(sorted(GROUPS))


@given(group_names, st.integers(0, 300), st.integers(0, 2**31))
def test_simulated_path_satisfies_recursion(name, n, seed):
    path = simulate(GROUPS[name], n, seed)
    assert path.n == n and len(path.positions) == n + 1
    assert path.positions[0] == path.group.identity()
    path.validate()


@given(group_names, st.integers(1, 200), st.integers(0, 10**6), st.data())
def test_range_invariants(name, n, seed, data):
    path = simulate(GROUPS[name], n, seed)
    m = data.draw(st.integers(0, n))
    k = data.draw(st.integers(m, n))
    R = range_of(path, m, k)
    assert 1 <= len(R) <= k - m + 1
    assert all(path.positions[j] in R for j in range(m, k + 1))
    # first-visit indices increase along the ordered members
    idx = list(R.members.values())
    assert idx == sorted(idx) and idx[0] == m
    # monotone in the window
    if k < n:
        assert len(range_of(path, m, k + 1)) >= len(R)
    if m > 0:
        assert len(range_of(path, m - 1, k)) >= len(R)


@given(group_names, st.integers(0, 200), st.integers(0, 10**6))
def test_range_sizes_match_sets(name, n, seed):
    path = simulate(GROUPS[name], n, seed)
    sizes = range_sizes(path)
    for j in (0, n // 3, n // 2, n):
        assert sizes[j] == len(set(path.positions[: j + 1]))
    assert np.all(np.diff(sizes) >= 0) and np.all(np.diff(sizes) <= 1)


def test_simulation_is_prefix_consistent():
    G = GROUPS["Z3"]
    long = simulate(G, 10000, 5)
    short = simulate(G, 3000, 5)
    assert short.positions == long.positions[:3001]
    other = simulate(G, 3000, 5, stream_id=1)
    assert other.positions != short.positions


def test_range_window_errors():
    path = simulate(GROUPS["Z2"], 20, 0)
    with pytest.raises(WindowOutOfBounds):
        range_of(path, 5, 25)
    with pytest.raises(WindowOutOfBounds):
        range_of(path, 6, 5)


def test_local_times_sum_to_window_length():
    path = simulate(GROUPS["heisenberg"], 500, 3)
    elems, counts = local_times(path, 10, 400)
    assert counts.sum() == 391
    assert len(elems) == len(range_of(path, 10, 400))


def test_recursion_worked_example_on_z():
    G = lattice(1)
    up, down = G.generators.index((1,)), G.generators.index((-1,))
    assert [p[0] for p in from_steps(G, [up, up, down]).positions] == [0, 1, 2, 1]
    assert simulate(G, 0, 3).positions == [(0,)]


def test_from_steps_rejects_bad_index():
    with pytest.raises(ValidationError):
        from_steps(GROUPS["Z2"], [0, 1, 9])


@given(group_names, st.integers(1, 300), st.integers(0, 6), st.integers(0, 1000))
def test_dyadic_segments_reassemble(name, n, L, seed):
    G = GROUPS[name]
    path = simulate(G, n, seed)
    if 2**L > n:
        with pytest.raises(TooManyLevels):
            dyadic_segments(path, L)
        return
    split = dyadic_segments(path, L)
    b = split.boundaries
    assert b[0] == 0 and b[-1] == n and len(b) == 2**L + 1
    lengths = np.diff(b)
    assert lengths.max() - lengths.min() <= 1 and np.all(lengths[:-1] >= lengths[1:])
    for seg, a in zip(split.segments, b[:-1]):
        assert seg.positions[0] == G.identity()
        # left-translating back recovers the original window
        base = path.positions[a]
        assert [G.multiply(base, x) for x in seg.positions] == path.positions[a : a + seg.n + 1]
    assert np.array_equal(np.concatenate([s.steps for s in split.segments]), path.steps)


def test_segment_boundaries_extra_steps_go_first():
    assert segment_boundaries(10, 2) == [0, 3, 6, 8, 10]


def test_exit_time_and_word_lengths():
    G = GROUPS["Z2"]
    path = simulate(G, 400, 11)
    lengths = np.abs(path.coords).sum(axis=1)
    r = 6
    t = exit_time(path, r)
    expect = int(np.argmax(lengths >= r)) if (lengths >= r).any() else None
    assert t == expect
    free = GROUPS["free3"]
    fp = simulate(free, 50, 2)
    wl = word_lengths(free, fp.positions, 100)
    assert list(wl) == [len(w) for w in fp.positions]


def test_path_csv_header_and_rows():
    path = simulate(GROUPS["Z2"], 5, 1)
    text = path_to_csv(path).splitlines()
    assert text[0] == "index,step,element"
    assert len(text) == 7
