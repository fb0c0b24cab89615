import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rangecap import DegenerateGenerators, InsufficientCounts, make_group
from rangecap.backtrack import (
    decompose_sample,
    draw_counts,
    insert_backtracks,
    insertion_steps,
    no_backtrack_steps,
    reconstructed_batch,
    simulate_no_backtrack,
    success_parameter,
)
from rangecap.kernels import exact_kernel
from rangecap.rng import stream
from rangecap.walks import from_steps

from conftest import lattice

Z1 = lattice(1)


def test_success_parameter():
    assert success_parameter(Z1) == pytest.approx(1 - 1 / 4)
    assert success_parameter(lattice(3)) == pytest.approx(1 - 1 / 36)


def test_worked_example_on_z():
    # backbone 0,1,2,3,4 with one inserted back-and-forth after step 2
    right = Z1.generators.index((1,))
    backbone = from_steps(Z1, [right] * 4)
    dec = insert_backtracks(backbone, [1, 0])
    assert [p[0] for p in dec.reconstructed.positions] == [0, 1, 2, 1, 2, 3, 4]
    assert dec.intervals == [(3, 4), (7, 6)]
    assert dec.range_identity_holds()


def test_counts_too_short():
    backbone = from_steps(Z1, [0] * 6)
    with pytest.raises(InsufficientCounts):
        insertion_steps(Z1, backbone.steps, [0])


def test_degenerate_generators():
    with pytest.raises(DegenerateGenerators):
        no_backtrack_steps(make_group("free_product_z2", {"arity": 1}), 4, stream(0))


def test_backbone_never_double_backtracks():
    G = lattice(2)
    inv = G.inverse_index()
    steps = no_backtrack_steps(G, 400, stream(3), samples=50)
    prev = steps[:, 1:-1:2]  # X_{2k}
    nxt = steps[:, 2::2], steps[:, 3::2]  # (X_{2k+1}, X_{2k+2})
    assert not np.any((nxt[0] == inv[prev]) & (nxt[1] == prev))


def test_pair_frequencies_uniform_over_admissible():
    # on Z with {+1, -1}: 4 candidate pairs, one excluded, each remaining pair 1/3
    steps = no_backtrack_steps(Z1, 4, stream(5), samples=10**5)
    inv = Z1.inverse_index()
    prev = steps[:, 1]
    code = steps[:, 2] * 2 + steps[:, 3]
    for x in (0, 1):
        rows = code[prev == x]
        excluded = inv[x] * 2 + x
        freq = np.bincount(rows, minlength=4) / len(rows)
        assert freq[excluded] == 0
        se = np.sqrt((1 / 3) * (2 / 3) / len(rows))
        for c in range(4):
            if c != excluded:
                assert abs(freq[c] - 1 / 3) < 3 * se


def test_counts_geometric_mean():
    c = draw_counts(Z1, 2 * 20000, seed=4)
    p = success_parameter(Z1)
    assert len(c) == 20000
    assert c.mean() == pytest.approx((1 - p) / p, rel=0.08)


@given(st.integers(2, 60), st.integers(0, 10**6))
def test_range_identity_property(n, seed):
    for G in (Z1, make_group("heisenberg")):
        dec = decompose_sample(G, n, seed)
        assert dec.range_identity_holds()
        dec.reconstructed.validate()


def test_reconstructed_law_matches_kernel():
    steps = reconstructed_batch(Z1, 4, 200000, seed=1)
    endpoints = Z1.generator_array()[:, 0][steps].sum(axis=1)
    exact = exact_kernel(Z1, 4).distribution(4)
    vals, counts = np.unique(endpoints, return_counts=True)
    emp = dict(zip(vals.tolist(), counts / len(endpoints)))
    tv = 0.5 * sum(abs(emp.get(x, 0) - exact.get((x,), 0)) for x in range(-4, 5))
    assert tv < 0.01


def test_no_backtrack_path_is_valid():
    path = simulate_no_backtrack(lattice(3), 101, seed=2)
    path.validate()
    assert path.n == 101
