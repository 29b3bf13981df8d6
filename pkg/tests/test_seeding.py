import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import cdist

from srgmm import (InvalidInput, SeedTree, UniformShrink, boost_transform, dsquared_seed,
                   make_params, generate, strong_init, weak_init)
from srgmm.linalg import spectral_norm
from srgmm.seeding import (DisconnectedClusterWarning, SmallSampleWarning, choose_method,
                           distance_graph_components, weak_init_bound)

from conftest import small_instance

pytestmark = pytest.mark.filterwarnings("ignore::srgmm.seeding.SmallSampleWarning")


def exact_second_pick(X):
    D2 = cdist(X, X, "sqeuclidean")
    return (D2 / D2.sum(axis=1, keepdims=True)).mean(axis=0)


def test_two_points_second_pick_is_forced():
    X = np.array([[0.0], [1.0]])
    for s in range(20):
        c = dsquared_seed(X, 2, SeedTree(s))
        assert sorted(c[:, 0]) == [0.0, 1.0]


def test_all_identical_points_rejected():
    with pytest.raises(InvalidInput):
        dsquared_seed(np.ones((5, 2)), 2, SeedTree(0))


def test_second_pick_distribution_small_sample():
    X = np.random.default_rng(3).standard_normal((10, 2))
    rows = {tuple(r): i for i, r in enumerate(X)}
    counts = np.zeros(10)
    trials = 20_000
    root = SeedTree(77)
    for t in range(trials):
        c = dsquared_seed(X, 2, root.child(t))
        counts[rows[tuple(c[1])]] += 1
    tv = 0.5 * np.abs(counts / trials - exact_second_pick(X)).sum()
    assert tv < 0.02


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 6))
def test_dsquared_never_duplicates(seed, k):
    g = np.random.default_rng(seed)
    X = g.integers(0, 3, (12, 2)).astype(float)  # many duplicate rows
    if np.unique(X, axis=0).shape[0] < k:
        with pytest.raises(InvalidInput):
            dsquared_seed(X, k, SeedTree(seed))
        return
    c = dsquared_seed(X, k, SeedTree(seed))
    assert np.unique(c, axis=0).shape[0] == k


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 70), st.floats(0.2, 3.0), st.integers(1, 16))
def test_graph_components_match_dense_oracle(seed, n, gamma, block):
    X = np.random.default_rng(seed).standard_normal((n, 3)) * 2
    got = distance_graph_components(X, gamma, block=block)
    _, want = connected_components(cdist(X, X) <= gamma, directed=False)
    # same partition, and ids numbered by smallest member
    assert np.array_equal(got[:, None] == got[None], want[:, None] == want[None])
    firsts = [np.flatnonzero(got == c)[0] for c in range(got.max() + 1)]
    assert firsts == sorted(firsts)


def test_weak_init_k1_is_grand_mean(inst):
    np.testing.assert_allclose(weak_init(inst, 1, SeedTree(0)), inst.points.mean(0, keepdims=True))
    np.testing.assert_allclose(strong_init(inst, 1, SeedTree(0)), inst.points.mean(0, keepdims=True))


def _max_match_distance(centers, means):
    return cdist(means, centers).min(axis=1).max()


def test_weak_init_recovers_means():
    hits = 0
    for seed in range(20):
        inst = small_instance(k=3, d=20, N=3000, delta=30.0, seed=seed)
        c = weak_init(inst, 3, SeedTree(seed).child("init"))
        hits += _max_match_distance(c, inst.params.means) <= 2.0
    assert hits >= 19


def test_weak_init_tiny_cluster_completes():
    inst = small_instance(k=2, d=5, N=1000, delta=10.0, sizes=(2, 998))
    c = weak_init(inst, 2, SeedTree(0))
    assert c.shape == (2, 5) and np.isfinite(c).all()
    bound = weak_init_bound(inst)
    assert bound == pytest.approx(20 * math.sqrt(2) * spectral_norm(inst.centered()) / math.sqrt(2))


def test_boost_single_component_has_no_sentinel():
    inst = small_instance(k=1, d=3, N=60, delta=1.0)
    space = boost_transform(inst, SeedTree(0), gamma=1e3)
    assert space.n_components == 1
    G = space.mapped_points
    assert np.all(G < space.L)
    A = inst.points[space.S1] - inst.points.mean(0)
    B = inst.points[space.S2] - inst.points.mean(0)
    np.testing.assert_allclose(G, A @ B.T)


def test_boost_far_clusters_cross_entries_are_sentinel():
    inst = small_instance(k=2, d=4, N=200, delta=200.0)
    space = boost_transform(inst, SeedTree(1))
    assert space.n_components == 2
    G = space.mapped_points
    cross = inst.planted_labels[space.S1][:, None] != inst.planted_labels[space.S2][None, :]
    assert np.all(G[cross] == space.L)
    assert np.all(G[~cross] < space.L)


def test_boost_operator_matches_dense():
    inst = small_instance(k=3, d=5, N=120, delta=60.0, seed=2)
    space = boost_transform(inst, SeedTree(2))
    G = space.mapped_points
    V = np.random.default_rng(0).standard_normal((G.shape[1], 3))
    U = np.random.default_rng(1).standard_normal((G.shape[0], 2))
    np.testing.assert_allclose(space.matmat(V), G @ V, rtol=1e-9, atol=1e-6 * space.L)
    np.testing.assert_allclose(space.rmatmat(U), G.T @ U, rtol=1e-9, atol=1e-6 * space.L)


def test_boost_needs_two_points_per_cluster():
    inst = small_instance(k=2, d=3, N=20, delta=10.0, sizes=(1, 19))
    with pytest.raises(InvalidInput):
        boost_transform(inst, SeedTree(0))


def test_boost_mapped_mean_separation_ratio():
    for seed in range(3):
        inst = small_instance(k=2, d=30, N=400, delta=40.0, adversary=UniformShrink("uniform"),
                              seed=seed)
        space = boost_transform(inst, SeedTree(seed))
        lab1 = inst.planted_labels[space.S1]
        theta = space.mapped_means(lab1, 2)
        G = space.mapped_points
        dev = spectral_norm(G - theta[lab1])
        ratio = (np.linalg.norm(theta[0] - theta[1]) * math.sqrt(inst.N * inst.params.w_min)
                 / (math.sqrt(2 * 30) * dev))
        assert ratio >= 10


def test_graph_invariants_on_generated_instances():
    for seed in range(3):
        inst = small_instance(k=3, d=10, N=600, delta=80.0, seed=seed)
        with warnings.catch_warnings():
            warnings.simplefilter("error", DisconnectedClusterWarning)
            space = boost_transform(inst, SeedTree(seed))
        comp = space.graph_components
        for i in range(3):
            assert np.unique(comp[inst.planted_labels == i]).size == 1
        assert np.unique(comp).size == 3


def test_disconnected_cluster_warns():
    inst = small_instance(k=1, d=10, N=100, delta=1.0)
    with pytest.warns(DisconnectedClusterWarning):
        boost_transform(inst, SeedTree(0), gamma=0.5)


def test_strong_matches_weak_on_balanced_separated():
    inst = small_instance(k=3, d=10, N=1500, delta=60.0, seed=5)
    w = weak_init(inst, 3, SeedTree(5))
    s = strong_init(inst, 3, SeedTree(5))
    assert cdist(w, s).min(axis=1).max() <= 1.0


def test_strong_warns_on_small_sample(inst):
    with pytest.warns(SmallSampleWarning):
        strong_init(inst, 3, SeedTree(0))


def test_choose_method_auto():
    balanced = small_instance(k=2, d=3, N=100)
    skewed = small_instance(k=2, d=3, N=100, sizes=(10, 90))
    assert choose_method(balanced) == "weak"
    assert choose_method(skewed) == "strong"
    assert choose_method(skewed, "weak") == "weak"
    with pytest.raises(InvalidInput):
        choose_method(skewed, "bogus")


@pytest.mark.slow
def test_strong_init_imbalanced_instance():
    N = 20_000
    delta = 125 * math.sqrt(4 * math.log(N))
    hits = 0
    for seed in range(20):
        root = SeedTree(seed)
        p = make_params(4, 20, N, delta, sizes=(400, 6000, 6600, 7000), stream=root.child("params"))
        inst = generate(p, UniformShrink("uniform"), root.child("instance"))
        c = strong_init(inst, 4, root.child("init"))
        hits += _max_match_distance(c, p.means) <= delta / 24
    assert hits >= 18
