import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from srgmm import (CoreCollapse, HalfspaceCollapse, Identity, InvalidParams, InvalidSpec,
                   MeanShift, SeedTree, UniformShrink, check_monotone, halfspace_collapse_map,
                   perturb, spec_from_json)
from srgmm.adversary import describe, shrink_factors

from conftest import small_instance


def test_halfspace_map_branches():
    mu = np.zeros(2)
    e = np.array([1.0, 0.0])
    np.testing.assert_array_equal(halfspace_collapse_map([-1.0, 3.0], mu, e), mu)
    np.testing.assert_array_equal(halfspace_collapse_map([1.0, 3.0], mu, e), [1.0, 3.0])
    np.testing.assert_array_equal(halfspace_collapse_map([0.0, 3.0], mu, e), [0.0, 3.0])


def test_halfspace_map_rejects_non_unit():
    with pytest.raises(InvalidParams):
        halfspace_collapse_map([1.0, 0.0], [0.0, 0.0], [2.0, 0.0])


def test_constant_shrink_zero_and_one_are_exact(inst):
    one = perturb(inst, UniformShrink("constant", lam=1.0), SeedTree(0))
    np.testing.assert_array_equal(one.points, inst.points)
    zero = perturb(inst, UniformShrink("constant", lam=0.0), SeedTree(0))
    np.testing.assert_array_equal(zero.points, inst.params.means[inst.planted_labels])


def test_core_collapse_fraction(inst):
    lam = shrink_factors(CoreCollapse(0.3), inst, SeedTree(1))
    for i, n in enumerate(inst.params.cluster_sizes):
        assert np.sum(lam[inst.planted_labels == i] == 0) == round(0.3 * n)


def test_halfspace_keeps_orthogonal_coordinates():
    inst = small_instance(k=1, d=3, N=500, delta=1.0)
    e = (1.0, 0.0, 0.0)
    out = perturb(inst, HalfspaceCollapse(directions=(e,)), SeedTree(0))
    mu = inst.params.means[0]
    y = inst.points
    neg = (y - mu) @ np.array(e) < 0
    np.testing.assert_array_equal(out.points[~neg], y[~neg])
    np.testing.assert_array_equal(out.points[neg], np.broadcast_to(mu, (neg.sum(), 3)))


def test_halfspace_cluster_index_checked(inst):
    with pytest.raises(InvalidSpec):
        perturb(inst, HalfspaceCollapse(clusters=(7,)), SeedTree(0))


@pytest.mark.parametrize("obj", [
    {"kind": "nope"},
    {"kind": "identity", "lam": 1},
    {"kind": "uniform_shrink", "dist": "constant", "lam": 1.5},
    {"kind": "core_collapse", "p": -0.1},
    {"kind": "halfspace_collapse", "directions": [[1.0, 1.0]]},
    {"lam": 0.5},
])
def test_spec_from_json_rejects(obj):
    with pytest.raises(InvalidSpec):
        spec_from_json(obj)


@pytest.mark.parametrize("spec", [Identity(), UniformShrink("uniform", low=0.2, high=0.9),
                                  UniformShrink("constant", lam=0.3), CoreCollapse(0.4),
                                  HalfspaceCollapse(), MeanShift(clusters=(0, 1))])
def test_spec_json_round_trip(spec):
    back = spec_from_json(describe(spec))
    assert describe(back) == describe(spec)
    assert type(back) is type(spec)


_specs = st.one_of(
    st.just(Identity()),
    st.builds(lambda lam: UniformShrink("constant", lam=lam), st.floats(0, 1)),
    st.builds(lambda a, b: UniformShrink("uniform", low=min(a, b), high=max(a, b)),
              st.floats(0, 1), st.floats(0, 1)),
    st.builds(CoreCollapse, st.floats(0, 1)),
    st.just(HalfspaceCollapse()),
    st.just(MeanShift()),
)


@settings(max_examples=40, deadline=None)
@given(_specs, st.integers(0, 2**32))
def test_every_strategy_is_monotone(spec, seed):
    inst = small_instance(k=3, d=4, N=90, seed=seed % 97)
    out = perturb(inst, spec, SeedTree(seed))
    assert check_monotone(out)
    mu = inst.params.means[inst.planted_labels]
    before = np.linalg.norm(inst.points - mu, axis=1)
    after = np.linalg.norm(out.points - mu, axis=1)
    assert np.all(after <= before * (1 + 1e-12) + 1e-12)


def test_mean_shift_constant_small_scale():
    inst = small_instance(k=1, d=5, N=200_000, delta=1.0, seed=4)
    e = np.zeros(5)
    e[2] = 1.0
    out = perturb(inst, MeanShift(directions=(tuple(e),)), SeedTree(0))
    shift = (out.empirical_means()[0] - out.params.means[0]) @ e
    assert shift == pytest.approx(1 / math.sqrt(2 * math.pi), abs=4 / math.sqrt(200_000))
