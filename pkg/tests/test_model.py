import json

import numpy as np
import pytest

from srgmm import Clustering, Covariance, Instance, InvalidInput, InvalidParams, MixtureParams
from srgmm import separation
from srgmm.model import cluster_means, monotone_lambdas


def test_params_basic_properties():
    p = MixtureParams(np.array([[0.0, 0.0], [3.0, 4.0]]), 1.0, (3, 7))
    assert (p.k, p.d, p.N) == (2, 2, 10)
    assert p.w_min == pytest.approx(0.3)
    assert separation(p) == pytest.approx(5.0)


def test_params_sigma_scales_separation():
    p = MixtureParams(np.array([[0.0], [6.0]]), 2.0, (1, 1))
    assert separation(p) == pytest.approx(3.0)


@pytest.mark.parametrize("kwargs", [
    dict(means=np.zeros((2, 2)), sigma=1.0, cluster_sizes=(1, 1)),  # identical means
    dict(means=np.eye(2), sigma=0.0, cluster_sizes=(1, 1)),
    dict(means=np.eye(2), sigma=1.0, cluster_sizes=(1,)),
    dict(means=np.eye(2), sigma=1.0, cluster_sizes=(0, 1)),
])
def test_params_rejects_bad_input(kwargs):
    with pytest.raises(InvalidParams):
        MixtureParams(**kwargs)


def test_covariance_above_sigma_squared_rejected():
    cov = Covariance("diagonal", [1.0, 4.0])
    with pytest.raises(InvalidParams):
        MixtureParams(np.zeros((1, 2)), 1.5, (5,), (cov,))
    MixtureParams(np.zeros((1, 2)), 2.0, (5,), (cov,))


def test_full_covariance_must_be_psd():
    with pytest.raises(InvalidParams):
        Covariance("full", [[1.0, 2.0], [2.0, 1.0]])


def test_separation_needs_two_components():
    with pytest.raises(InvalidParams):
        separation(MixtureParams(np.zeros((1, 3)), 1.0, (4,)))


@pytest.mark.parametrize("cov", [Covariance.spherical(0.5), Covariance("diagonal", [0.1, 0.2]),
                                 Covariance("full", [[0.2, 0.1], [0.1, 0.3]])])
def test_covariance_json_round_trip(cov):
    back = Covariance.from_json(json.loads(json.dumps(cov.to_json())))
    assert back.kind == cov.kind
    np.testing.assert_array_equal(np.asarray(back.value), np.asarray(cov.value))


def test_instance_label_counts_must_match_sizes():
    p = MixtureParams(np.array([[0.0], [5.0]]), 1.0, (2, 1))
    with pytest.raises(InvalidInput):
        Instance(np.zeros((3, 1)), np.array([0, 1, 1]), p)
    Instance(np.zeros((3, 1)), np.array([0, 0, 1]), p)


def test_instance_arrays_are_read_only(inst):
    with pytest.raises(ValueError):
        inst.points[0, 0] = 1.0


def test_instance_seed_must_be_u64():
    p = MixtureParams(np.array([[0.0]]), 1.0, (1,))
    with pytest.raises(InvalidInput):
        Instance(np.zeros((1, 1)), np.array([0]), p, seed=-1)


def test_cluster_means_with_empty_cluster():
    pts = np.array([[0.0], [2.0], [10.0]])
    m = cluster_means(pts, np.array([0, 0, 2]), 3)
    assert m[0, 0] == 1.0 and np.isnan(m[1, 0]) and m[2, 0] == 10.0
    m = cluster_means(pts, np.array([0, 0, 2]), 3, fallback=np.full((3, 1), -1.0))
    assert m[1, 0] == -1.0


def test_monotone_lambdas_recovers_shrink():
    p = MixtureParams(np.array([[1.0, 1.0]]), 1.0, (3,))
    y = np.array([[2.0, 3.0], [0.0, 1.0], [1.0, 1.0]])
    lam_true = np.array([0.25, 1.0, 0.7])
    x = 1.0 + lam_true[:, None] * (y - 1.0)
    inst = Instance(x, np.zeros(3, int), p, pre_perturbation_points=y)
    lam, ok = monotone_lambdas(inst)
    assert ok.all()
    np.testing.assert_allclose(lam[:2], lam_true[:2])
    assert lam[2] == 0.0  # draw on the mean: any lambda fits


def test_monotone_lambdas_flags_outward_move():
    p = MixtureParams(np.array([[0.0]]), 1.0, (1,))
    inst = Instance(np.array([[2.0]]), np.array([0]), p, pre_perturbation_points=np.array([[1.0]]))
    assert not monotone_lambdas(inst)[1][0]


def test_clustering_json_round_trip():
    c = Clustering(np.array([[0.0, 1.5]]), np.array([0, 0]), 3, False)
    back = Clustering.from_json(json.loads(json.dumps(c.to_json())))
    np.testing.assert_array_equal(back.centers, c.centers)
    np.testing.assert_array_equal(back.labels, c.labels)
    assert (back.iteration_count, back.converged) == (3, False)
