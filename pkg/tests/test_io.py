import numpy as np
import pytest

from srgmm import CoreCollapse, FormatError, SeedTree, UniformShrink, perturb
from srgmm.io import MAGIC, decode_instance, encode_instance, load_instance, save_instance

from conftest import small_instance


def assert_same(a, b):
    np.testing.assert_array_equal(a.points, b.points)
    np.testing.assert_array_equal(a.planted_labels, b.planted_labels)
    np.testing.assert_array_equal(a.params.means, b.params.means)
    assert a.params.sigma == b.params.sigma
    assert a.params.cluster_sizes == b.params.cluster_sizes
    assert (a.seed, a.adversary) == (b.seed, b.adversary)
    if a.pre_perturbation_points is None:
        assert b.pre_perturbation_points is None
    else:
        np.testing.assert_array_equal(a.pre_perturbation_points, b.pre_perturbation_points)


@pytest.mark.parametrize("kw", [{}, dict(covariance="diagonal"), dict(sigma=0.37),
                                dict(adversary=UniformShrink("uniform"))])
def test_round_trip(tmp_path, kw):
    inst = small_instance(k=3, d=4, N=50, seed=2**64 - 1, **kw)
    path = tmp_path / "x.srgmm"
    save_instance(inst, path)
    back = load_instance(path)
    assert_same(inst, back)
    assert encode_instance(back) == encode_instance(inst)


def test_without_pre_points():
    inst = small_instance().replace(pre_perturbation_points=None)
    assert_same(inst, decode_instance(encode_instance(inst)))


def test_layout_is_little_endian_row_major():
    inst = small_instance(k=2, d=3, N=4)
    data = encode_instance(inst)
    nl = data.index(b"\n")
    assert data[:nl].startswith(b"{") and MAGIC.encode() in data[:nl]
    body = data[nl + 1:]
    np.testing.assert_array_equal(np.frombuffer(body[:96], "<f8").reshape(4, 3), inst.points)
    np.testing.assert_array_equal(np.frombuffer(body[96:112], "<u4"), inst.planted_labels)


@pytest.mark.parametrize("mutate", [
    lambda b: b[:-1],
    lambda b: b + b"\x00",
    lambda b: b.replace(MAGIC.encode(), b"SRGMM9", 1),
    lambda b: b"no header",
    lambda b: b"{not json}\n",
    lambda b: b.replace(b'"N":', b'"Q":', 1),
])
def test_malformed_files(mutate):
    data = encode_instance(small_instance(k=2, d=2, N=6))
    with pytest.raises(FormatError):
        decode_instance(mutate(data))


def test_inconsistent_labels_rejected():
    inst = perturb(small_instance(k=2, d=2, N=6), CoreCollapse(0.5), SeedTree(0))
    data = bytearray(encode_instance(inst))
    nl = data.index(b"\n")
    off = nl + 1 + 6 * 2 * 8
    data[off:off + 4] = (1).to_bytes(4, "little")  # first label flips to cluster 1
    with pytest.raises(FormatError):
        decode_instance(bytes(data))


def test_missing_file(tmp_path):
    with pytest.raises(FormatError):
        load_instance(tmp_path / "nope.srgmm")
