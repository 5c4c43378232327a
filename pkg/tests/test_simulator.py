import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fgavqe.simulator import AnsatzSpec, fidelity, param_count, prepare_state, probabilities, sample_bitstrings

from _support import dense_ansatz

angles = st.floats(-10, 10, allow_nan=False)


@pytest.mark.parametrize("n,l,count", [(3, 3, 9), (1, 1, 1), (4, 2, 8)])
def test_param_count(n, l, count):
    assert param_count(AnsatzSpec(n, l)) == count
    assert param_count(AnsatzSpec(n, l, "product")) == count


def test_spec_validation():
    with pytest.raises(ValueError):
        AnsatzSpec(0, 1)
    with pytest.raises(ValueError):
        AnsatzSpec(2, 0)
    with pytest.raises(ValueError):
        AnsatzSpec(2, 1, "circular")
    with pytest.raises(ValueError):
        AnsatzSpec(30, 1)


def test_zero_angles_give_all_zero_state():
    psi = prepare_state(AnsatzSpec(4, 3), np.zeros(12))
    assert psi[0] == 1 and np.count_nonzero(psi) == 1


def test_single_qubit_flip():
    psi = prepare_state(AnsatzSpec(1, 1), [np.pi])
    assert np.allclose(probabilities(psi), [0, 1])


def test_cnot_uses_qubit_zero_as_control():
    psi = prepare_state(AnsatzSpec(2, 2), [np.pi, 0, 0, 0])
    assert np.allclose(np.abs(psi), [0, 0, 0, 1])


def test_rejects_bad_parameters():
    with pytest.raises(ValueError):
        prepare_state(AnsatzSpec(2, 2), np.zeros(3))
    with pytest.raises(ValueError):
        prepare_state(AnsatzSpec(1, 1), [np.nan])


@pytest.mark.parametrize("family", ["entangling", "product"])
@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("layers", [1, 2, 3])
def test_matches_dense_matrices(family, n, layers):
    rng = np.random.default_rng(100 * n + layers)
    spec = AnsatzSpec(n, layers, family)
    for _ in range(100):
        theta = rng.uniform(0, 2 * np.pi, size=n * layers)
        assert np.abs(prepare_state(spec, theta) - dense_ansatz(n, layers, family, theta)).max() < 1e-10


@pytest.mark.parametrize("n", [7, 13])
def test_matches_dense_on_blocked_path(n):
    # n above the rotation block size exercises the multi-block branch
    rng = np.random.default_rng(n)
    theta = rng.uniform(0, 2 * np.pi, size=2 * n)
    for family in ("entangling", "product"):
        psi = prepare_state(AnsatzSpec(n, 2, family), theta)
        ref = dense_ansatz(n, 2, family, theta) if n <= 7 else None
        assert abs(np.linalg.norm(psi) - 1) < 1e-10
        if ref is not None:
            assert np.abs(psi - ref).max() < 1e-10


@given(st.integers(1, 8), st.integers(1, 3), st.sampled_from(["entangling", "product"]), st.data())
def test_norm_preserved(n, layers, family, data):
    theta = data.draw(st.lists(angles, min_size=n * layers, max_size=n * layers))
    psi = prepare_state(AnsatzSpec(n, layers, family), theta)
    assert abs(np.linalg.norm(psi) - 1) < 1e-10
    assert abs(probabilities(psi).sum() - 1) < 1e-10


def _schmidt_rank_one(psi, n):
    for k in range(1, n):
        # qubits 0..k-1 are the low index bits
        s = np.linalg.svd(psi.reshape(2 ** (n - k), 2**k), compute_uv=False)
        if s[1] >= 1e-8:
            return False
    return True


@given(st.integers(2, 7), st.integers(1, 4), st.data())
def test_product_family_factorizes(n, layers, data):
    theta = data.draw(st.lists(angles, min_size=n * layers, max_size=n * layers))
    assert _schmidt_rank_one(prepare_state(AnsatzSpec(n, layers, "product"), theta), n)


@given(st.integers(2, 7), st.data())
def test_single_layer_entangling_factorizes(n, data):
    theta = data.draw(st.lists(angles, min_size=n, max_size=n))
    assert _schmidt_rank_one(prepare_state(AnsatzSpec(n, 1), theta), n)


def test_entangling_family_can_entangle():
    psi = prepare_state(AnsatzSpec(2, 2), [np.pi / 2, 0, 0, 0])
    assert not _schmidt_rank_one(psi, 2)


def test_probabilities_examples():
    e = np.zeros(4)
    e[2] = 1
    assert probabilities(e).tolist() == [0, 0, 1, 0]
    assert np.allclose(probabilities(np.full(4, 0.5)), 0.25)


def test_sampling_basis_state():
    psi = np.zeros(8)
    psi[5] = 1
    assert sample_bitstrings(psi, 50, seed=1).tolist() == [5] * 50


def test_sampling_frequency():
    psi = np.array([1, 1]) / np.sqrt(2)
    freq = sample_bitstrings(psi, 100_000, seed=3).mean()
    assert abs(freq - 0.5) < 0.01


def test_sampling_is_seeded():
    psi = prepare_state(AnsatzSpec(3, 2), np.arange(6.0))
    a = sample_bitstrings(psi, 200, seed=9)
    assert np.array_equal(a, sample_bitstrings(psi, 200, seed=9))
    assert not np.array_equal(a, sample_bitstrings(psi, 200, seed=10))
    with pytest.raises(ValueError):
        sample_bitstrings(psi, 0, seed=1)


def test_fidelity_examples():
    psi = np.zeros(8)
    psi[3] = 1
    assert fidelity(psi, {3, 4}) == 1
    assert fidelity(psi, {0, 4}) == 0
    uniform = np.full(16, 0.25)
    assert fidelity(uniform, {1, 2, 7}) == pytest.approx(3 / 16)
    with pytest.raises(ValueError):
        fidelity(psi, set())
