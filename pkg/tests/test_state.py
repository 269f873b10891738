import numpy as np
import pytest

from dense_reference import (
    collective_jump,
    dense_entropy,
    embed,
    random_sector_state,
    reverse_sites,
)
from lontraj.state import (
    SectorState,
    apply_jump,
    dense_cut_matrix,
    entanglement_entropy,
    entropy_profile,
    initial_state,
    jump_weights,
    sector_masks,
    site_occupations,
)
from lontraj.unitary import BeamSplitterParams, beamsplitter_unitary, haar_unitary

INV_SQRT2 = 1.0 / np.sqrt(2.0)
LN2 = float(np.log(2.0))


def balanced_splitter() -> np.ndarray:
    return beamsplitter_unitary(BeamSplitterParams(a=INV_SQRT2, b=INV_SQRT2, phi=np.pi))


def symmetric_bell() -> SectorState:
    return SectorState(2, 1, np.array([INV_SQRT2, INV_SQRT2]))


def state_from_mask(n_sites: int, mask: int) -> SectorState:
    n_excited = bin(mask).count("1")
    masks = sector_masks(n_sites, n_excited)
    amps = np.zeros(len(masks), dtype=complex)
    amps[np.searchsorted(masks, mask)] = 1.0
    return SectorState(n_sites, n_excited, amps)


def test_initial_state_all_excited_pair():
    state = initial_state(2, 2)
    assert state.dim == 1
    np.testing.assert_array_equal(state.amplitudes, [1.0])


def test_initial_state_excites_the_first_sites():
    state = initial_state(7, 4)
    masks = sector_masks(7, 4)
    index = int(np.argmax(np.abs(state.amplitudes)))
    assert masks[index] == 0b0001111
    assert state.amplitudes[index] == 1.0
    assert np.count_nonzero(state.amplitudes) == 1


def test_initial_state_all_ground():
    state = initial_state(5, 0)
    assert state.dim == 1
    np.testing.assert_array_equal(state.amplitudes, [1.0])


def test_initial_state_rejects_bad_excitation_count():
    with pytest.raises(ValueError):
        initial_state(3, 4)
    with pytest.raises(ValueError):
        initial_state(3, -1)


def test_sector_state_rejects_unnormalized():
    with pytest.raises(ValueError, match="not normalized"):
        SectorState(2, 1, np.array([1.0, 1.0]))


def test_jump_weights_uniform_from_all_excited():
    u = haar_unitary(4, np.random.default_rng(2))
    weights = jump_weights(initial_state(4, 4), u)
    np.testing.assert_allclose(weights, np.ones(4), atol=1e-12)


def test_jump_weights_bell_state_only_symmetric_detector():
    weights = jump_weights(symmetric_bell(), balanced_splitter())
    np.testing.assert_allclose(weights, [1.0, 0.0], atol=1e-12)


@pytest.mark.parametrize("n_excited", [1, 2])
def test_jump_weights_match_dense_reference(n_excited):
    rng = np.random.default_rng(31 + n_excited)
    u = haar_unitary(3, rng)
    state = random_sector_state(3, n_excited, rng)
    dense = embed(state)
    expected = []
    for detector in range(3):
        jumped = collective_jump(u, detector) @ dense
        expected.append(np.vdot(jumped, jumped).real)
    np.testing.assert_allclose(jump_weights(state, u), expected, atol=1e-12)


@pytest.mark.parametrize("n_sites,n_excited", [(4, 1), (5, 3), (6, 6)])
def test_jump_weights_sum_to_excitation_count(n_sites, n_excited):
    rng = np.random.default_rng(7)
    for _ in range(5):
        state = random_sector_state(n_sites, n_excited, rng)
        u = haar_unitary(n_sites, rng)
        assert abs(jump_weights(state, u).sum() - n_excited) < 1e-9


def test_jump_weights_rejects_ground_state():
    with pytest.raises(ValueError, match="no excitations"):
        jump_weights(initial_state(3, 0), np.eye(3, dtype=complex))


def test_apply_jump_symmetric_click_gives_bell_state():
    state = apply_jump(initial_state(2, 2), balanced_splitter(), 0)
    np.testing.assert_allclose(state.amplitudes, symmetric_bell().amplitudes, atol=1e-12)


def test_apply_jump_identity_clears_one_bit():
    state = apply_jump(initial_state(4, 4), np.eye(4, dtype=complex), 2)
    expected = state_from_mask(4, 0b1011)
    np.testing.assert_allclose(state.amplitudes, expected.amplitudes, atol=1e-14)


def test_apply_jump_matches_dense_reference():
    rng = np.random.default_rng(12)
    u = haar_unitary(4, rng)
    state = random_sector_state(4, 2, rng)
    detector = 1
    jumped = collective_jump(u, detector) @ embed(state)
    jumped /= np.linalg.norm(jumped)
    result = embed(apply_jump(state, u, detector))
    fidelity = abs(np.vdot(jumped, result))
    assert fidelity >= 1 - 1e-10


def test_apply_jump_rejects_zero_weight_detector():
    # Site 1 is in the ground state, so the local detector 1 cannot click.
    with pytest.raises(ValueError, match="zero weight"):
        apply_jump(initial_state(2, 1), np.eye(2, dtype=complex), 1)


def test_apply_jump_preserves_normalization_along_cascades():
    rng = np.random.default_rng(40)
    u = haar_unitary(6, rng)
    state = initial_state(6, 6)
    while state.n_excited > 0:
        weights = jump_weights(state, u)
        state = apply_jump(state, u, int(np.argmax(weights)))
        assert abs(np.linalg.norm(state.amplitudes) - 1.0) < 1e-10


def test_entropy_of_product_state_is_zero():
    state = state_from_mask(3, 0b101)
    for cut in (1, 2):
        assert entanglement_entropy(state, cut) == 0.0


def test_entropy_of_bell_state_is_ln2():
    assert abs(entanglement_entropy(symmetric_bell(), 1) - LN2) < 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_single_click_entropy_is_binary_entropy_of_row_mass(seed):
    rng = np.random.default_rng(100 + seed)
    n = 6
    u = haar_unitary(n, rng)
    detector = int(rng.integers(n))
    state = apply_jump(initial_state(n, n), u, detector)
    for cut in range(1, n):
        p = float(np.sum(np.abs(u[detector, :cut]) ** 2))
        expected = -p * np.log(p) - (1 - p) * np.log(1 - p)
        assert abs(entanglement_entropy(state, cut) - expected) < 1e-10


@pytest.mark.parametrize("n_sites,n_excited", [(4, 2), (5, 2), (6, 3)])
def test_entropy_symmetric_under_site_reversal(n_sites, n_excited):
    rng = np.random.default_rng(55)
    state = random_sector_state(n_sites, n_excited, rng)
    reversed_state = reverse_sites(state)
    for cut in range(1, n_sites):
        a = entanglement_entropy(state, cut)
        b = entanglement_entropy(reversed_state, n_sites - cut)
        assert abs(a - b) < 1e-10


@pytest.mark.parametrize("n_sites,n_excited", [(4, 2), (6, 3), (6, 5)])
def test_entropy_matches_dense_reference(n_sites, n_excited):
    rng = np.random.default_rng(60)
    state = random_sector_state(n_sites, n_excited, rng)
    dense = embed(state)
    for cut in range(1, n_sites):
        assert abs(entanglement_entropy(state, cut) - dense_entropy(dense, n_sites, cut)) < 1e-10


def test_entropy_within_schmidt_rank_cap():
    rng = np.random.default_rng(61)
    state = random_sector_state(6, 3, rng)
    for cut in range(1, 6):
        value = entanglement_entropy(state, cut)
        assert 0.0 <= value <= min(cut, 6 - cut) * LN2 + 1e-9


def test_entropy_rejects_bad_cut():
    state = initial_state(4, 2)
    with pytest.raises(ValueError):
        entanglement_entropy(state, 0)
    with pytest.raises(ValueError):
        entanglement_entropy(state, 4)


def test_entropy_profile_matches_per_cut_calls():
    rng = np.random.default_rng(62)
    state = random_sector_state(5, 2, rng)
    profile = entropy_profile(state)
    assert profile.shape == (4,)
    for cut in range(1, 5):
        assert profile[cut - 1] == entanglement_entropy(state, cut)


def test_dense_cut_matrix_reproduces_reduced_state():
    rng = np.random.default_rng(63)
    state = random_sector_state(5, 3, rng)
    mat = dense_cut_matrix(state, 2)
    rho = mat @ mat.conj().T
    dense = embed(state).reshape(1 << 3, 1 << 2).T
    np.testing.assert_allclose(rho, dense @ dense.conj().T, atol=1e-12)
    assert abs(np.trace(rho).real - 1.0) < 1e-12


def test_site_occupations_track_excited_sites():
    state = initial_state(5, 2)
    np.testing.assert_allclose(site_occupations(state), [1, 1, 0, 0, 0], atol=1e-14)
    rng = np.random.default_rng(64)
    random_state = random_sector_state(6, 4, rng)
    occupations = site_occupations(random_state)
    assert abs(occupations.sum() - 4.0) < 1e-10
    assert np.all(occupations >= 0)
