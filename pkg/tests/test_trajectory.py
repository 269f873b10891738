import numpy as np
import pytest
from scipy import stats

from dense_reference import random_sector_state
from lontraj.state import initial_state, jump_weights, site_occupations
from lontraj.trajectory import (
    TrajectoryRecord,
    attach_waiting_times,
    clicks_to_counts,
    evolve_clicks,
    read_records,
    record_from_json,
    record_to_json,
    run_trajectory,
    sample_click_sequence,
    sample_next_click,
    write_records,
)
from lontraj.unitary import BeamSplitterParams, beamsplitter_unitary, haar_unitary

INV_SQRT2 = 1.0 / np.sqrt(2.0)
LN2 = float(np.log(2.0))


def balanced_splitter() -> np.ndarray:
    return beamsplitter_unitary(BeamSplitterParams(a=INV_SQRT2, b=INV_SQRT2, phi=np.pi))


def test_first_click_uniform_chi_squared():
    n, samples = 6, 10_000
    u = haar_unitary(n, np.random.default_rng(5))
    state = initial_state(n, n)
    rng = np.random.default_rng(17)
    counts = np.zeros(n)
    for _ in range(samples):
        counts[sample_next_click(state, u, rng)] += 1
    expected = samples / n
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    assert chi2 < stats.chi2.ppf(1 - 1e-3, df=n - 1)


def test_bell_state_always_clicks_the_same_detector():
    u = balanced_splitter()
    rng = np.random.default_rng(3)
    state = initial_state(2, 2)
    for _ in range(20):
        first = sample_next_click(state, u, rng)
        after = run_trajectory(2, 2, u, 1, int(rng.integers(2**32)))
        assert after.clicks[0] == after.clicks[1]
        assert first in (0, 1)


def test_click_frequencies_match_weights():
    rng = np.random.default_rng(23)
    u = haar_unitary(3, rng)
    state = random_sector_state(3, 2, rng)
    weights = jump_weights(state, u)
    probs = weights / weights.sum()
    samples = 100_000
    draw_rng = np.random.default_rng(29)
    counts = np.zeros(3)
    for _ in range(samples):
        counts[sample_next_click(state, u, draw_rng)] += 1
    freqs = counts / samples
    stderr = np.sqrt(probs * (1 - probs) / samples)
    assert np.all(np.abs(freqs - probs) <= 4 * stderr)


def test_hom_sequences_bunch_and_split_evenly():
    u = balanced_splitter()
    runs = 4000
    pairs = {(0, 0): 0, (1, 1): 0}
    for i in range(runs):
        record = run_trajectory(2, 2, u, 1, 10_000 + i)
        assert record.clicks in pairs, "mixed HOM sequence observed"
        pairs[record.clicks] += 1
    freq = pairs[(0, 0)] / runs
    assert abs(freq - 0.5) <= 4 * np.sqrt(0.25 / runs)


def test_identity_network_never_entangles():
    record = run_trajectory(4, 4, np.eye(4, dtype=complex), 2, 99)
    assert record.entropies == (0.0,) * 5


def test_first_click_entropy_matches_closed_form():
    u = haar_unitary(4, np.random.default_rng(8))
    record = run_trajectory(4, 4, u, 2, 1234)
    p = float(np.sum(np.abs(u[record.clicks[0], :2]) ** 2))
    expected = -p * np.log(p) - (1 - p) * np.log(1 - p)
    assert abs(record.entropies[1] - expected) < 1e-10


@pytest.mark.parametrize("n_sites,n_excited", [(3, 2), (5, 5), (6, 1)])
def test_trajectory_terminates_in_the_ground_state(n_sites, n_excited):
    u = haar_unitary(n_sites, np.random.default_rng(n_sites))
    record = run_trajectory(n_sites, n_excited, u, 1, 7)
    assert len(record.clicks) == n_excited
    assert len(record.entropies) == n_excited + 1
    assert record.entropies[0] == 0.0
    assert record.entropies[-1] == 0.0


def test_identical_seed_reproduces_the_record():
    u = haar_unitary(5, np.random.default_rng(2))
    a = run_trajectory(5, 3, u, 2, 42)
    b = run_trajectory(5, 3, u, 2, 42)
    assert a == b


def test_sample_click_sequence_agrees_with_evolve_clicks():
    u = haar_unitary(5, np.random.default_rng(6))
    lean = sample_click_sequence(5, 4, u, np.random.default_rng(31))
    full = tuple(d for d, _ in evolve_clicks(initial_state(5, 4), u, np.random.default_rng(31)))
    assert lean == full


def test_averaged_occupations_are_unraveling_independent():
    # After k clicks every trajectory holds exactly M - k excitations, and on
    # average each site holds (M - k) / M of one, however the jumps are mixed.
    n, k, runs = 4, 2, 2000
    means = {}
    stderrs = {}
    for label, fresh_haar in (("identity", False), ("haar", True)):
        acc = np.zeros(n)
        acc_sq = np.zeros(n)
        for i in range(runs):
            rng = np.random.default_rng(500 + i)
            u = haar_unitary(n, rng) if fresh_haar else np.eye(n, dtype=complex)
            state = initial_state(n, n)
            for clicks, (_, state) in enumerate(evolve_clicks(state, u, rng), start=1):
                if clicks == k:
                    break
            occupations = site_occupations(state)
            assert abs(occupations.sum() - (n - k)) < 1e-9
            acc += occupations
            acc_sq += occupations**2
        means[label] = acc / runs
        variance = np.maximum(acc_sq / runs - means[label] ** 2, 0.0)
        stderrs[label] = np.sqrt(variance / runs)
    combined = np.sqrt(stderrs["identity"] ** 2 + stderrs["haar"] ** 2)
    assert np.all(np.abs(means["identity"] - means["haar"]) <= 5 * combined)


def test_waiting_time_mean_single_excitation():
    rng = np.random.default_rng(71)
    record = TrajectoryRecord(seed=0, clicks=(0,), entropies=(0.0, 0.0))
    samples = 100_000
    total = 0.0
    for _ in range(samples):
        total += attach_waiting_times(record, 1, rng).waiting_times[0]
    assert abs(total / samples - 1.0) <= 3 / np.sqrt(samples)


def test_waiting_time_total_for_three_excitations():
    rng = np.random.default_rng(72)
    record = TrajectoryRecord(seed=0, clicks=(0, 1, 2), entropies=(0.0,) * 4)
    samples = 30_000
    totals = np.empty(samples)
    for i in range(samples):
        totals[i] = sum(attach_waiting_times(record, 3, rng).waiting_times)
    expected = 1 / 3 + 1 / 2 + 1.0
    stderr = totals.std(ddof=1) / np.sqrt(samples)
    assert abs(totals.mean() - expected) <= 3 * stderr


def test_waiting_times_empty_for_clickless_record():
    record = TrajectoryRecord(seed=0, clicks=(), entropies=(0.0,))
    attached = attach_waiting_times(record, 0, np.random.default_rng(0))
    assert attached.waiting_times == ()


def test_waiting_times_cannot_be_attached_twice():
    record = TrajectoryRecord(seed=0, clicks=(0,), entropies=(0.0, 0.0), waiting_times=(0.5,))
    with pytest.raises(ValueError, match="already"):
        attach_waiting_times(record, 1, np.random.default_rng(0))


def test_clicks_to_counts_examples():
    np.testing.assert_array_equal(clicks_to_counts((0, 2, 0), 3), [2, 0, 1])
    np.testing.assert_array_equal(clicks_to_counts((), 3), [0, 0, 0])
    np.testing.assert_array_equal(clicks_to_counts((1, 1, 1, 1), 2), [0, 4])


def test_clicks_to_counts_rejects_out_of_range():
    with pytest.raises(ValueError):
        clicks_to_counts((0, 3), 3)


def test_record_validation():
    with pytest.raises(ValueError, match="entropies"):
        TrajectoryRecord(seed=0, clicks=(0,), entropies=(0.0,))
    with pytest.raises(ValueError, match="waiting time"):
        TrajectoryRecord(seed=0, clicks=(0,), entropies=(0.0, 0.0), waiting_times=())


def test_record_jsonl_roundtrip(tmp_path):
    u = haar_unitary(3, np.random.default_rng(4))
    records = [run_trajectory(3, 2, u, 1, seed) for seed in (1, 2)]
    records.append(attach_waiting_times(records.pop(), 2, np.random.default_rng(9)))
    path = tmp_path / "records.jsonl"
    write_records(path, records)
    loaded = read_records(path)
    assert loaded == records
    line = record_to_json(records[0])
    assert record_from_json(line) == records[0]
