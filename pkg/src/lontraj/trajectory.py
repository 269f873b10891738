"""Click-ordered stochastic trajectories of the monitored chain.

Between clicks the state is an excitation-number eigenstate, so the no-click
evolution only renormalizes it; the dynamics is therefore indexed by click
count rather than physical time.  Physical waiting times can be attached
afterwards from the exponential inter-click statistics.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .state import (
    SectorState,
    _lowered_raw,
    apply_all_jumps,
    entanglement_entropy,
    initial_state,
    sector_masks,
)


@dataclass(frozen=True)
class TrajectoryRecord:
    """One sampled trajectory: its seed, click sequence, and per-click entropies.

    ``entropies[k]`` is the entanglement entropy (nats) at the designated cut
    after ``k`` clicks, so the list is one longer than ``clicks``.
    ``waiting_times``, when attached, holds the time (units of one inverse
    decay rate) elapsed before each click.
    """

    seed: int
    clicks: tuple[int, ...]
    entropies: tuple[float, ...]
    waiting_times: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if len(self.entropies) != len(self.clicks) + 1:
            raise ValueError(
                f"{len(self.clicks)} clicks need {len(self.clicks) + 1} entropies, "
                f"got {len(self.entropies)}"
            )
        if self.waiting_times is not None:
            if len(self.waiting_times) != len(self.clicks):
                raise ValueError("need one waiting time per click")
            if any(t < 0 for t in self.waiting_times):
                raise ValueError("waiting times must be >= 0")


def _pick_detector(weights: np.ndarray, rng: np.random.Generator) -> int:
    # Inverse CDF over the weight prefix sums; side="right" skips zero-weight
    # detectors, whose cumulative entries repeat the previous value.
    total = weights.sum()
    if total <= 0.0:
        raise RuntimeError("all jump weights vanished for a normalized state")
    r = rng.random() * total
    detector = int(np.searchsorted(np.cumsum(weights), r, side="right"))
    if detector >= len(weights):
        # r fell in the ulp sliver between sum() and cumsum()[-1].
        detector = int(np.nonzero(weights)[0][-1])
    return detector


def sample_next_click(state: SectorState, u: np.ndarray, rng: np.random.Generator) -> int:
    """Draw the next clicking detector with probability proportional to its jump weight."""
    lowered = apply_all_jumps(state, u)
    weights = np.einsum("ij,ij->i", lowered, lowered.conj()).real
    return _pick_detector(weights, rng)


def evolve_clicks(
    state: SectorState, u: np.ndarray, rng: np.random.Generator
) -> Iterator[tuple[int, SectorState]]:
    """Yield (detector, post-click state) until the chain reaches the ground state."""
    while state.n_excited > 0:
        lowered = apply_all_jumps(state, u)
        weights = np.einsum("ij,ij->i", lowered, lowered.conj()).real
        detector = _pick_detector(weights, rng)
        amps = lowered[detector] / np.sqrt(weights[detector])
        state = SectorState(state.n_sites, state.n_excited - 1, amps)
        yield detector, state


def sample_click_sequence(
    n_sites: int, n_excited: int, u: np.ndarray, rng: np.random.Generator
) -> tuple[int, ...]:
    """Sample the full click sequence of one trajectory, skipping entropy bookkeeping.

    Works on raw amplitude arrays to keep per-click overhead low; draws the
    same clicks as :func:`evolve_clicks` for the same generator state.
    """
    if u.shape != (n_sites, n_sites):
        raise ValueError(f"unitary shape {u.shape} does not match {n_sites} sites")
    masks = sector_masks(n_sites, n_excited)
    amps = np.zeros(len(masks), dtype=complex)
    amps[np.searchsorted(masks, (1 << n_excited) - 1)] = 1.0
    clicks = []
    for e in range(n_excited, 0, -1):
        lowered = _lowered_raw(n_sites, e, amps, u)
        weights = np.einsum("ij,ij->i", lowered, lowered.conj()).real
        detector = _pick_detector(weights, rng)
        amps = lowered[detector] / np.sqrt(weights[detector])
        clicks.append(detector)
    return tuple(clicks)


def run_trajectory(
    n_sites: int, n_excited: int, u: np.ndarray, cut: int, seed: int
) -> TrajectoryRecord:
    """Run one trajectory from the standard initial state until all emitters decay.

    Records the entanglement entropy at ``cut`` before the first click and
    after every click; the terminal state is the all-ground product state
    with entropy 0.
    """
    rng = np.random.default_rng(seed)
    state = initial_state(n_sites, n_excited)
    clicks: list[int] = []
    entropies = [entanglement_entropy(state, cut)]
    for detector, state in evolve_clicks(state, u, rng):
        clicks.append(detector)
        entropies.append(entanglement_entropy(state, cut))
    return TrajectoryRecord(seed=int(seed), clicks=tuple(clicks), entropies=tuple(entropies))


def attach_waiting_times(
    record: TrajectoryRecord, n_excited_initial: int, rng: np.random.Generator
) -> TrajectoryRecord:
    """Attach exponential waiting times to a click record.

    Before click k (0-based) the chain holds ``n_excited_initial - k``
    excitations, and the total click rate equals that count (in units of the
    single-emitter decay rate), so the waiting time is exponential with that
    rate.
    """
    if record.waiting_times is not None:
        raise ValueError("record already has waiting times attached")
    times = tuple(
        float(rng.exponential(1.0 / (n_excited_initial - k))) for k in range(len(record.clicks))
    )
    return dataclasses.replace(record, waiting_times=times)


def clicks_to_counts(clicks, n_detectors: int) -> np.ndarray:
    """Per-detector click multiplicities of a sequence, as a length-n_detectors vector."""
    clicks = list(clicks)
    if any(not 0 <= c < n_detectors for c in clicks):
        raise ValueError(f"click indices must lie in [0, {n_detectors})")
    return np.bincount(clicks, minlength=n_detectors).astype(np.int64)


def record_to_json(record: TrajectoryRecord) -> str:
    obj = {
        "seed": record.seed,
        "clicks": list(record.clicks),
        "entropies": list(record.entropies),
    }
    if record.waiting_times is not None:
        obj["waiting_times"] = list(record.waiting_times)
    return json.dumps(obj)


def record_from_json(line: str) -> TrajectoryRecord:
    obj = json.loads(line)
    times = obj.get("waiting_times")
    return TrajectoryRecord(
        seed=int(obj["seed"]),
        clicks=tuple(int(c) for c in obj["clicks"]),
        entropies=tuple(float(s) for s in obj["entropies"]),
        waiting_times=None if times is None else tuple(float(t) for t in times),
    )


def write_records(path, records) -> None:
    """Write records as JSON lines, one trajectory per line."""
    with open(path, "w") as fh:
        for record in records:
            fh.write(record_to_json(record) + "\n")


def read_records(path) -> list[TrajectoryRecord]:
    with open(path) as fh:
        return [record_from_json(line) for line in fh if line.strip()]
