"""Trajectory ensembles and their statistics.

Runs seeded batches of trajectories to estimate averaged entanglement
entropies on the (click count, cut) grid, compare empirical click outcomes
against the exact permanent-based probabilities, and check the sandwich
relation between mean trajectory entropy, the entropy of the averaged state,
and the Shannon entropy of the trajectory mixture.

Every estimator consumes trajectories in fixed-size chunks whose partial
sums are merged in chunk order, so results are byte-identical for any worker
count.  Randomness is derived per trajectory index from the master seed, so
they are also independent of chunking.
"""

from __future__ import annotations

from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .oracle import enumerate_outcomes, outcome_probability
from .state import (
    dense_cut_matrix,
    entanglement_entropy,
    entropy_profile,
    initial_state,
)
from .trajectory import evolve_clicks, sample_click_sequence
from .unitary import check_unitary, compose_brickwall, haar_unitary, sample_haar_brickwall

CHUNK_SIZE = 256  # fixed so that merge order never depends on the worker count
ENTROPY_CUTOFF = 1e-12
MIXTURE_MAX_SUBSYSTEM = 12


def derive_rng(master_seed: int, *path: int) -> np.random.Generator:
    """Independent generator for one node of the (trajectory, purpose) tree."""
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=path))


def derive_seed(master_seed: int, *path: int) -> int:
    """Stable 64-bit sub-seed for one node of the seed tree."""
    return int(np.random.SeedSequence(master_seed, spawn_key=path).generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class UnitarySource:
    """Where each trajectory's network unitary comes from.

    ``haar`` and ``brickwall`` draw a fresh unitary per trajectory; ``fixed``
    reuses the given matrix for every trajectory.
    """

    kind: str
    matrix: np.ndarray | None = None
    depth: int | None = None

    @classmethod
    def fixed(cls, u: np.ndarray) -> "UnitarySource":
        check_unitary(u)
        return cls(kind="fixed", matrix=np.asarray(u, dtype=complex))

    @classmethod
    def identity(cls, n_modes: int) -> "UnitarySource":
        return cls.fixed(np.eye(n_modes, dtype=complex))

    @classmethod
    def haar(cls) -> "UnitarySource":
        return cls(kind="haar")

    @classmethod
    def brickwall(cls, depth: int) -> "UnitarySource":
        if depth < 0:
            raise ValueError(f"depth must be >= 0, got {depth}")
        return cls(kind="brickwall", depth=depth)

    @property
    def fresh_per_sample(self) -> bool:
        return self.kind in ("haar", "brickwall")

    def draw(self, n_modes: int, rng: np.random.Generator) -> np.ndarray:
        if self.kind == "fixed":
            if self.matrix.shape[0] != n_modes:
                raise ValueError(f"fixed unitary is {self.matrix.shape[0]}-mode, need {n_modes}")
            return self.matrix
        if self.kind == "haar":
            return haar_unitary(n_modes, rng)
        if self.kind == "brickwall":
            return compose_brickwall(sample_haar_brickwall(n_modes, self.depth, rng))
        raise ValueError(f"unknown unitary source {self.kind!r}")

    def describe(self) -> dict:
        info = {"kind": self.kind}
        if self.depth is not None:
            info["depth"] = self.depth
        return info


def _chunks(n_samples: int) -> list[tuple[int, int]]:
    return [(lo, min(lo + CHUNK_SIZE, n_samples)) for lo in range(0, n_samples, CHUNK_SIZE)]


def _run_chunked(worker, task: tuple, n_samples: int, threads: int) -> list:
    spans = _chunks(n_samples)
    if threads <= 1 or len(spans) <= 1:
        return [worker((task, lo, hi)) for lo, hi in spans]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(worker, [(task, lo, hi) for lo, hi in spans]))


def _trajectory_unitary(source: UnitarySource, n_sites: int, master_seed: int, index: int):
    return source.draw(n_sites, derive_rng(master_seed, index, 0))


def _trajectory_rng(master_seed: int, index: int) -> np.random.Generator:
    return derive_rng(master_seed, index, 1)


@dataclass(frozen=True)
class EntropyGrid:
    """Mean trajectory entanglement entropy on the (click count, cut) grid.

    ``values[k, l-1]`` is the sample mean at click count k and cut l, in
    nats; ``stderr`` holds the matching standard errors of the mean.
    """

    n_sites: int
    n_excited: int
    values: np.ndarray
    stderr: np.ndarray
    n_samples: int


def _entropy_grid_chunk(args) -> tuple[np.ndarray, np.ndarray]:
    (n_sites, n_excited, source, master_seed), lo, hi = args
    shape = (n_excited + 1, n_sites - 1)
    sums = np.zeros(shape)
    square_sums = np.zeros(shape)
    for i in range(lo, hi):
        u = _trajectory_unitary(source, n_sites, master_seed, i)
        rng = _trajectory_rng(master_seed, i)
        profile = np.empty(shape)
        state = initial_state(n_sites, n_excited)
        profile[0] = entropy_profile(state)
        k = 0
        for _, state in evolve_clicks(state, u, rng):
            k += 1
            profile[k] = entropy_profile(state)
        sums += profile
        square_sums += profile * profile
    return sums, square_sums


def _mean_stderr(sums: np.ndarray, square_sums: np.ndarray, n: int):
    mean = sums / n
    if n < 2:
        return mean, np.zeros_like(mean)
    variance = np.maximum(square_sums - n * mean * mean, 0.0) / (n - 1)
    return mean, np.sqrt(variance / n)


def averaged_entropy_grid(
    n_sites: int,
    n_excited: int,
    source: UnitarySource,
    n_samples: int,
    master_seed: int,
    threads: int = 1,
) -> EntropyGrid:
    """Estimate the averaged trajectory entropy at every (click count, cut).

    For ``haar``/``brickwall`` sources each trajectory first draws its own
    unitary, then samples the click record under it.
    """
    if n_samples < 1:
        raise ValueError(f"need n_samples >= 1, got {n_samples}")
    if n_sites < 2:
        raise ValueError("entropy grids need at least 2 sites")
    task = (n_sites, n_excited, source, master_seed)
    parts = _run_chunked(_entropy_grid_chunk, task, n_samples, threads)
    sums = parts[0][0]
    square_sums = parts[0][1]
    for s, q in parts[1:]:
        sums = sums + s
        square_sums = square_sums + q
    mean, stderr = _mean_stderr(sums, square_sums, n_samples)
    return EntropyGrid(
        n_sites=n_sites,
        n_excited=n_excited,
        values=mean,
        stderr=stderr,
        n_samples=n_samples,
    )


def max_averaged_entropy(grid: EntropyGrid) -> tuple[float, int, int]:
    """Largest grid value and its (click count, cut); ties pick the smallest k, then l."""
    flat = int(np.argmax(grid.values))
    k, l_index = np.unravel_index(flat, grid.values.shape)
    return float(grid.values[k, l_index]), int(k), int(l_index) + 1


def entropy_bound(subsystem_size: int, n_sites: int) -> float:
    """Binary entropy h(l/N) in nats: the cap on the averaged entropy after one click."""
    if not 0 <= subsystem_size <= n_sites:
        raise ValueError(f"subsystem size {subsystem_size} outside [0, {n_sites}]")
    x = subsystem_size / n_sites
    if x == 0.0 or x == 1.0:
        return 0.0
    return float(-x * np.log(x) - (1.0 - x) * np.log(1.0 - x))


@dataclass(frozen=True)
class DistributionReport:
    """Exact vs. empirical click-outcome distribution for one fixed unitary."""

    outcomes: list[tuple[int, ...]]
    exact: np.ndarray
    empirical: np.ndarray
    tvd: float
    n_samples: int


def _distribution_chunk(args) -> np.ndarray:
    (n_sites, n_excited, u, master_seed, index_of), lo, hi = args
    counts = np.zeros(len(index_of), dtype=np.int64)
    for i in range(lo, hi):
        rng = _trajectory_rng(master_seed, i)
        clicks = sample_click_sequence(n_sites, n_excited, u, rng)
        outcome = tuple(np.bincount(clicks, minlength=n_sites))
        counts[index_of[outcome]] += 1
    return counts


def distribution_comparison(
    n_sites: int,
    n_excited: int,
    u: np.ndarray,
    n_samples: int,
    master_seed: int,
    threads: int = 1,
) -> DistributionReport:
    """Sample trajectories under a fixed unitary and compare to the exact outcome law."""
    if n_samples < 1:
        raise ValueError(f"need n_samples >= 1, got {n_samples}")
    outcomes = enumerate_outcomes(n_sites, n_excited)
    exact = np.array([outcome_probability(u, c, n_excited) for c in outcomes])
    index_of = {outcome: i for i, outcome in enumerate(outcomes)}
    task = (n_sites, n_excited, np.asarray(u, dtype=complex), master_seed, index_of)
    parts = _run_chunked(_distribution_chunk, task, n_samples, threads)
    counts = np.sum(parts, axis=0)
    empirical = counts / n_samples
    tvd = 0.5 * float(np.abs(exact - empirical).sum())
    return DistributionReport(
        outcomes=outcomes, exact=exact, empirical=empirical, tvd=tvd, n_samples=n_samples
    )


def expected_tvd(exact: np.ndarray, n_samples: int) -> float:
    """Expected total-variation distance of a multinomial sample from its law.

    Sums the half-normal means of the per-outcome frequency errors,
    sqrt(2 p (1-p) / (pi n)), and halves the total.
    """
    exact = np.asarray(exact)
    return float(np.sqrt(2.0 * exact * (1.0 - exact) / (np.pi * n_samples)).sum() / 2.0)


@dataclass(frozen=True)
class MixtureEntropyReport:
    """Sandwich of the averaged state's entropy between S-bar and S-bar + H.

    ``mean_trajectory_entropy`` (S-bar) is the average over trajectories of
    the subsystem entropy after ``click_count`` clicks;
    ``averaged_state_entropy`` is the entropy of the trajectory-averaged
    reduced state; ``shannon_mixture_entropy`` is the plug-in Shannon entropy
    of the empirical click-sequence distribution (biased low by roughly
    (#distinct - 1) / (2 n_samples), which ``tolerance`` accounts for).
    """

    mean_trajectory_entropy: float
    stderr_mean_entropy: float
    averaged_state_entropy: float
    shannon_mixture_entropy: float
    subsystem_size: int
    click_count: int
    n_samples: int
    n_distinct_sequences: int
    tolerance: float


def _mixture_chunk(args):
    (n_sites, n_excited, u, k, cut, master_seed), lo, hi = args
    entropy_sum = 0.0
    entropy_square_sum = 0.0
    rho_sum = np.zeros((1 << cut, 1 << cut), dtype=complex)
    histogram: Counter = Counter()
    for i in range(lo, hi):
        rng = _trajectory_rng(master_seed, i)
        state = initial_state(n_sites, n_excited)
        clicks: list[int] = []
        if k > 0:
            for detector, state in evolve_clicks(state, u, rng):
                clicks.append(detector)
                if len(clicks) == k:
                    break
        entropy = entanglement_entropy(state, cut)
        entropy_sum += entropy
        entropy_square_sum += entropy * entropy
        cut_matrix = dense_cut_matrix(state, cut)
        rho_sum += cut_matrix @ cut_matrix.conj().T
        histogram[tuple(clicks)] += 1
    return entropy_sum, entropy_square_sum, rho_sum, histogram


def _spectrum_entropy(weights: np.ndarray) -> float:
    weights = weights[weights >= ENTROPY_CUTOFF]
    value = float(-(weights * np.log(weights)).sum())
    return value if value > 0.0 else 0.0


def mixture_entropy_report(
    n_sites: int,
    n_excited: int,
    u: np.ndarray,
    k: int,
    cut: int,
    n_samples: int,
    master_seed: int,
    threads: int = 1,
) -> MixtureEntropyReport:
    """Estimate both sides of the mixture-entropy sandwich after ``k`` clicks.

    ``tolerance`` combines three standard errors of the mean trajectory
    entropy with the plug-in bias allowance of the Shannon term; the sandwich
    is expected to hold within it.
    """
    if not 0 <= k <= n_excited:
        raise ValueError(f"click count {k} outside [0, {n_excited}]")
    if not 1 <= cut <= n_sites - 1:
        raise ValueError(f"cut {cut} outside [1, {n_sites - 1}]")
    if cut > MIXTURE_MAX_SUBSYSTEM:
        raise ValueError(f"subsystem of {cut} sites too large to accumulate densely")
    if n_samples < 1:
        raise ValueError(f"need n_samples >= 1, got {n_samples}")
    task = (n_sites, n_excited, np.asarray(u, dtype=complex), k, cut, master_seed)
    parts = _run_chunked(_mixture_chunk, task, n_samples, threads)
    entropy_sum = 0.0
    entropy_square_sum = 0.0
    rho_sum = np.zeros((1 << cut, 1 << cut), dtype=complex)
    histogram: Counter = Counter()
    for s, q, rho, hist in parts:
        entropy_sum += s
        entropy_square_sum += q
        rho_sum = rho_sum + rho
        histogram.update(hist)
    mean = entropy_sum / n_samples
    if n_samples > 1:
        variance = max(entropy_square_sum - n_samples * mean * mean, 0.0) / (n_samples - 1)
        stderr = float(np.sqrt(variance / n_samples))
    else:
        stderr = 0.0
    rho = rho_sum / n_samples
    eigenvalues = np.linalg.eigvalsh(rho)
    averaged_state_entropy = _spectrum_entropy(np.maximum(eigenvalues, 0.0))
    frequencies = np.array([c / n_samples for c in histogram.values()])
    shannon = _spectrum_entropy(frequencies)
    tolerance = 3.0 * stderr + (len(histogram) - 1) / (2.0 * n_samples)
    return MixtureEntropyReport(
        mean_trajectory_entropy=float(mean),
        stderr_mean_entropy=stderr,
        averaged_state_entropy=averaged_state_entropy,
        shannon_mixture_entropy=float(shannon),
        subsystem_size=cut,
        click_count=k,
        n_samples=n_samples,
        n_distinct_sequences=len(histogram),
        tolerance=float(tolerance),
    )


@dataclass(frozen=True)
class ScalingPoint:
    """One row of a size sweep: the grid maximum and where it sits."""

    n_sites: int
    source: UnitarySource
    s_max: float
    k_max: int
    l_max: int
    stderr: float


def scaling_sweep(
    points: list[tuple[int, UnitarySource]],
    n_samples: int,
    master_seed: int,
    threads: int = 1,
) -> list[ScalingPoint]:
    """Run one entropy grid per (system size, source) and record each maximum."""
    rows = []
    for index, (n_sites, source) in enumerate(points):
        grid = averaged_entropy_grid(
            n_sites, n_sites, source, n_samples, derive_seed(master_seed, index), threads
        )
        s_max, k_max, l_max = max_averaged_entropy(grid)
        rows.append(
            ScalingPoint(
                n_sites=n_sites,
                source=source,
                s_max=s_max,
                k_max=k_max,
                l_max=l_max,
                stderr=float(grid.stderr[k_max, l_max - 1]),
            )
        )
    return rows


def grid_csv(grid: EntropyGrid) -> str:
    """Entropy grid as CSV rows (k, l, mean, stderr)."""
    lines = ["k,l,mean,stderr"]
    for k in range(grid.values.shape[0]):
        for l_index in range(grid.values.shape[1]):
            mean = float(grid.values[k, l_index])
            stderr = float(grid.stderr[k, l_index])
            lines.append(f"{k},{l_index + 1},{mean!r},{stderr!r}")
    return "\n".join(lines) + "\n"


def distribution_csv(report: DistributionReport) -> str:
    """Outcome table as CSV rows (outcome, exact, empirical, stderr).

    The per-outcome standard error is the binomial error of the empirical
    frequency at this sample size.
    """
    lines = ["outcome,exact,empirical,stderr"]
    for outcome, exact, empirical in zip(report.outcomes, report.exact, report.empirical):
        stderr = float(np.sqrt(empirical * (1.0 - empirical) / report.n_samples))
        label = " ".join(str(c) for c in outcome)
        lines.append(f"{label},{float(exact)!r},{float(empirical)!r},{stderr!r}")
    return "\n".join(lines) + "\n"


def scaling_csv(rows: list[ScalingPoint]) -> str:
    """Sweep results as CSV rows (n, source, depth, s_max, k_max, l_max, stderr)."""
    lines = ["n,source,depth,s_max,k_max,l_max,stderr"]
    for row in rows:
        depth = "" if row.source.depth is None else str(row.source.depth)
        lines.append(
            f"{row.n_sites},{row.source.kind},{depth},"
            f"{row.s_max!r},{row.k_max},{row.l_max},{row.stderr!r}"
        )
    return "\n".join(lines) + "\n"
