"""Monitored decay of an emitter chain through a linear optical network.

Simulates the click-by-click stochastic trajectories of N two-level emitters
whose decay photons pass through an N-mode interferometer before detection,
checks the click statistics against exact permanent-based probabilities, and
measures the entanglement the monitoring induces between the emitters.
"""

__version__ = "0.1.0"

from .experiments import (
    DistributionReport,
    EntropyGrid,
    MixtureEntropyReport,
    UnitarySource,
    averaged_entropy_grid,
    distribution_comparison,
    entropy_bound,
    expected_tvd,
    max_averaged_entropy,
    mixture_entropy_report,
    scaling_sweep,
)
from .oracle import (
    build_repeated_matrix,
    conditional_click_probability,
    enumerate_outcomes,
    outcome_probability,
    permanent_naive,
    permanent_ryser,
    sequence_probability,
)
from .state import (
    SectorState,
    apply_jump,
    entanglement_entropy,
    initial_state,
    jump_weights,
    site_occupations,
)
from .trajectory import (
    TrajectoryRecord,
    attach_waiting_times,
    clicks_to_counts,
    run_trajectory,
    sample_next_click,
)
from .unitary import (
    BeamSplitterParams,
    BrickwallSpec,
    beamsplitter_unitary,
    compose_brickwall,
    haar_unitary,
    sample_haar_brickwall,
)

__all__ = [
    "BeamSplitterParams",
    "BrickwallSpec",
    "DistributionReport",
    "EntropyGrid",
    "MixtureEntropyReport",
    "SectorState",
    "TrajectoryRecord",
    "UnitarySource",
    "apply_jump",
    "attach_waiting_times",
    "averaged_entropy_grid",
    "beamsplitter_unitary",
    "build_repeated_matrix",
    "clicks_to_counts",
    "compose_brickwall",
    "conditional_click_probability",
    "distribution_comparison",
    "entanglement_entropy",
    "entropy_bound",
    "enumerate_outcomes",
    "expected_tvd",
    "haar_unitary",
    "initial_state",
    "jump_weights",
    "max_averaged_entropy",
    "mixture_entropy_report",
    "outcome_probability",
    "permanent_naive",
    "permanent_ryser",
    "run_trajectory",
    "sample_haar_brickwall",
    "sample_next_click",
    "scaling_sweep",
    "sequence_probability",
    "site_occupations",
]
