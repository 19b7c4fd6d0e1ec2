"""Bell correlations as selection artefacts: simulators and statistical checks."""

__version__ = "0.1.0"

from .quantum_core import (  # noqa: E402
    AngleConfig,
    BellLabel,
    JointDist,
    StateVec,
    bell_state,
    bsm_decompose,
    chsh_value,
    correlator,
    joint_probabilities,
    mixed_joint_probabilities,
)
from .ensemble import Ensemble, RunRecord  # noqa: E402
from .experiments import VConfig, run_v, run_w  # noqa: E402

__all__ = [
    "AngleConfig",
    "BellLabel",
    "Ensemble",
    "JointDist",
    "RunRecord",
    "StateVec",
    "VConfig",
    "bell_state",
    "bsm_decompose",
    "chsh_value",
    "correlator",
    "joint_probabilities",
    "mixed_joint_probabilities",
    "run_v",
    "run_w",
]
