"""V-shaped and W-shaped Bell experiment generators.

Every shot consumes one row of counter-based uniforms, so results are a pure
function of ``(config, shots, seed)`` and can be produced in shards.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import __version__
from .ensemble import SEL_CODES, Ensemble, concat, config_digest
from .quantum_core import (
    AngleConfig,
    BellLabel,
    StateVec,
    _validate_weights,
    bell_state,
    bsm_decompose,
    joint_probabilities,
    swap_input_state,
)
from .rng import check_seed, cumulative, sample_cells, shard_bounds, uniforms

RANDOM_UNIFORM = "random"


@dataclass(frozen=True)
class VConfig:
    """State policy plus analyzer angles for the V-shaped experiment.

    ``state`` is a ``BellLabel`` (fixed), ``"random"`` (uniform over the four
    Bell states) or ``None`` with explicit ``weights``.
    """

    state: BellLabel | str | None = RANDOM_UNIFORM
    angles: AngleConfig = field(default_factory=AngleConfig)
    weights: tuple[float, float, float, float] | None = None

    def __post_init__(self):
        if self.weights is not None:
            if self.state not in (None, RANDOM_UNIFORM):
                raise ValueError("give either a fixed state or weights, not both")
            w = _validate_weights(self.weights)
            object.__setattr__(self, "weights", tuple(float(x) for x in w))
            object.__setattr__(self, "state", None)
        elif self.state == RANDOM_UNIFORM or self.state is None:
            object.__setattr__(self, "state", RANDOM_UNIFORM)
        else:
            object.__setattr__(self, "state", BellLabel.parse(self.state))
        if not isinstance(self.angles, AngleConfig):
            raise TypeError("angles must be an AngleConfig")

    @property
    def policy(self) -> str:
        if self.weights is not None:
            return "weighted"
        return "random" if self.state == RANDOM_UNIFORM else "fixed"

    def state_weights(self) -> np.ndarray:
        if self.weights is not None:
            return np.array(self.weights)
        if self.state == RANDOM_UNIFORM:
            return np.full(4, 0.25)
        w = np.zeros(4)
        w[int(self.state)] = 1.0
        return w

    def to_dict(self) -> dict:
        d = {"protocol": "V", "policy": self.policy, "angles": self.angles.to_dict()}
        if self.policy == "fixed":
            d["state"] = self.state.name
        if self.weights is not None:
            d["weights"] = list(self.weights)
        return d


def outcome_table(states: Sequence[StateVec], angles: AngleConfig) -> np.ndarray:
    """Array ``[state, a, b, cell]`` of Born-rule probabilities."""
    table = np.zeros((len(states), 2, 2, 4))
    for i, st in enumerate(states):
        if st is None:
            table[i] = 0.25  # zero-probability branch, never sampled
            continue
        for a in (0, 1):
            for b in (0, 1):
                table[i, a, b] = joint_probabilities(st, angles.alpha(a), angles.beta(b)).as_array()
    return table


def _check_shots(shots: int) -> int:
    if isinstance(shots, bool) or not isinstance(shots, (int, np.integer)) or shots < 1:
        raise ValueError(f"shots must be a positive integer, got {shots!r}")
    return int(shots)


def _shard_range(shots: int, shard: tuple[int, int] | None) -> tuple[int, int]:
    if shard is None:
        return 0, shots
    lo, hi = shard
    if not 0 <= lo <= hi <= shots:
        raise ValueError(f"shard {shard} outside [0, {shots}]")
    return int(lo), int(hi)


def _meta(config: dict, seed: int, shots: int, start: int, stop: int) -> dict:
    meta = {
        "tool": "bellsel",
        "version": __version__,
        "config": config,
        "config_digest": config_digest(config),
        "seed": seed,
        "shots": stop - start,
    }
    if (start, stop) != (0, shots):
        meta["shard"] = [start, stop]
        meta["total_shots"] = shots
    return meta


def _draw(table: np.ndarray, state_cdf: np.ndarray, u: np.ndarray):
    """Columns of u: state, a, b, outcome."""
    idx = sample_cells(state_cdf, u[:, 0])
    a = (u[:, 1] < 0.5).astype(np.int8)
    b = (u[:, 2] < 0.5).astype(np.int8)
    cdf = cumulative(table)[idx, a, b]
    cell = sample_cells(cdf, u[:, 3])
    return idx, a, b, (cell >> 1).astype(np.int8), (cell & 1).astype(np.int8)


def run_v(config: VConfig, shots: int, seed: int, shard: tuple[int, int] | None = None) -> Ensemble:
    """Generate the V-shaped experiment; ``shard`` restricts output to run ids in [lo, hi)."""
    if not isinstance(config, VConfig):
        raise TypeError("config must be a VConfig")
    shots, seed = _check_shots(shots), check_seed(seed)
    lo, hi = _shard_range(shots, shard)
    table = outcome_table([bell_state(lbl) for lbl in BellLabel], config.angles)
    u = uniforms(seed, "V", lo, hi, 4)
    idx, a, b, A, B = _draw(table, cumulative(config.state_weights()), u)
    sel = idx.astype(np.int8) + SEL_CODES["C0"]
    return Ensemble(
        np.arange(lo, hi), a, b, A, B, sel, np.zeros(hi - lo, dtype=np.int8),
        meta=_meta(config.to_dict(), seed, shots, lo, hi),
    )


def run_w(angles: AngleConfig, shots: int, seed: int, shard: tuple[int, int] | None = None) -> Ensemble:
    """Entanglement-swapping experiment: BSM on the inner pair of two singlets."""
    if not isinstance(angles, AngleConfig):
        raise TypeError("angles must be an AngleConfig")
    shots, seed = _check_shots(shots), check_seed(seed)
    lo, hi = _shard_range(shots, shard)
    branches = bsm_decompose(swap_input_state())
    table = outcome_table([br.state for br in branches], angles)
    probs = np.array([br.probability for br in branches])
    u = uniforms(seed, "W", lo, hi, 4)
    idx, a, b, A, B = _draw(table, cumulative(probs), u)
    sel = idx.astype(np.int8) + SEL_CODES["M0"]
    config = {"protocol": "W", "angles": angles.to_dict()}
    return Ensemble(
        np.arange(lo, hi), a, b, A, B, sel, np.ones(hi - lo, dtype=np.int8),
        meta=_meta(config, seed, shots, lo, hi),
    )


def run_state(
    state: StateVec,
    angles: AngleConfig,
    shots: int,
    seed: int,
    coin_labels: bool = False,
) -> Ensemble:
    """V-shaped runs on an arbitrary fixed two-qubit state.

    With ``coin_labels`` each run gets a label C0..C3 from a fair four-sided
    coin that is independent of everything else (a null selection).
    """
    shots, seed = _check_shots(shots), check_seed(seed)
    table = outcome_table([state], angles)
    u = uniforms(seed, "state", 0, shots, 5)
    _, a, b, A, B = _draw(table, np.array([1.0]), u[:, :4])
    if coin_labels:
        sel = np.minimum((u[:, 4] * 4).astype(np.int8), 3) + SEL_CODES["C0"]
    else:
        sel = np.full(shots, -1, dtype=np.int8)
    config = {
        "protocol": "V",
        "policy": "state",
        "amplitudes": [[float(z.real), float(z.imag)] for z in state.amplitudes],
        "angles": angles.to_dict(),
        "coin_labels": bool(coin_labels),
    }
    return Ensemble(np.arange(shots), a, b, A, B, sel, np.zeros(shots, dtype=np.int8),
                    meta=_meta(config, seed, shots, 0, shots))


def run_sharded(generate, shots: int, shards: int, **kwargs) -> Ensemble:
    """Run ``generate(shots=..., shard=...)`` per shard and merge by run id."""
    bounds = shard_bounds(shots, shards)
    with ThreadPoolExecutor(max_workers=min(shards, 8)) as pool:
        parts = list(pool.map(lambda s: generate(shots=shots, shard=s, **kwargs), bounds))
    meta = {k: v for k, v in parts[0].meta.items() if k not in ("shard", "total_shots")}
    meta["shots"] = shots
    return concat(parts, meta=meta)
