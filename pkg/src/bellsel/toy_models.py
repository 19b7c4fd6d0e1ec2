"""Charlie's classical toy models: probabilistic retention and the four hoppers.

Alice and Bob contribute fair-coin settings and outcomes; all correlation in
the outputs comes from how Charlie keeps or sorts the 4-tuples.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .ensemble import SEL_CODES, Ensemble, concat
from .experiments import _check_shots, _meta, outcome_table
from .quantum_core import AngleConfig, BellLabel, _validate_weights, bell_state
from .rng import check_seed, cumulative, sample_cells, uniforms

RULES = ("qm", "perfect_match_only")


@dataclass
class RetentionResult:
    retained: Ensemble
    attempted: int
    retained_count: int

    @property
    def retained_fraction(self) -> float:
        return self.retained_count / self.attempted

    def summary(self) -> dict:
        return {
            "attempted": self.attempted,
            "retained": self.retained_count,
            "retained_fraction": self.retained_fraction,
            "config": self.retained.meta.get("config"),
            "seed": self.retained.meta.get("seed"),
        }


@dataclass
class HopperResult:
    hoppers: dict[BellLabel, Ensemble]
    attempted: int

    def sizes(self) -> dict[str, int]:
        return {lbl.name: len(ens) for lbl, ens in self.hoppers.items()}

    def pooled(self) -> Ensemble:
        """All hoppers merged back into run order, labelled by hopper."""
        meta = dict(next(iter(self.hoppers.values())).meta)
        meta.pop("hopper", None)
        meta.pop("retained", None)
        return concat(list(self.hoppers.values()), meta=meta)

    def summary(self) -> dict:
        sizes = self.sizes()
        return {
            "attempted": self.attempted,
            "sizes": sizes,
            "occupancy": {k: v / self.attempted for k, v in sizes.items()},
            "config": self.pooled().meta.get("config"),
            "seed": self.pooled().meta.get("seed"),
        }


def _coin_bits(u: np.ndarray):
    bits = (u[:, :4] < 0.5).astype(np.int8)
    return bits[:, 0], bits[:, 1], bits[:, 2], bits[:, 3]


def charlie_retention(
    shots: int,
    seed: int,
    target_state: BellLabel | str = BellLabel.C0,
    angles: AngleConfig | None = None,
    rule: str = "qm",
) -> RetentionResult:
    """Keep each coin-toss 4-tuple (a, A, b, B) with probability P(A,B|a,b) of the target state.

    ``rule="perfect_match_only"`` instead keeps exactly the runs with A == B.
    """
    shots, seed = _check_shots(shots), check_seed(seed)
    angles = angles or AngleConfig()
    if rule not in RULES:
        raise ValueError(f"rule must be one of {RULES}, got {rule!r}")
    target = BellLabel.parse(target_state)
    u = uniforms(seed, "retention", 0, shots, 5)
    a, b, A, B = _coin_bits(u)
    if rule == "qm":
        table = outcome_table([bell_state(target)], angles)[0]
        keep = u[:, 4] < table[a, b, 2 * A + B]
    else:
        keep = A == B
    config = {"protocol": "retention", "rule": rule, "target": target.name, "angles": angles.to_dict()}
    meta = _meta(config, seed, shots, 0, shots)
    n_keep = int(keep.sum())
    meta["retained"] = n_keep
    retained = Ensemble(
        np.arange(shots)[keep], a[keep], b[keep], A[keep], B[keep],
        np.full(n_keep, -1, dtype=np.int8), np.zeros(n_keep, dtype=np.int8), meta=meta,
    )
    return RetentionResult(retained, shots, n_keep)


def likelihood_table(angles: AngleConfig) -> np.ndarray:
    """``[state, a, b, cell]`` Born-rule table for the four Bell states."""
    return outcome_table([bell_state(lbl) for lbl in BellLabel], angles)


def _posterior(lik: np.ndarray, prior: np.ndarray) -> np.ndarray:
    joint = lik * prior.reshape((4,) + (1,) * (lik.ndim - 1))
    total = joint.sum(axis=0)
    if not np.all(total > 0):
        raise ValueError("prior leaves some outcome with zero total probability")
    return joint / total


def inverse_probabilities(
    a: int, b: int, A: int, B: int,
    angles: AngleConfig | None = None,
    prior: Sequence[float] | None = None,
) -> np.ndarray:
    """Posterior P(C_i | a, b, A, B) over the four Bell states (uniform prior by default)."""
    angles = angles or AngleConfig()
    pr = np.full(4, 0.25) if prior is None else _validate_weights(prior)
    lik = likelihood_table(angles)[:, a, b, 2 * A + B]
    return _posterior(lik, pr)


def charlie_hoppers(
    shots: int,
    seed: int,
    angles: AngleConfig | None = None,
    prior: Sequence[float] | None = None,
) -> HopperResult:
    """Sort every coin-toss 4-tuple into hopper H_i with probability P(C_i | a, b, A, B)."""
    shots, seed = _check_shots(shots), check_seed(seed)
    angles = angles or AngleConfig()
    pr = np.full(4, 0.25) if prior is None else _validate_weights(prior)
    post = _posterior(likelihood_table(angles), pr)  # [state, a, b, cell]
    cdf = cumulative(np.moveaxis(post, 0, -1))  # [a, b, cell, state]
    u = uniforms(seed, "hoppers", 0, shots, 5)
    a, b, A, B = _coin_bits(u)
    hop = sample_cells(cdf[a, b, 2 * A + B], u[:, 4]).astype(np.int8)
    config = {"protocol": "hoppers", "angles": angles.to_dict(), "prior": pr.tolist()}
    base = _meta(config, seed, shots, 0, shots)
    run = np.arange(shots)
    hoppers = {}
    for lbl in BellLabel:
        m = hop == int(lbl)
        meta = dict(base, hopper=lbl.name, retained=int(m.sum()))
        hoppers[lbl] = Ensemble(
            run[m], a[m], b[m], A[m], B[m], np.full(int(m.sum()), SEL_CODES[lbl.name], dtype=np.int8),
            np.zeros(int(m.sum()), dtype=np.int8), meta=meta,
        )
    return HopperResult(hoppers, shots)
