"""Exact two- and four-qubit probability engine.

Qubits are ordered most-significant first, so for two qubits the basis index
is ``2*q1 + q2`` and for four qubits ``8*q1 + 4*q2 + 2*q3 + q4``.

Bell-state convention::

    C0 = (|01> - |10>)/sqrt(2)   singlet
    C1 = (|01> + |10>)/sqrt(2)
    C2 = (|00> + |11>)/sqrt(2)
    C3 = (|00> - |11>)/sqrt(2)

Measurements are two-outcome real rotations: outcome 0 projects on
``cos(t)|0> + sin(t)|1>``, outcome 1 on ``-sin(t)|0> + cos(t)|1>``.
"""
from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

NORM_TOL = 1e-12
ANALYTIC_TOL = 1e-10

_R = 1 / math.sqrt(2)

# cell order used everywhere: (A, B) = (0,0), (0,1), (1,0), (1,1)
CELLS = ((0, 0), (0, 1), (1, 0), (1, 1))

# Index of the setting pair carrying the minus sign in each CHSH form.
# Pair index is 2*a + b.
CHSH_FORMS = (0, 1, 2, 3)


class BellLabel(enum.IntEnum):
    C0 = 0
    C1 = 1
    C2 = 2
    C3 = 3

    @classmethod
    def parse(cls, value: "BellLabel | int | str") -> "BellLabel":
        if isinstance(value, BellLabel):
            return value
        if isinstance(value, str):
            key = value.strip().upper()
            if key in cls.__members__:
                return cls[key]
            raise ValueError(f"unknown Bell label {value!r}")
        return cls(int(value))


_BELL_AMPS = {
    BellLabel.C0: (0.0, _R, -_R, 0.0),
    BellLabel.C1: (0.0, _R, _R, 0.0),
    BellLabel.C2: (_R, 0.0, 0.0, _R),
    BellLabel.C3: (_R, 0.0, 0.0, -_R),
}


class StateVec:
    """Normalized amplitude vector of 2 or 4 qubits (immutable)."""

    __slots__ = ("_amps",)

    def __init__(self, amplitudes: Sequence[complex] | np.ndarray):
        amps = np.array(amplitudes, dtype=complex).reshape(-1)
        if amps.size not in (4, 16):
            raise ValueError(f"state must have 4 or 16 amplitudes, got {amps.size}")
        if not np.all(np.isfinite(amps)):
            raise ValueError("state amplitudes must be finite")
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized (norm={norm!r})")
        amps.setflags(write=False)
        self._amps = amps

    @property
    def amplitudes(self) -> np.ndarray:
        return self._amps

    @property
    def n_qubits(self) -> int:
        return 2 if self._amps.size == 4 else 4

    def __len__(self) -> int:
        return self._amps.size

    def __repr__(self) -> str:
        return f"StateVec({np.array2string(self._amps, precision=6)})"

    def kron(self, other: "StateVec") -> "StateVec":
        return StateVec(np.kron(self._amps, other._amps))

    def fidelity(self, other: "StateVec") -> float:
        """|<self|other>|^2, insensitive to global phase."""
        return float(abs(np.vdot(self._amps, other._amps)) ** 2)

    def equals_up_to_phase(self, other: "StateVec", tol: float = ANALYTIC_TOL) -> bool:
        return len(self) == len(other) and abs(1.0 - self.fidelity(other)) <= tol


@dataclass(frozen=True)
class AngleConfig:
    """Analyzer angles (radians) selected by the setting bits a and b."""

    a0: float = 0.0
    a1: float = math.pi / 4
    b0: float = math.pi / 8
    b1: float = 3 * math.pi / 8

    def __post_init__(self):
        for name in ("a0", "a1", "b0", "b1"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ValueError(f"angle {name} must be a finite real, got {value!r}")
            object.__setattr__(self, name, float(value))

    def alpha(self, a: int) -> float:
        return self.a1 if a else self.a0

    def beta(self, b: int) -> float:
        return self.b1 if b else self.b0

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.a0, self.a1, self.b0, self.b1)

    def to_dict(self) -> dict:
        return {"a0": self.a0, "a1": self.a1, "b0": self.b0, "b1": self.b1}

    @classmethod
    def from_string(cls, text: str) -> "AngleConfig":
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 4:
            raise ValueError(f"expected four comma-separated angles, got {text!r}")
        return cls(*(_parse_angle(p) for p in parts))


_ANGLE = re.compile(r"^([-+]?)\s*(?:((?:\d+\.?\d*|\.\d+)(?:e[-+]?\d+)?)\s*\*?\s*)?pi(?:\s*/\s*(\d+\.?\d*))?$")


def _parse_angle(text: str) -> float:
    """A float, or a multiple of pi such as ``pi/8``, ``3pi/8``, ``-0.5*pi``."""
    m = _ANGLE.match(text.lower())
    if m is None:
        try:
            return float(text)
        except ValueError:
            raise ValueError(f"cannot parse angle {text!r}") from None
    coef = float(m.group(2)) if m.group(2) else 1.0
    div = float(m.group(3)) if m.group(3) else 1.0
    if div == 0:
        raise ValueError(f"cannot parse angle {text!r}")
    if m.group(1) == "-":
        coef = -coef
    return coef * math.pi / div


class JointDist(NamedTuple):
    """P(A,B) for fixed settings, cells ordered (0,0),(0,1),(1,0),(1,1)."""

    p00: float
    p01: float
    p10: float
    p11: float

    def __call__(self, A: int, B: int) -> float:
        return self[2 * A + B]

    def marginal_a(self, A: int) -> float:
        return self(A, 0) + self(A, 1)

    def marginal_b(self, B: int) -> float:
        return self(0, B) + self(1, B)

    def as_array(self) -> np.ndarray:
        return np.array(self, dtype=float)


def _check_dist(p: np.ndarray) -> JointDist:
    if np.any(p < -NORM_TOL) or np.any(p > 1 + NORM_TOL):
        raise ValueError(f"probabilities out of range: {p}")
    if abs(p.sum() - 1.0) > NORM_TOL:
        raise ValueError(f"probabilities do not sum to 1: {p.sum()!r}")
    return JointDist(*(float(x) for x in np.clip(p, 0.0, 1.0)))


def bell_state(label: BellLabel | int | str) -> StateVec:
    return StateVec(_BELL_AMPS[BellLabel.parse(label)])


def measurement_basis(theta: float) -> np.ndarray:
    """Rows are the outcome-0 and outcome-1 basis vectors at angle theta."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, s], [-s, c]])


def joint_probabilities(state: StateVec, alpha: float, beta: float) -> JointDist:
    """Born-rule outcome distribution for analyzers at alpha (qubit 1) and beta (qubit 2)."""
    if not isinstance(state, StateVec):
        state = StateVec(state)
    if len(state) != 4:
        raise ValueError("joint_probabilities needs a two-qubit state")
    psi = state.amplitudes.reshape(2, 2)
    # amplitude[A, B] = <u_A(alpha)| <v_B(beta)| psi>, bases are real
    amp = measurement_basis(alpha) @ psi @ measurement_basis(beta).T
    return _check_dist((np.abs(amp) ** 2).reshape(4))


def correlator(dist: JointDist) -> float:
    """E = P(A=B) - P(A!=B)."""
    e = (dist.p00 + dist.p11) - (dist.p01 + dist.p10)
    return min(1.0, max(-1.0, e))


def chsh_form(correlations: Sequence[float], form: int) -> float:
    """Sum of the four correlators E(a,b) with a minus sign on pair ``form`` (= 2a+b)."""
    if form not in CHSH_FORMS:
        raise ValueError(f"CHSH form must be one of {CHSH_FORMS}")
    return float(sum(-e if k == form else e for k, e in enumerate(correlations)))


def best_chsh_form(correlations: Sequence[float]) -> int:
    """The CHSH form with the largest |S|; ties resolve to the lowest index."""
    values = [abs(chsh_form(correlations, k)) for k in CHSH_FORMS]
    return int(np.argmax(values))


def setting_correlations(state: StateVec, angles: AngleConfig) -> list[float]:
    """E(a,b) for the four setting pairs in order 2a+b."""
    return [
        correlator(joint_probabilities(state, angles.alpha(a), angles.beta(b)))
        for a in (0, 1)
        for b in (0, 1)
    ]


def chsh_value(state: StateVec, angles: AngleConfig | None = None, form: int | None = None) -> float:
    """Exact CHSH combination.

    With ``form=None`` the form maximizing |S| is used, so the value is the
    largest CHSH violation available at these angles; any factorizable model
    keeps every form within [-2, 2].
    """
    angles = angles or AngleConfig()
    corr = setting_correlations(state, angles)
    if form is None:
        form = best_chsh_form(corr)
    return chsh_form(corr, form)


def _validate_weights(weights: Sequence[float]) -> np.ndarray:
    w = np.asarray(weights, dtype=float).reshape(-1)
    if w.size != 4:
        raise ValueError("exactly four mixture weights are required")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise ValueError(f"weights must be finite and nonnegative: {w}")
    if abs(w.sum() - 1.0) > NORM_TOL:
        raise ValueError(f"weights must sum to 1, got {w.sum()!r}")
    return w


def mixed_joint_probabilities(weights: Sequence[float], alpha: float, beta: float) -> JointDist:
    w = _validate_weights(weights)
    p = np.zeros(4)
    for label in BellLabel:
        if w[label]:
            p += w[label] * joint_probabilities(bell_state(label), alpha, beta).as_array()
    return _check_dist(p)


class BsmBranch(NamedTuple):
    label: BellLabel
    probability: float
    state: StateVec | None  # None when the branch has zero probability


def bsm_decompose(state: StateVec) -> list[BsmBranch]:
    """Bell-state measurement on qubits 2 and 3 of a four-qubit state.

    Returns, per Bell outcome, its probability and the normalized
    post-measurement state of qubits 1 and 4.
    """
    if not isinstance(state, StateVec):
        state = StateVec(state)
    if len(state) != 16:
        raise ValueError("bsm_decompose needs a four-qubit state")
    psi = state.amplitudes.reshape(2, 2, 2, 2)
    branches = []
    for label in BellLabel:
        bell = bell_state(label).amplitudes.reshape(2, 2)
        # contract <bell|_{23} with psi, leaving indices (q1, q4)
        cond = np.einsum("jk,ijkl->il", bell.conj(), psi).reshape(4)
        prob = float(np.vdot(cond, cond).real)
        if prob <= NORM_TOL:
            branches.append(BsmBranch(label, 0.0, None))
        else:
            branches.append(BsmBranch(label, prob, StateVec(cond / math.sqrt(prob))))
    total = sum(b.probability for b in branches)
    if abs(total - 1.0) > 1e-10:
        raise ValueError(f"BSM probabilities sum to {total!r}")
    return branches


def swap_input_state() -> StateVec:
    """Two independent singlets on (1,2) and (3,4)."""
    c0 = bell_state(BellLabel.C0)
    return c0.kron(c0)


def basis_state(bits: str) -> StateVec:
    """Computational basis state, e.g. ``basis_state("00")``."""
    if len(bits) not in (2, 4) or set(bits) - {"0", "1"}:
        raise ValueError(f"bits must be a 2- or 4-character 0/1 string, got {bits!r}")
    amps = np.zeros(2 ** len(bits), dtype=complex)
    amps[int(bits, 2)] = 1.0
    return StateVec(amps)
