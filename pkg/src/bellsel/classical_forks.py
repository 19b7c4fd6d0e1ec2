"""Non-quantum selection demos: a collider, the digit-parity Correlator, and
range restriction in the white-mice example.

Correlation is always the Pearson (phi) coefficient of two binary indicators.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .rng import check_seed, uniforms

PARITY_CELLS = ("even-even", "even-odd", "odd-even", "odd-odd")


def phi_coefficient(x: np.ndarray, y: np.ndarray) -> float | None:
    """Pearson correlation of two 0/1 arrays; None if either is constant or empty."""
    x = np.asarray(x, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    n = x.size
    if n == 0:
        return None
    sx, sy, sxy = int(x.sum()), int(y.sum()), int((x & y).sum())
    # integer arithmetic keeps degenerate cases exact (e.g. x == y gives 1.0)
    cov = n * sxy - sx * sy
    var = (n * sx - sx * sx) * (n * sy - sy * sy)
    if var == 0:
        return None
    r = cov / math.sqrt(var)
    return max(-1.0, min(1.0, r))


@dataclass
class ForkReport:
    population_corr: float | None
    restricted_corr: float | None
    restriction_label: str
    population_size: int
    restricted_size: int
    kind: str = ""  # "correlating" or "decorrelating" fork
    cells: dict = field(default_factory=dict)

    @property
    def direction(self) -> str | None:
        """``inducing`` when selection strengthens the correlation, else ``masking``."""
        if self.population_corr is None or self.restricted_corr is None:
            return None
        return "inducing" if abs(self.restricted_corr) > abs(self.population_corr) else "masking"

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "restriction": self.restriction_label,
            "population_corr": self.population_corr,
            "restricted_corr": self.restricted_corr,
            "population_size": self.population_size,
            "restricted_size": self.restricted_size,
            "direction": self.direction,
            "cells": self.cells,
        }


def _check_n(n: int, minimum: int) -> int:
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < minimum:
        raise ValueError(f"n must be an integer >= {minimum}, got {n!r}")
    return int(n)


def _check_prob(name: str, p: float) -> float:
    if not (isinstance(p, (int, float)) and 0.0 <= p <= 1.0):
        raise ValueError(f"{name} must be a probability in [0, 1], got {p!r}")
    return float(p)


def collider_demo(n: int, seed: int, condition_on: int = 0) -> ForkReport:
    """G, H fair independent bits with collider F = G xor H; condition on F."""
    n, seed = _check_n(n, 2), check_seed(seed)
    if condition_on not in (0, 1):
        raise ValueError("condition_on must be 0 or 1")
    u = uniforms(seed, "collider", 0, n, 2)
    g = (u[:, 0] < 0.5).astype(np.int8)
    h = (u[:, 1] < 0.5).astype(np.int8)
    f = g ^ h
    m = f == condition_on
    return ForkReport(
        phi_coefficient(g, h), phi_coefficient(g[m], h[m]), f"F={condition_on}",
        n, int(m.sum()), kind="correlating",
    )


# digit parity

@dataclass
class DigitSeq:
    digits: np.ndarray
    source: str = ""

    def __post_init__(self):
        d = np.asarray(self.digits, dtype=np.int64).reshape(-1)
        if d.size and (d.min() < 0 or d.max() > 9):
            raise ValueError("digits must lie in 0..9")
        self.digits = d

    def __len__(self) -> int:
        return int(self.digits.size)

    def head(self, count: int) -> "DigitSeq":
        return DigitSeq(self.digits[:count], self.source)


def fixture_path(name: str) -> Path:
    """Path of a shipped digit fixture (``"pi"`` or ``"e"``), 10^5 fractional digits each."""
    if name not in ("pi", "e"):
        raise ValueError(f"no digit fixture named {name!r}")
    return Path(str(resources.files("bellsel") / "data" / f"{name}_digits.txt"))


def load_digits(path: str | os.PathLike, count: int) -> DigitSeq:
    """First ``count`` fractional digits from a text file.

    Anything up to the first ``.`` is treated as the integer part and skipped;
    non-digit characters are ignored.
    """
    if isinstance(count, bool) or not isinstance(count, (int, np.integer)) or count < 1:
        raise ValueError(f"count must be a positive integer, got {count!r}")
    text = Path(path).read_text(encoding="utf-8")
    if "." in text:
        text = text.split(".", 1)[1]
    digits = [ord(ch) - 48 for ch in text if "0" <= ch <= "9"]
    if len(digits) < count:
        raise ValueError(f"{path}: {count} digits required, only {len(digits)} available")
    return DigitSeq(np.array(digits[:count]), str(path))


def synthetic_digits(n: int, seed: int, stream: str = "digits") -> DigitSeq:
    """Uniform i.i.d. digits 0..9 (so parities are fair and independent)."""
    n, seed = _check_n(n, 1), check_seed(seed)
    u = uniforms(seed, stream, 0, n, 1)[:, 0]
    return DigitSeq(np.minimum((u * 10).astype(np.int64), 9), f"synthetic:{stream}:{seed}")


def _parity_cells(x: np.ndarray, y: np.ndarray) -> dict[str, float]:
    code = 2 * x + y
    freq = np.bincount(code, minlength=4) / max(1, code.size)
    return {name: float(f) for name, f in zip(PARITY_CELLS, freq)}


def parity_correlator(s1: DigitSeq, s2: DigitSeq) -> ForkReport:
    """Parity correlation of two digit sequences, overall and within the set
    S of positions where the digits are not both odd."""
    if len(s1) != len(s2):
        raise ValueError(f"sequence lengths differ: {len(s1)} vs {len(s2)}")
    if len(s1) < 1:
        raise ValueError("sequences must be non-empty")
    x = (s1.digits % 2).astype(np.int64)
    y = (s2.digits % 2).astype(np.int64)
    in_s = ~((x == 1) & (y == 1))
    return ForkReport(
        phi_coefficient(x, y), phi_coefficient(x[in_s], y[in_s]), "not both odd",
        len(s1), int(in_s.sum()), kind="correlating",
        cells={"population": _parity_cells(x, y), "restricted": _parity_cells(x[in_s], y[in_s])},
    )


# white mice

def _mice(n: int, seed: int, p_white: float, p_k: float, p_l: float, stream: str):
    u = uniforms(seed, stream, 0, n, 3)
    white = u[:, 0] < p_white
    k = (white & (u[:, 1] < p_k)).astype(np.int8)
    l_ = (white & (u[:, 2] < p_l)).astype(np.int8)
    return white, k, l_


def mice_demo(n: int, seed: int, p_white: float = 0.5, p_k: float = 0.2, p_l: float = 0.2) -> ForkReport:
    """Diseases K and L share the white-hair genes as common cause.

    Restricting to white mice (postselection from a mixed colony) holds the
    common cause fixed and masks the K-L correlation.
    """
    n, seed = _check_n(n, 2), check_seed(seed)
    p_white, p_k, p_l = (_check_prob(*t) for t in (("p_white", p_white), ("p_k", p_k), ("p_l", p_l)))
    white, k, l_ = _mice(n, seed, p_white, p_k, p_l, "mice")
    return ForkReport(
        phi_coefficient(k, l_), phi_coefficient(k[white], l_[white]), "white only",
        n, int(white.sum()), kind="decorrelating",
    )


def mice_preselected(n: int, seed: int, p_k: float = 0.2, p_l: float = 0.2) -> ForkReport:
    """Breed white mice only: the restriction is built into the population."""
    n, seed = _check_n(n, 2), check_seed(seed)
    p_k, p_l = _check_prob("p_k", p_k), _check_prob("p_l", p_l)
    _, k, l_ = _mice(n, seed, 1.0, p_k, p_l, "mice-pre")
    corr = phi_coefficient(k, l_)
    return ForkReport(corr, corr, "white only (bred)", n, n, kind="decorrelating")


def mice_exact_corr(p_white: float = 0.5, p_k: float = 0.2, p_l: float = 0.2) -> float:
    """Closed-form population phi coefficient of K and L."""
    pk, pl = p_k * p_white, p_l * p_white
    cov = p_k * p_l * p_white * (1 - p_white)
    return cov / math.sqrt(pk * (1 - pk) * pl * (1 - pl))
