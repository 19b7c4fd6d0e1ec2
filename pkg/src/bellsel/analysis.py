"""Statistical checks on ensembles: correlators, CHSH, MSBC, no-signalling, factorizability.

Everything is computed from the count array ``n[a, b, A, B]`` of a group, so
partial counts from partitions can simply be added. Standard errors use the
normal approximation. Empty cells are reported as undefined (``None``), never
imputed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .ensemble import SEL_LABELS, Ensemble
from .quantum_core import best_chsh_form, chsh_form

DEFAULT_Z = 4.0
ALL = "all"
PAIRS = ((0, 0), (0, 1), (1, 0), (1, 1))


def _check_group_by(group_by: str | None) -> str | None:
    if group_by in (None, "none"):
        return None
    if group_by in ("sel", "selection"):
        return "sel"
    raise ValueError(f"group_by must be none or sel, got {group_by!r}")


def counts(ens: Ensemble, mask: np.ndarray | None = None) -> np.ndarray:
    """Count array ``n[a, b, A, B]``."""
    code = 8 * ens.a.astype(np.int64) + 4 * ens.b + 2 * ens.A + ens.B
    if mask is not None:
        code = code[mask]
    return np.bincount(code, minlength=16).reshape(2, 2, 2, 2)


def grouped_counts(ens: Ensemble, group_by: str | None) -> dict[str, np.ndarray]:
    if _check_group_by(group_by) is None:
        return {ALL: counts(ens)}
    if not ens.has_sel:
        raise ValueError("grouping by selection needs a sel label on every record")
    return {SEL_LABELS[c]: counts(ens, ens.sel == c) for c in np.unique(ens.sel)}


# correlations

@dataclass
class PairStat:
    a: int
    b: int
    count: int
    E: float | None
    se: float | None

    @property
    def defined(self) -> bool:
        return self.E is not None

    def to_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "count": self.count, "E": self.E, "se": self.se}


@dataclass
class CorrelationReport:
    group: str
    pairs: dict[tuple[int, int], PairStat]
    counts: np.ndarray = field(repr=False)

    def __getitem__(self, key: tuple[int, int]) -> PairStat:
        return self.pairs[key]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def cell_frequencies(self, a: int, b: int) -> np.ndarray | None:
        """Empirical P(A,B|a,b) in cell order, or None when the pair is empty."""
        n = self.counts[a, b].reshape(4)
        return None if n.sum() == 0 else n / n.sum()

    def correlations(self) -> list[float | None]:
        return [self.pairs[p].E for p in PAIRS]

    def to_dict(self) -> dict:
        return {
            "group": self.group,
            "total": self.total,
            "pairs": [self.pairs[p].to_dict() for p in PAIRS],
        }


def correlation_report(n: np.ndarray, group: str = ALL) -> CorrelationReport:
    pairs = {}
    for a, b in PAIRS:
        cell = n[a, b]
        total = int(cell.sum())
        if total == 0:
            pairs[(a, b)] = PairStat(a, b, 0, None, None)
            continue
        e = float((cell[0, 0] + cell[1, 1]) - (cell[0, 1] + cell[1, 0])) / total
        pairs[(a, b)] = PairStat(a, b, total, e, math.sqrt(max(0.0, 1.0 - e * e) / total))
    return CorrelationReport(group, pairs, np.asarray(n))


def estimate_correlations(ens: Ensemble, group_by: str | None = None):
    """Correlator estimates per setting pair.

    Returns one ``CorrelationReport`` when ungrouped, else a dict keyed by
    selection label.
    """
    if len(ens) == 0:
        raise ValueError("ensemble is empty")
    groups = grouped_counts(ens, group_by)
    reports = {g: correlation_report(n, g) for g, n in groups.items()}
    return reports[ALL] if _check_group_by(group_by) is None else reports


# CHSH

@dataclass
class ChshEstimate:
    S: float | None
    se: float | None
    violates_classical: bool
    form: int | None
    z: float
    status: str = "ok"
    group: str = ALL

    def to_dict(self) -> dict:
        return {
            "group": self.group, "status": self.status, "S": self.S, "se": self.se,
            "abs_S": None if self.S is None else abs(self.S),
            "violates_classical": self.violates_classical, "form": self.form, "z": self.z,
        }


def estimate_chsh(report: CorrelationReport, z: float = DEFAULT_Z, form: int | None = None) -> ChshEstimate:
    """CHSH combination of the four estimated correlators.

    ``form`` picks the setting pair carrying the minus sign (2a+b); by default
    the form with the largest |S| is used, matching ``quantum_core.chsh_value``.
    The classical bound is violated when |S| - 2 > z * se.
    """
    stats = [report.pairs[p] for p in PAIRS]
    if not all(s.defined for s in stats):
        return ChshEstimate(None, None, False, form, z, "unavailable", report.group)
    es = [s.E for s in stats]
    if form is None:
        form = best_chsh_form(es)
    s_val = chsh_form(es, form)
    se = math.sqrt(sum(s.se ** 2 for s in stats))
    return ChshEstimate(s_val, se, bool(abs(s_val) - 2.0 > z * se), form, z, "ok", report.group)


def chsh_by_group(ens: Ensemble, group_by: str | None = None, z: float = DEFAULT_Z) -> dict[str, ChshEstimate]:
    reports = estimate_correlations(ens, group_by)
    if isinstance(reports, CorrelationReport):
        reports = {ALL: reports}
    return {g: estimate_chsh(r, z) for g, r in reports.items()}


# MSBC

@dataclass
class Discrepancy:
    sel: str
    a: int
    b: int
    E_sub: float
    E_super: float
    sigma: float
    zscore: float
    significant: bool
    direction: str  # "inducing" or "masking"

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class MsbcReport:
    super_report: CorrelationReport
    sub_reports: dict[str, CorrelationReport]
    msbc_holds: bool
    max_discrepancy: float
    discrepancies: list[Discrepancy]
    z: float

    @property
    def flagged(self) -> list[Discrepancy]:
        return [d for d in self.discrepancies if d.significant]

    def to_dict(self) -> dict:
        return {
            "msbc_holds": self.msbc_holds,
            "max_discrepancy": self.max_discrepancy,
            "z": self.z,
            "super": self.super_report.to_dict(),
            "sub": {k: v.to_dict() for k, v in self.sub_reports.items()},
            "flagged": [d.to_dict() for d in self.flagged],
        }


def _zscore(diff: float, sigma: float) -> float:
    if sigma > 0:
        return diff / sigma
    return 0.0 if diff == 0 else math.copysign(math.inf, diff)


def msbc_test(ens: Ensemble, z: float = DEFAULT_Z) -> MsbcReport:
    """Minimal selection-bias test: do correlations differ between the whole
    ensemble and any subensemble picked out by the selection label?

    Only statistics are consulted. The combined sigma adds sub and super
    variances, which is conservative because the subensemble is part of the
    super-ensemble.
    """
    if len(ens) == 0:
        raise ValueError("ensemble is empty")
    if not ens.has_sel:
        missing = int(np.argmax(ens.sel < 0))
        raise ValueError(f"msbc_test needs a sel label on every record (run {int(ens.run[missing])} has none)")
    sup = estimate_correlations(ens)
    subs = estimate_correlations(ens, "sel")
    found = []
    for label, rep in subs.items():
        for p in PAIRS:
            s, t = rep.pairs[p], sup.pairs[p]
            if not (s.defined and t.defined):
                continue
            sigma = math.sqrt(s.se ** 2 + t.se ** 2)
            zs = _zscore(s.E - t.E, sigma)
            found.append(Discrepancy(
                label, p[0], p[1], s.E, t.E, sigma, zs, abs(zs) > z,
                "inducing" if abs(s.E) > abs(t.E) else "masking",
            ))
    max_z = max((abs(d.zscore) for d in found), default=0.0)
    return MsbcReport(sup, subs, any(d.significant for d in found), max_z, found, z)


# no-signalling

@dataclass
class SignalEntry:
    group: str
    side: str
    local_setting: int
    p_remote0: float | None
    p_remote1: float | None
    deviation: float | None
    sigma: float | None
    zscore: float | None
    passed: bool
    status: str = "ok"

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class CheckReport:
    name: str
    passed: bool
    z: float
    entries: list

    @property
    def max_deviation(self) -> float:
        vals = [e.deviation for e in self.entries if e.deviation is not None]
        return max(vals, default=0.0)

    @property
    def max_abs_z(self) -> float:
        vals = [abs(e.zscore) for e in self.entries if e.zscore is not None]
        return max(vals, default=0.0)

    def failing(self) -> list:
        return [e for e in self.entries if not e.passed]

    def to_dict(self) -> dict:
        return {
            "check": self.name, "passed": self.passed, "z": self.z,
            "max_deviation": self.max_deviation, "max_abs_z": self.max_abs_z,
            "entries": [e.to_dict() for e in self.entries],
        }


def _marginal_entry(group, side, local, k0, n0, k1, n1, z) -> SignalEntry:
    if n0 == 0 or n1 == 0:
        return SignalEntry(group, side, local, None, None, None, None, None, True, "insufficient data")
    p0, p1 = k0 / n0, k1 / n1
    sigma = math.sqrt(p0 * (1 - p0) / n0 + p1 * (1 - p1) / n1)
    diff = abs(p0 - p1)
    zs = _zscore(diff, sigma)
    return SignalEntry(group, side, local, p0, p1, diff, sigma, zs, abs(zs) <= z)


def no_signalling_check(ens: Ensemble, group_by: str | None = None, z: float = DEFAULT_Z) -> CheckReport:
    """Each side's outcome marginal must not depend on the remote setting.

    Compares P(A=0|a,b=0) with P(A=0|a,b=1) for each a (and symmetrically for B).
    """
    if len(ens) == 0:
        raise ValueError("ensemble is empty")
    entries = []
    for g, n in grouped_counts(ens, group_by).items():
        for a in (0, 1):
            # n[a, b, A, B]: A=0 count and total for each remote b
            k = [int(n[a, b, 0].sum()) for b in (0, 1)]
            t = [int(n[a, b].sum()) for b in (0, 1)]
            entries.append(_marginal_entry(g, "A", a, k[0], t[0], k[1], t[1], z))
        for b in (0, 1):
            k = [int(n[a, b, :, 0].sum()) for a in (0, 1)]
            t = [int(n[a, b].sum()) for a in (0, 1)]
            entries.append(_marginal_entry(g, "B", b, k[0], t[0], k[1], t[1], z))
    return CheckReport("no_signalling", all(e.passed for e in entries), z, entries)


# factorizability

@dataclass
class FactorEntry:
    group: str
    a: int
    b: int
    count: int
    deviation: float | None
    sigma: float | None
    zscore: float | None
    passed: bool
    status: str = "ok"

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def factorizability_check(ens: Ensemble, group_by: str | None = None, z: float = DEFAULT_Z) -> CheckReport:
    """Test P(A,B|a,b) = P(A|a) P(B|b) within each setting pair.

    The deviation is max over cells of |p(A,B) - p(A) p(B)|, which for a 2x2
    table is the same in every cell. Its sigma under independence is
    sqrt(pA (1-pA) pB (1-pB) / n), making |deviation|/sigma the square root
    of the Pearson chi-square statistic.
    """
    if len(ens) == 0:
        raise ValueError("ensemble is empty")
    entries = []
    for g, n in grouped_counts(ens, group_by).items():
        for a, b in PAIRS:
            cell = n[a, b].astype(float)
            total = int(cell.sum())
            if total < 2:
                entries.append(FactorEntry(g, a, b, total, None, None, None, True, "insufficient data"))
                continue
            p = cell / total
            pa, pb = p.sum(axis=1), p.sum(axis=0)
            dev = float(np.max(np.abs(p - np.outer(pa, pb))))
            sigma = math.sqrt(pa[0] * pa[1] * pb[0] * pb[1] / total)
            zs = _zscore(dev, sigma)
            entries.append(FactorEntry(g, a, b, total, dev, sigma, zs, abs(zs) <= z))
    return CheckReport("factorizability", all(e.passed for e in entries), z, entries)


# rendering

def format_table(rows: list[dict], columns: list[str] | None = None) -> str:
    """Aligned plain-text table of ``rows``."""
    if not rows:
        return "(no rows)\n"
    columns = columns or list(rows[0])

    def fmt(v):
        if v is None:
            return "undefined"
        if isinstance(v, bool):
            return "yes" if v else "no"
        if isinstance(v, float):
            return f"{v:.6f}"
        return str(v)

    cells = [[fmt(r.get(c)) for c in columns] for r in rows]
    widths = [max(len(c), *(len(row[i]) for row in cells)) for i, c in enumerate(columns)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines.extend("  ".join(v.rjust(w) for v, w in zip(row, widths)) for row in cells)
    return "\n".join(lines) + "\n"
