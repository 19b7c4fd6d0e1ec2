"""Run records, ensembles and their JSONL/CSV serialization.

File layout (both formats)::

    #meta {"seed": 7, "config_digest": "...", ...}
    {"run":0,"a":0,"b":1,"A":1,"B":0,"sel":"C0","geometry":"V"}      (JSONL)
    run,a,b,A,B,sel,geometry / 0,0,1,1,0,C0,V                        (CSV)

In CSV an empty ``sel`` field stands for null.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import re
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

FIELDS = ("run", "a", "b", "A", "B", "sel", "geometry")
META_PREFIX = "#meta "

SEL_LABELS = ("C0", "C1", "C2", "C3", "M0", "M1", "M2", "M3")
SEL_CODES = {label: i for i, label in enumerate(SEL_LABELS)}
NO_SEL = -1
GEOMETRIES = ("V", "W")


class EnsembleFormatError(ValueError):
    """Malformed ensemble file; ``line`` is the 1-based offending line."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class RunRecord:
    run: int
    a: int
    b: int
    A: int
    B: int
    sel: str | None = None
    geometry: str = "V"

    def __post_init__(self):
        for name in ("a", "b", "A", "B"):
            if getattr(self, name) not in (0, 1):
                raise ValueError(f"{name} must be 0 or 1")
        if self.run < 0:
            raise ValueError("run must be non-negative")
        if self.sel is not None and self.sel not in SEL_CODES:
            raise ValueError(f"unknown selection label {self.sel!r}")
        if self.geometry not in GEOMETRIES:
            raise ValueError(f"geometry must be V or W, got {self.geometry!r}")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in FIELDS}


def config_digest(config: dict) -> str:
    """sha256 of the canonical JSON form of ``config``."""
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), allow_nan=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


@dataclass
class Ensemble:
    """Column-oriented ordered collection of runs.

    Columns are int64 (``run``) and int8 arrays; ``sel`` holds codes into
    ``SEL_LABELS`` with ``NO_SEL`` for missing labels, ``geometry`` holds
    indices into ``GEOMETRIES``.
    """

    run: np.ndarray
    a: np.ndarray
    b: np.ndarray
    A: np.ndarray
    B: np.ndarray
    sel: np.ndarray
    geometry: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.run = np.asarray(self.run, dtype=np.int64)
        n = self.run.size
        for name in ("a", "b", "A", "B", "sel", "geometry"):
            col = np.asarray(getattr(self, name), dtype=np.int8)
            if col.shape != (n,):
                raise ValueError(f"column {name} has shape {col.shape}, expected ({n},)")
            setattr(self, name, col)
        for name in ("a", "b", "A", "B"):
            col = getattr(self, name)
            if n and (col.min() < 0 or col.max() > 1):
                raise ValueError(f"column {name} must hold bits")
        if n and (self.sel.min() < NO_SEL or self.sel.max() >= len(SEL_LABELS)):
            raise ValueError("sel codes out of range")
        if n and (self.geometry.min() < 0 or self.geometry.max() > 1):
            raise ValueError("geometry codes out of range")
        if n and (self.run[0] < 0 or np.any(np.diff(self.run) <= 0)):
            raise ValueError("run ids must be non-negative and strictly increasing")

    def __len__(self) -> int:
        return int(self.run.size)

    def __iter__(self) -> Iterator[RunRecord]:
        return self.records()

    @classmethod
    def empty(cls, meta: dict | None = None) -> "Ensemble":
        z = np.zeros(0, dtype=np.int8)
        return cls(np.zeros(0, dtype=np.int64), z, z, z, z, z, z, dict(meta or {}))

    @classmethod
    def from_records(cls, records: Iterable[RunRecord], meta: dict | None = None) -> "Ensemble":
        recs = list(records)
        if not recs:
            return cls.empty(meta)
        return cls(
            run=[r.run for r in recs],
            a=[r.a for r in recs],
            b=[r.b for r in recs],
            A=[r.A for r in recs],
            B=[r.B for r in recs],
            sel=[NO_SEL if r.sel is None else SEL_CODES[r.sel] for r in recs],
            geometry=[GEOMETRIES.index(r.geometry) for r in recs],
            meta=dict(meta or {}),
        )

    def records(self) -> Iterator[RunRecord]:
        for i in range(len(self)):
            s = int(self.sel[i])
            yield RunRecord(
                int(self.run[i]), int(self.a[i]), int(self.b[i]), int(self.A[i]), int(self.B[i]),
                None if s == NO_SEL else SEL_LABELS[s], GEOMETRIES[self.geometry[i]],
            )

    def subset(self, mask: np.ndarray, meta: dict | None = None) -> "Ensemble":
        return Ensemble(
            self.run[mask], self.a[mask], self.b[mask], self.A[mask], self.B[mask],
            self.sel[mask], self.geometry[mask], dict(self.meta if meta is None else meta),
        )

    def select(self, label: str) -> "Ensemble":
        """Subensemble of runs whose selection label equals ``label``."""
        return self.subset(self.sel == SEL_CODES[label])

    @property
    def has_sel(self) -> bool:
        return bool(len(self)) and bool(np.all(self.sel != NO_SEL))

    def sel_labels(self) -> list[str]:
        return [SEL_LABELS[c] for c in np.unique(self.sel) if c != NO_SEL]

    def columns_equal(self, other: "Ensemble") -> bool:
        return all(
            np.array_equal(getattr(self, k), getattr(other, k))
            for k in ("run", "a", "b", "A", "B", "sel", "geometry")
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Ensemble):
            return NotImplemented
        return self.columns_equal(other) and self.meta == other.meta


def concat(parts: Sequence[Ensemble], meta: dict | None = None) -> Ensemble:
    """Concatenate ensembles, ordering records by run id."""
    parts = [p for p in parts if len(p)]
    if not parts:
        return Ensemble.empty(meta)
    cols = {k: np.concatenate([getattr(p, k) for p in parts]) for k in ("run", "a", "b", "A", "B", "sel", "geometry")}
    order = np.argsort(cols["run"], kind="stable")
    return Ensemble(**{k: v[order] for k, v in cols.items()}, meta=dict(meta or {}))


# serialization

def _meta_line(meta: dict) -> str:
    return META_PREFIX + json.dumps(meta, sort_keys=True, separators=(",", ":")) + "\n"


def _columns(ens: Ensemble, sel_names: list) -> Iterator[tuple]:
    """Row tuples with ``sel`` and ``geometry`` already mapped to names."""
    return zip(
        ens.run.tolist(), ens.a.tolist(), ens.b.tolist(), ens.A.tolist(), ens.B.tolist(),
        [sel_names[c + 1] for c in ens.sel.tolist()], [GEOMETRIES[g] for g in ens.geometry.tolist()],
    )


def _jsonl_lines(ens: Ensemble) -> Iterator[str]:
    sel_json = ["null"] + [f'"{s}"' for s in SEL_LABELS]  # offset by one for NO_SEL
    for run, a, b, A, B, sel, geom in _columns(ens, sel_json):
        yield f'{{"run":{run},"a":{a},"b":{b},"A":{A},"B":{B},"sel":{sel},"geometry":"{geom}"}}\n'


def _csv_lines(ens: Ensemble) -> Iterator[str]:
    yield ",".join(FIELDS) + "\n"
    for row in _columns(ens, [""] + list(SEL_LABELS)):
        yield ",".join(map(str, row)) + "\n"


def dumps(ens: Ensemble, fmt: str = "jsonl") -> str:
    if fmt not in ("jsonl", "csv"):
        raise ValueError(f"unknown format {fmt!r}")
    body = _jsonl_lines(ens) if fmt == "jsonl" else _csv_lines(ens)
    return _meta_line(ens.meta) + "".join(body)


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    """Write via a temp file and rename, so failures never leave partial output."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write(ens: Ensemble, path: str | os.PathLike, fmt: str | None = None) -> None:
    fmt = fmt or ("csv" if str(path).endswith(".csv") else "jsonl")
    atomic_write_text(path, dumps(ens, fmt))


def _parse_bit(value, line: int, name: str) -> int:
    if isinstance(value, bool) or value not in (0, 1, "0", "1"):
        raise EnsembleFormatError(line, f"field {name!r} must be 0 or 1, got {value!r}")
    return int(value)


def _parse_row(row: dict, line: int, csv_mode: bool) -> tuple:
    missing = [k for k in FIELDS if k not in row]
    if missing:
        raise EnsembleFormatError(line, f"missing fields {missing}")
    run = row["run"]
    try:
        if isinstance(run, bool) or (not csv_mode and not isinstance(run, int)):
            raise ValueError
        run = int(run)
    except (TypeError, ValueError):
        raise EnsembleFormatError(line, f"field 'run' must be an integer, got {row['run']!r}") from None
    bits = [_parse_bit(row[k], line, k) for k in ("a", "b", "A", "B")]
    sel = row["sel"]
    if csv_mode and sel == "":
        sel = None
    if sel is not None and sel not in SEL_CODES:
        raise EnsembleFormatError(line, f"unknown selection label {sel!r}")
    geom = row["geometry"]
    if geom not in GEOMETRIES:
        raise EnsembleFormatError(line, f"geometry must be V or W, got {geom!r}")
    return (run, *bits, NO_SEL if sel is None else SEL_CODES[sel], GEOMETRIES.index(geom))


_FAST_JSONL = re.compile(
    r'\{"run":(\d+),"a":([01]),"b":([01]),"A":([01]),"B":([01]),'
    r'"sel":(?:"([CM][0-3])"|null),"geometry":"([VW])"\}'
)
_FAST_CSV = re.compile(r"(\d+),([01]),([01]),([01]),([01]),([CM][0-3])?,([VW])")
_GEOM_CODES = {g: i for i, g in enumerate(GEOMETRIES)}


def _fast_row(m: re.Match) -> tuple:
    run, a, b, A, B, sel, geom = m.groups()
    return (int(run), int(a), int(b), int(A), int(B),
            NO_SEL if sel is None else SEL_CODES[sel], _GEOM_CODES[geom])


def _json_row(ln: str, line_no: int) -> tuple:
    try:
        obj = json.loads(ln)
    except json.JSONDecodeError as exc:
        raise EnsembleFormatError(line_no, f"invalid JSON: {exc.msg}") from None
    if not isinstance(obj, dict):
        raise EnsembleFormatError(line_no, "record must be a JSON object")
    return _parse_row(obj, line_no, csv_mode=False)


def _csv_row(ln: str, line_no: int) -> tuple:
    values = next(csv.reader(io.StringIO(ln)))
    if len(values) != len(FIELDS):
        raise EnsembleFormatError(line_no, f"expected {len(FIELDS)} fields, got {len(values)}")
    return _parse_row(dict(zip(FIELDS, values)), line_no, csv_mode=True)


def loads(text: str) -> Ensemble:
    """Parse JSONL or CSV ensemble text (format auto-detected)."""
    lines = text.splitlines()
    meta: dict = {}
    start = 0
    if lines and lines[0].startswith(META_PREFIX):
        try:
            meta = json.loads(lines[0][len(META_PREFIX):])
        except json.JSONDecodeError as exc:
            raise EnsembleFormatError(1, f"bad #meta header: {exc.msg}") from None
        if not isinstance(meta, dict):
            raise EnsembleFormatError(1, "#meta header must be a JSON object")
        start = 1
    body = [(i + 1, ln) for i, ln in enumerate(lines) if i >= start and ln.strip()]
    if body and not body[0][1].lstrip().startswith("{"):
        header_no, header = body[0]
        if next(csv.reader([header])) != list(FIELDS):
            raise EnsembleFormatError(header_no, f"expected CSV header {','.join(FIELDS)}")
        body = body[1:]
        fast, slow = _FAST_CSV, _csv_row
    else:
        fast, slow = _FAST_JSONL, _json_row
    rows = []
    for line_no, ln in body:
        m = fast.fullmatch(ln)
        rows.append(_fast_row(m) if m else slow(ln, line_no))
    if not rows:
        return Ensemble.empty(meta)
    arr = np.array(rows, dtype=np.int64)
    bad = np.flatnonzero(np.diff(arr[:, 0]) <= 0)
    if bad.size:
        raise EnsembleFormatError(body[bad[0] + 1][0], "run ids must be strictly increasing")
    return Ensemble(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], arr[:, 4], arr[:, 5], arr[:, 6], meta)


def read(path: str | os.PathLike) -> Ensemble:
    return loads(Path(path).read_text(encoding="utf-8"))
