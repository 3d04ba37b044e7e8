"""Correlation datasets and their CSV / JSON serialization."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import GridMismatch

__all__ = ["Row", "CorrelationDataset", "COLUMNS"]

COLUMNS = ("alpha", "alphaprime", "j", "t", "value", "stderr", "method")


@dataclass(frozen=True)
class Row:
    alpha: int
    alphaprime: int
    j: int
    t: float
    value: float
    stderr: float
    method: str

    def key(self):
        return (self.alpha, self.alphaprime, self.j, self.t)


@dataclass
class CorrelationDataset:
    """Correlation values keyed by ``(alpha, alphaprime, j, t)``.

    ``method`` is one of ``exact``, ``finiteN``, ``parametrix``, ``mc`` (or a
    regime-qualified variant such as ``parametrix:airy``).
    """

    meta: dict = field(default_factory=dict)
    rows: list[Row] = field(default_factory=list)

    def add(self, alpha, alphaprime, j, t, value, stderr=0.0, method="exact"):
        self.rows.append(Row(int(alpha), int(alphaprime), int(j), float(t), float(value), float(stderr), str(method)))

    def extend(self, other: "CorrelationDataset"):
        self.rows.extend(other.rows)

    def __len__(self):
        return len(self.rows)

    def as_dict(self) -> dict:
        return {r.key(): r for r in self.rows}

    def select(self, alpha=None, alphaprime=None, t=None) -> list[Row]:
        out = []
        for r in self.rows:
            if alpha is not None and r.alpha != alpha:
                continue
            if alphaprime is not None and r.alphaprime != alphaprime:
                continue
            if t is not None and r.t != t:
                continue
            out.append(r)
        return out

    def series(self, alpha, alphaprime, t):
        """``(j, value, stderr)`` arrays for one time slice, sorted by ``j``."""
        rows = sorted(self.select(alpha, alphaprime, t), key=lambda r: r.j)
        return (
            np.array([r.j for r in rows], dtype=int),
            np.array([r.value for r in rows]),
            np.array([r.stderr for r in rows]),
        )

    def times(self) -> list[float]:
        return sorted({r.t for r in self.rows})

    # serialization -------------------------------------------------------

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("# meta " + json.dumps(self.meta, sort_keys=True) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in self.rows:
            w.writerow([r.alpha, r.alphaprime, r.j, repr(r.t), repr(r.value), repr(r.stderr), r.method])
        return buf.getvalue()

    def to_json(self) -> str:
        rows = [[r.alpha, r.alphaprime, r.j, r.t, r.value, r.stderr, r.method] for r in self.rows]
        return json.dumps({"meta": self.meta, "columns": list(COLUMNS), "rows": rows}, sort_keys=True) + "\n"

    def dumps(self, fmt: str) -> str:
        if fmt == "csv":
            return self.to_csv()
        if fmt == "json":
            return self.to_json()
        raise ValueError(f"unknown format {fmt!r}")

    def write(self, path, fmt: str | None = None) -> None:
        fmt = fmt or ("json" if str(path).endswith(".json") else "csv")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.dumps(fmt))

    @classmethod
    def loads(cls, text: str) -> "CorrelationDataset":
        stripped = text.lstrip()
        if stripped.startswith("{"):
            obj = json.loads(text)
            ds = cls(meta=obj.get("meta", {}))
            for a, ap, j, t, v, se, meth in obj["rows"]:
                ds.add(a, ap, j, t, v, se, meth)
            return ds
        meta = {}
        body = []
        for line in text.splitlines():
            if line.startswith("# meta "):
                meta = json.loads(line[len("# meta "):])
            elif line.startswith("#"):
                continue
            else:
                body.append(line)
        ds = cls(meta=meta)
        reader = csv.reader(body)
        header = next(reader, None)
        if header is None:
            return ds
        if tuple(header) != COLUMNS:
            raise ValueError(f"unexpected CSV header {header}")
        for a, ap, j, t, v, se, meth in reader:
            ds.add(int(a), int(ap), int(j), float(t), float(v), float(se), meth)
        return ds

    @classmethod
    def read(cls, path) -> "CorrelationDataset":
        with open(path, encoding="utf-8") as fh:
            return cls.loads(fh.read())


def aligned(a: CorrelationDataset, b: CorrelationDataset) -> list[tuple[Row, Row]]:
    """Pair rows of two datasets on identical keys; raise if the grids differ."""
    da, db = a.as_dict(), b.as_dict()
    if set(da) != set(db):
        missing = sorted(set(da) ^ set(db))[:5]
        raise GridMismatch(f"datasets cover different grids (e.g. {missing})")
    return [(da[k], db[k]) for k in sorted(da)]


def loglog_slope(x: Iterable[float], y: Iterable[float]) -> float:
    x, y = np.asarray(list(x), float), np.asarray(list(y), float)
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])
