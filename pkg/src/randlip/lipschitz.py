"""Value assignments for the three models and their validity checks."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, Union

from randlip.graph import Graph, bfs_distances

REAL_TOL = 1e-12

Assignment = Union[Sequence[float], Mapping[int, float]]


class PinningError(ValueError):
    """The pinned vertex is missing from an assignment or not mapped to 0."""


@dataclass(frozen=True)
class ModelKind:
    """``kind`` is ``"lip"`` (integer M-Lipschitz), ``"real"`` (real-valued,
    modulus 1) or ``"hom"`` (Z-homomorphism, |f(u) - f(v)| = 1 on edges)."""

    kind: str
    M: int = 1

    def __post_init__(self):
        if self.kind not in ("lip", "real", "hom"):
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.kind == "lip" and self.M < 1:
            raise ValueError("M must be a positive integer")
        if self.kind != "lip" and self.M != 1:
            raise ValueError(f"{self.kind} model has modulus 1")

    @classmethod
    def lipschitz(cls, M: int) -> "ModelKind":
        return cls("lip", int(M))

    @classmethod
    def real(cls) -> "ModelKind":
        return cls("real")

    @classmethod
    def hom(cls) -> "ModelKind":
        return cls("hom")

    @classmethod
    def parse(cls, text: str, M: int | None = None) -> "ModelKind":
        text = text.strip().lower()
        if text in ("lip", "mlip", "lipschitz"):
            return cls.lipschitz(1 if M is None else M)
        if text in ("real", "rlip"):
            return cls.real()
        if text in ("hom", "zhom", "homomorphism"):
            return cls.hom()
        raise ValueError(f"unknown model {text!r}")

    @property
    def is_integer(self) -> bool:
        return self.kind != "real"

    def __str__(self) -> str:
        return f"lip(M={self.M})" if self.kind == "lip" else self.kind


@dataclass(frozen=True)
class IntLipschitzFunction:
    values: tuple[int, ...]
    M: int
    v0: int = 0

    def __post_init__(self):
        if self.values[self.v0] != 0:
            raise PinningError(f"value at pinned vertex {self.v0} is {self.values[self.v0]}, not 0")

    @property
    def range(self) -> int:
        return range_of(self.values)


@dataclass(frozen=True)
class RealLipschitzFunction:
    values: tuple[float, ...]
    v0: int = 0

    def __post_init__(self):
        if self.values[self.v0] != 0:
            raise PinningError(f"value at pinned vertex {self.v0} is {self.values[self.v0]}, not 0")

    @property
    def range(self) -> float:
        return range_of(self.values)


def _as_dict(f: Assignment) -> dict[int, float]:
    if isinstance(f, Mapping):
        return dict(f)
    if hasattr(f, "values") and not isinstance(f, (list, tuple)) and not callable(getattr(f, "values")):
        return dict(enumerate(f.values))
    return dict(enumerate(f))


def validate(g: Graph, f, model: ModelKind, v0: int | None = 0,
             partial: bool = False) -> list[tuple[int, int]]:
    """Edges ``(u, w)`` with u < w that violate the model's edge constraint.

    With ``partial=True`` only edges with both endpoints assigned are checked
    (validity on the induced subgraph). Pinning problems raise PinningError.
    """
    if model.kind == "hom" and not g.is_bipartite():
        raise ValueError("Z-homomorphisms exist only on bipartite graphs")
    vals = _as_dict(f)
    if not partial:
        missing = [v for v in range(g.vertex_count) if v not in vals]
        if missing:
            raise ValueError(f"assignment undefined at vertices {missing[:5]}")
    if v0 is not None:
        if v0 not in vals:
            raise PinningError(f"pinned vertex {v0} not assigned")
        if vals[v0] != 0:
            raise PinningError(f"value at pinned vertex {v0} is {vals[v0]}, not 0")
    bad = []
    adj = g.adjacency
    for u, fu in vals.items():
        for w in adj[u]:
            if w <= u or w not in vals:
                continue
            diff = abs(fu - vals[w])
            if model.kind == "lip":
                ok = diff <= model.M
            elif model.kind == "hom":
                ok = diff == 1
            else:
                ok = diff <= 1 + REAL_TOL
            if not ok:
                bad.append((u, w))
    return sorted(bad)


def range_of(f) -> float:
    """R(f) = max f - min f + 1."""
    vals = list(_as_dict(f).values()) if not isinstance(f, (list, tuple)) else list(f)
    if not vals:
        raise ValueError("empty assignment")
    return max(vals) - min(vals) + 1


def extremal(g: Graph, v0: int, M: int, sign: int) -> IntLipschitzFunction:
    """sign*M*dist(v, v0): the top (sign=+1) or bottom (-1) pinned M-Lipschitz function."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    dist = bfs_distances(g, v0)
    return IntLipschitzFunction(tuple(sign * M * d for d in dist), M, v0)


def interval_stat(f, S: Iterable[int]) -> tuple[float, float]:
    vals = _as_dict(f)
    sel = [vals[v] for v in S]
    if not sel:
        raise ValueError("interval_stat needs a nonempty vertex set")
    return min(sel), max(sel)


def restrict(f, W: Iterable[int]) -> dict[int, float]:
    vals = _as_dict(f)
    return {v: vals[v] for v in sorted(W)}


# --- CSV assignment files ------------------------------------------------------

def _fmt(x) -> str:
    return str(x) if isinstance(x, int) else format(float(x), ".17g")


def assignment_to_csv(f) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["vertex", "value"])
    for v, x in sorted(_as_dict(f).items()):
        w.writerow([v, _fmt(x)])
    return buf.getvalue()


def assignment_from_csv(text: str) -> dict[int, float]:
    rows = csv.DictReader(io.StringIO(text))
    out: dict[int, float] = {}
    for row in rows:
        raw = row["value"].strip()
        try:
            out[int(row["vertex"])] = int(raw)
        except ValueError:
            out[int(row["vertex"])] = float(raw)
    return out
