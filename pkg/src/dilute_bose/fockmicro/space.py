"""Truncated occupation-number basis and sparse operators on it."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp

TAGS = ("condensate", "shell", "high", "low")
Label = Tuple[int, int, int]


def as_label(x) -> Label:
    t = tuple(int(v) for v in x)
    if len(t) != 3:
        raise ValueError(f"mode labels are integer 3-vectors, got {x!r}")
    return t


def add(x: Label, y: Label) -> Label:
    return (x[0] + y[0], x[1] + y[1], x[2] + y[2])


def neg(x: Label) -> Label:
    return (-x[0], -x[1], -x[2])


@dataclass(frozen=True)
class Mode:
    label: Label
    tag: str

    def __post_init__(self):
        if self.tag not in TAGS:
            raise ValueError(f"unknown mode tag {self.tag!r}")


class SparseOperator:
    """Real or complex sparse matrix with hermiticity and unitarity flags.

    Arithmetic returns unflagged operators; flags are set by the constructors
    that guarantee them and checked by :meth:`validate`.
    """

    __array_priority__ = 100

    def __init__(self, matrix, hermitian: bool = False, unitary: bool = False):
        self.matrix = sp.csr_matrix(matrix)
        self.hermitian = hermitian
        self.unitary = unitary

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    @property
    def entries(self) -> Dict[Tuple[int, int], complex]:
        coo = self.matrix.tocoo()
        return {(int(i), int(j)): v for i, j, v in zip(coo.row, coo.col, coo.data)}

    def dag(self) -> "SparseOperator":
        return SparseOperator(self.matrix.conj().T, hermitian=self.hermitian, unitary=self.unitary)

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def _wrap(self, other):
        return other.matrix if isinstance(other, SparseOperator) else other

    def __matmul__(self, other):
        if isinstance(other, SparseOperator):
            return SparseOperator(self.matrix @ other.matrix)
        return self.matrix @ other

    def __add__(self, other):
        return SparseOperator(self.matrix + self._wrap(other))

    def __sub__(self, other):
        return SparseOperator(self.matrix - self._wrap(other))

    def __mul__(self, scalar):
        return SparseOperator(self.matrix * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return SparseOperator(-self.matrix)

    def validate(self, herm_tol: float = 1e-12, unit_tol: float = 1e-10) -> None:
        """Raise if a flag is set but does not hold."""
        if self.hermitian:
            d = abs(self.matrix - self.matrix.conj().T)
            if d.nnz and d.max() > herm_tol:
                raise AssertionError(f"operator flagged hermitian deviates by {d.max():.3e}")
        if self.unitary:
            dev = max_abs(self.matrix.conj().T @ self.matrix - sp.identity(self.dimension))
            if dev > unit_tol:
                raise AssertionError(f"operator flagged unitary deviates by {dev:.3e}")

    def triplets(self):
        """Rows ``(row, col, re, im)`` in row-major order."""
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        return [(int(coo.row[i]), int(coo.col[i]), float(np.real(coo.data[i])), float(np.imag(coo.data[i])))
                for i in order]

    def dump(self, path: str) -> None:
        with open(path, "w") as fh:
            for r, c, re_, im in self.triplets():
                fh.write(f"{r} {c} {re_!r} {im!r}\n")


def max_abs(m) -> float:
    """Max-norm of a dense or sparse matrix (0 for an empty one)."""
    if isinstance(m, SparseOperator):
        m = m.matrix
    if sp.issparse(m):
        m = sp.csr_matrix(m)
        return float(abs(m).max()) if m.nnz else 0.0
    m = np.asarray(m)
    return float(np.max(np.abs(m))) if m.size else 0.0


class FockSpace:
    """Occupation vectors over labeled modes within per-mode and weighted total caps.

    Parameters
    ----------
    modes : sequence of (label, tag)
        Integer 3-vector labels with a tag in ``condensate, shell, high, low``.
    caps : int, mapping tag -> int, or sequence of int
        Maximal occupation per mode.
    total_cap : int, optional
        Bound on ``sum_i w_i n_i``.
    weights : mapping tag -> int, optional
        Weights ``w_i`` (default 1 for every mode). The basis is closed under
        lowering any occupation, so normal-ordered products of truncated
        ladder matrices are exact compressions.
    """

    def __init__(self, modes: Sequence, caps: Union[int, Mapping, Sequence] = 4,
                 total_cap: Optional[int] = None, weights: Optional[Mapping] = None):
        ms = []
        for m in modes:
            if isinstance(m, Mode):
                ms.append(m)
            else:
                label, tag = m
                ms.append(Mode(as_label(label), tag))
        labels = [m.label for m in ms]
        if len(set(labels)) != len(labels):
            raise ValueError("duplicate mode labels")
        self.modes: Tuple[Mode, ...] = tuple(ms)
        if isinstance(caps, int):
            cap_list = [caps] * len(ms)
        elif isinstance(caps, Mapping):
            cap_list = [int(caps[m.tag]) for m in ms]
        else:
            cap_list = [int(c) for c in caps]
        if len(cap_list) != len(ms) or any(c < 0 for c in cap_list):
            raise ValueError("invalid per-mode caps")
        self.caps: Tuple[int, ...] = tuple(cap_list)
        w = [1] * len(ms) if weights is None else [int(weights.get(m.tag, 1)) for m in ms]
        self.weights: Tuple[int, ...] = tuple(w)
        self.total_cap = total_cap
        self._pos = {m.label: i for i, m in enumerate(ms)}
        self.basis = self._enumerate()
        self.index = {tuple(int(v) for v in row): i for i, row in enumerate(self.basis)}
        self._ladder_cache: Dict[int, sp.csr_matrix] = {}

    def _enumerate(self) -> np.ndarray:
        rows = []
        w = np.array(self.weights)
        for occ in itertools.product(*[range(c + 1) for c in self.caps]):
            if self.total_cap is None or int(np.dot(w, occ)) <= self.total_cap:
                rows.append(occ)
        return np.array(rows, dtype=np.int64).reshape(-1, len(self.modes))

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def labels(self) -> Tuple[Label, ...]:
        return tuple(m.label for m in self.modes)

    def has(self, label) -> bool:
        return as_label(label) in self._pos

    def position(self, label) -> int:
        try:
            return self._pos[as_label(label)]
        except KeyError:
            raise KeyError(f"mode {label!r} not in space") from None

    def tag(self, label) -> str:
        return self.modes[self.position(label)].tag

    def labels_with(self, tag: str) -> Tuple[Label, ...]:
        return tuple(m.label for m in self.modes if m.tag == tag)

    def occupation(self, label) -> np.ndarray:
        """Occupation of ``label`` on every basis vector; zero if the mode is absent."""
        label = as_label(label)
        if label not in self._pos:
            return np.zeros(self.dim, dtype=np.int64)
        return self.basis[:, self._pos[label]]

    def count(self, tag: Optional[str] = None) -> np.ndarray:
        """Total occupation of the modes with ``tag`` (all modes if None)."""
        cols = [i for i, m in enumerate(self.modes) if tag is None or m.tag == tag]
        return self.basis[:, cols].sum(axis=1) if cols else np.zeros(self.dim, dtype=np.int64)

    def diag(self, values) -> SparseOperator:
        values = np.asarray(values, dtype=float)
        return SparseOperator(sp.diags(values, format="csr"), hermitian=True)

    def annihilator(self, label) -> sp.csr_matrix:
        i = self.position(label)
        if i not in self._ladder_cache:
            rows, cols, vals = [], [], []
            for col, occ in enumerate(self.basis):
                n = int(occ[i])
                if n == 0:
                    continue
                tgt = list(int(v) for v in occ)
                tgt[i] -= 1
                rows.append(self.index[tuple(tgt)])
                cols.append(col)
                vals.append(np.sqrt(n))
            self._ladder_cache[i] = sp.csr_matrix((vals, (rows, cols)), shape=(self.dim, self.dim))
        return self._ladder_cache[i]

    def saturated(self) -> np.ndarray:
        """Boolean mask of basis vectors from which some creation leaves the space."""
        mask = np.zeros(self.dim, dtype=bool)
        w = np.array(self.weights)
        tot = self.basis @ w
        for i, c in enumerate(self.caps):
            mask |= self.basis[:, i] >= c
            if self.total_cap is not None:
                mask |= tot + w[i] > self.total_cap
        return mask


def ladder(space: FockSpace, mode) -> Tuple[SparseOperator, SparseOperator]:
    """Annihilation and creation operators of ``mode`` on the truncated space."""
    a = space.annihilator(mode)
    return SparseOperator(a), SparseOperator(a.T.tocsr())


def number_operator(space: FockSpace, mode) -> SparseOperator:
    return space.diag(space.occupation(mode))


def indicator(mask) -> SparseOperator:
    """Diagonal 0/1 projector from a boolean mask over the basis."""
    return SparseOperator(sp.diags(np.asarray(mask, dtype=float), format="csr"), hermitian=True)
