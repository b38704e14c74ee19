"""Excitation Hamiltonian on a finite mode set and its condensate-shift decomposition.

Operators are kept as normal-ordered polynomials so that the shift
``a_0 -> a_0 + sqrt(N0)`` is an exact algebraic substitution. Matrices are
built from truncated ladders; on a downward-closed basis the matrix of a
normal-ordered monomial is the exact compression, so both routes agree to
rounding.
"""

from __future__ import annotations

import itertools
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, Optional, Tuple

import numpy as np
import scipy.sparse as sp

from .space import FockSpace, SparseOperator, Label, add, as_label, max_abs, neg
from .transforms import conjugate, momentum_norm, weyl

log = logging.getLogger(__name__)

ZERO: Label = (0, 0, 0)
Key = Tuple[Tuple[Label, ...], Tuple[Label, ...]]


class NormalOrdered:
    """Real linear combination of normal-ordered monomials ``a^*_{c1}..a^*_{cm} a_{d1}..a_{dn}``."""

    def __init__(self, terms: Optional[Dict[Key, float]] = None):
        self.terms: Dict[Key, float] = defaultdict(float)
        for k, v in (terms or {}).items():
            self.terms[k] += v

    @staticmethod
    def key(cre: Iterable, ann: Iterable) -> Key:
        return tuple(sorted(as_label(c) for c in cre)), tuple(sorted(as_label(a) for a in ann))

    def add(self, cre, ann, coef: float) -> "NormalOrdered":
        if coef != 0.0:
            self.terms[self.key(cre, ann)] += coef
        return self

    def __add__(self, other: "NormalOrdered") -> "NormalOrdered":
        out = NormalOrdered(self.terms)
        for k, v in other.terms.items():
            out.terms[k] += v
        return out

    def __sub__(self, other: "NormalOrdered") -> "NormalOrdered":
        return self + other.scale(-1.0)

    def scale(self, c: float) -> "NormalOrdered":
        return NormalOrdered({k: c * v for k, v in self.terms.items()})

    def dagger(self) -> "NormalOrdered":
        return NormalOrdered({(ann, cre): v for (cre, ann), v in self.terms.items()})

    def hermitian_part(self) -> "NormalOrdered":
        """``X + X^*``."""
        return self + self.dagger()

    def shift(self, mode: Label, amount: float) -> "NormalOrdered":
        """Substitute ``a_mode -> a_mode + amount`` (real ``amount``) in every factor."""
        mode = as_label(mode)
        out = NormalOrdered()
        for (cre, ann), v in self.terms.items():
            nc, na = cre.count(mode), ann.count(mode)
            rc = tuple(x for x in cre if x != mode)
            ra = tuple(x for x in ann if x != mode)
            for i in range(nc + 1):
                for j in range(na + 1):
                    c = v * math.comb(nc, i) * math.comb(na, j) * amount ** (nc - i + na - j)
                    out.add(rc + (mode,) * i, ra + (mode,) * j, c)
        return out

    def max_difference(self, other: "NormalOrdered") -> float:
        keys = set(self.terms) | set(other.terms)
        return max((abs(self.terms.get(k, 0.0) - other.terms.get(k, 0.0)) for k in keys), default=0.0)

    def modes(self) -> set:
        return {x for cre, ann in self.terms for x in cre + ann}

    def to_matrix(self, space: FockSpace) -> SparseOperator:
        """Matrix on ``space`` from truncated ladders (exact compression)."""
        M = sp.csr_matrix((space.dim, space.dim))
        eye = sp.identity(space.dim, format="csr")
        for (cre, ann), v in sorted(self.terms.items()):
            if v == 0.0:
                continue
            term = eye
            for c in cre:
                term = term @ space.annihilator(c).T
            for a in ann:
                term = term @ space.annihilator(a)
            M = M + v * term
        return SparseOperator(M)


@dataclass
class Assembly:
    """Both sides of the condensate-shift decomposition on a mode set."""

    H: NormalOrdered
    parts: Dict[str, NormalOrdered]
    constant: float
    dropped: int
    retained: int

    @property
    def rhs(self) -> NormalOrdered:
        out = NormalOrdered().add((), (), self.constant)
        for p in self.parts.values():
            out = out + p
        return out


def _in(x: Label, modes: set) -> bool:
    return x in modes


def hamiltonian_assembly(labels: Iterable, vhat: Callable, N0: float) -> Assembly:
    """Retained ``H_N`` and ``Q_1..Q_4`` plus the quadratic diagonal on a mode set.

    Parameters
    ----------
    labels : iterable of integer 3-vectors
        Mode set; must contain ``0``.
    vhat : callable
        ``V_N`` as a function of an integer label (momentum ``2 pi n``), even.
    N0 : float
        Condensate number.

    Notes
    -----
    Terms with an index outside the mode set are dropped; the number of
    dropped quartic terms in the enumeration is logged and returned.
    """
    modes = [as_label(x) for x in labels]
    mset = set(modes)
    if ZERO not in mset:
        raise ValueError("mode set must contain the condensate label 0")
    H = NormalOrdered()
    Q4 = NormalOrdered()
    dropped = retained = 0
    for p in modes:
        if p != ZERO:
            H.add([p], [p], momentum_norm(p) ** 2)
    for p in modes:
        for m in modes:
            r = add(m, neg(p))
            v = vhat(r)
            for q in modes:
                if not _in(add(q, r), mset):
                    dropped += 1
                    continue
                retained += 1
                H.add([m, q], [add(q, r), p], 0.5 * v)
                Q4.add([m, q], [add(q, r), p], 0.5 * v)
    v0 = vhat(ZERO)
    sq = math.sqrt(N0)
    Q1 = NormalOrdered().add([], [ZERO], N0 * sq * v0).hermitian_part()
    Q2 = NormalOrdered()
    for p in modes:
        if neg(p) in mset:
            Q2.add([p, neg(p)], [], 0.5 * N0 * vhat(p))
    Q2 = Q2.hermitian_part()
    Q3 = NormalOrdered()
    for p in modes:
        for r in {add(m, neg(p)) for m in modes}:
            if neg(r) in mset and add(r, p) in mset:
                Q3.add([neg(r), add(r, p)], [p], sq * vhat(r))
    Q3 = Q3.hermitian_part()
    diag = NormalOrdered()
    for p in modes:
        diag.add([p], [p], momentum_norm(p) ** 2 + N0 * v0 + N0 * vhat(p))
    log.info("hamiltonian_assembly: %d quartic terms retained, %d dropped", retained, dropped)
    return Assembly(H=H, parts={"Q1": Q1, "Q2": Q2, "Q3": Q3, "Q4": Q4, "quadratic": diag},
                    constant=0.5 * N0 * N0 * v0, dropped=dropped, retained=retained)


@dataclass(frozen=True)
class WeylDecompositionReport:
    symbolic: float
    matrix: float
    matrix_weyl: Optional[float]
    dropped: int
    dimension: int

    @property
    def passed(self) -> bool:
        return self.symbolic <= 1e-10 and self.matrix <= 1e-10


def weyl_decomposition_check(space: FockSpace, vhat: Callable, N0: float,
                             weyl_low: Optional[int] = None) -> WeylDecompositionReport:
    """Compare the shifted ``H_N`` with the decomposition, symbolically and as matrices.

    With ``weyl_low`` set, also compare ``W^* H_N W`` (matrix exponential on the
    truncated space) with the decomposition on columns with condensate
    occupation at most ``weyl_low`` and other occupations below their caps.
    """
    asm = hamiltonian_assembly(space.labels, vhat, N0)
    shifted = asm.H.shift(ZERO, math.sqrt(N0))
    rhs = asm.rhs
    sym = shifted.max_difference(rhs)
    mat = max_abs(shifted.to_matrix(space).matrix - rhs.to_matrix(space).matrix)
    mw = None
    if weyl_low is not None:
        W = weyl(space, math.sqrt(N0))
        lhs = conjugate(W, asm.H.to_matrix(space))
        zero_pos = space.position(ZERO)
        cols = space.basis[:, zero_pos] <= weyl_low
        for i, c in enumerate(space.caps):
            if i != zero_pos:
                cols &= space.basis[:, i] < c
        idx = np.flatnonzero(cols)
        rows = np.flatnonzero(space.basis[:, zero_pos] <= weyl_low + 4)
        mw = max_abs((lhs - rhs.to_matrix(space).toarray())[np.ix_(rows, idx)])
    return WeylDecompositionReport(symbolic=sym, matrix=mat, matrix_weyl=mw,
                                   dropped=asm.dropped, dimension=space.dim)


def lattice_vhat(potential, params) -> Callable:
    """``V_N`` as a function of an integer label, through :func:`rescaled_fourier`."""
    from ..scattering import rescaled_fourier

    def f(n):
        return float(rescaled_fourier(potential, params, np.array([2.0 * math.pi * np.asarray(n, float)]))[0])
    return f
