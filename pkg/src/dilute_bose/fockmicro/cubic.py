"""Cubic generators, their closed-form exponentials and the parity/monogamy structure.

Layouts use a weighted cap ``2 N_S + N_H <= W``. The cubic generators conserve
``N_S + N_H/2`` and the cutoffs only create into empty high modes, so the
truncated space is invariant and every identity below is exact rather than
truncation-limited.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .space import FockSpace, SparseOperator, Label, add, as_label, max_abs, neg
from .transforms import gibbs_gamma0, momentum_norm, pair_generator, unitary_from_generator

SERIES_THRESHOLD = 1e-8


@dataclass(frozen=True)
class Layout:
    """Mode set for the cubic checks.

    Attributes
    ----------
    shell, high : tuple of labels
        Both closed under negation and disjoint.
    phi : dict
        Even map high label -> ``phi_r``.
    N : float
        Prefactor scale of ``N^(1/2) phi_r``.
    name : str
    seed : int or None
    """

    shell: Tuple[Label, ...]
    high: Tuple[Label, ...]
    phi: Dict[Label, float]
    N: float
    name: str = "layout"
    seed: Optional[int] = None

    def __post_init__(self):
        S, H = set(self.shell), set(self.high)
        if len(S) != len(self.shell) or len(H) != len(self.high):
            raise ValueError("duplicate labels in layout")
        if S & H or (0, 0, 0) in S | H:
            raise ValueError("shell and high sets must be disjoint and exclude 0")
        for X, name in ((S, "shell"), (H, "high")):
            if any(neg(x) not in X for x in X):
                raise ValueError(f"{name} set not closed under negation")
        for r in H:
            if r not in self.phi or self.phi[r] != self.phi[neg(r)]:
                raise ValueError(f"phi must be defined and even on H (label {r})")

    def high_restricted(self, k) -> Tuple[Label, ...]:
        """``H_k = {r in H : r + k in H}``."""
        H = set(self.high)
        return tuple(r for r in self.high if add(r, as_label(k)) in H)

    def space(self, weighted_cap: int = 8, shell_cap: int = 4, high_cap: int = 2,
              condensate_cap: Optional[int] = None) -> FockSpace:
        """Space with ``2 N_S + N_H <= weighted_cap``; optional condensate of weight 0."""
        modes, caps = [], []
        if condensate_cap is not None:
            modes.append(((0, 0, 0), "condensate"))
            caps.append(condensate_cap)
        modes += [(k, "shell") for k in self.shell]
        caps += [shell_cap] * len(self.shell)
        modes += [(r, "high") for r in self.high]
        caps += [high_cap] * len(self.high)
        return FockSpace(modes, caps=caps, total_cap=weighted_cap,
                         weights={"condensate": 0, "shell": 2, "high": 1, "low": 1})


def _phi_profile(r: Label) -> float:
    n2 = float(sum(v * v for v in r))
    return 1.0 / (1.0 + 0.05 * n2)


def toy_layout(N: float = 4.0, r0: Label = (5, 0, 0), k: Label = (1, 0, 0), extended: bool = False) -> Layout:
    """Shell ``{+k, -k}`` and high ``{r, r+k, -r, -r-k}``.

    ``extended`` adds ``{r-k, -r+k}`` so that shell-neighborhood cutoffs are active.
    """
    k, r = as_label(k), as_label(r0)
    high = [r, add(r, k), neg(r), neg(add(r, k))]
    if extended:
        high += [add(r, neg(k)), add(neg(r), k)]
    return Layout(shell=(k, neg(k)), high=tuple(high), phi={h: _phi_profile(h) for h in high},
                  N=N, name="toy-extended" if extended else "toy")


def triad_layout(N: float = 4.0) -> Layout:
    """Shell ``{+-k1, +-k2, +-(k1+k2)}`` so that shell-internal cubic terms exist."""
    k1, k2 = (1, 0, 0), (0, 1, 0)
    k3 = add(k1, k2)
    r = (6, 2, 0)
    high = [r, add(r, k1), neg(r), neg(add(r, k1))]
    return Layout(shell=(k1, neg(k1), k2, neg(k2), k3, neg(k3)), high=tuple(high),
                  phi={h: _phi_profile(h) for h in high}, N=N, name="triad")


def random_layout(seed: int, n_pairs: int = 2, N: float = 4.0) -> Layout:
    """Seeded layout: ``n_pairs`` shell pairs, each with one high quadruple ``{r, r+k, -r, -r-k}``."""
    rng = np.random.default_rng(seed)
    for _ in range(1000):
        ks: List[Label] = []
        while len(ks) < n_pairs:
            k = as_label(rng.integers(-2, 3, size=3))
            if k != (0, 0, 0) and k not in ks and neg(k) not in ks:
                ks.append(k)
        shell = tuple(x for k in ks for x in (k, neg(k)))
        high: List[Label] = []
        for k in ks:
            r = as_label(rng.integers(-12, 13, size=3))
            high += [r, add(r, k), neg(r), neg(add(r, k))]
        hs = set(high)
        if len(hs) == len(high) and not hs & set(shell) and (0, 0, 0) not in hs:
            return Layout(shell=shell, high=tuple(high), phi={h: _phi_profile(h) for h in high},
                          N=N, name=f"random-{seed}", seed=seed)
    raise RuntimeError(f"no valid layout found for seed {seed}")


def _occ(space: FockSpace, label) -> np.ndarray:
    return space.occupation(label)


def theta1(space: FockSpace, layout: Layout, k) -> np.ndarray:
    """``prod_{t in H} (1 - 1{N_{-t}>0} 1{N_{t+k}>0})`` as a 0/1 vector."""
    k = as_label(k)
    out = np.ones(space.dim, dtype=bool)
    for t in layout.high:
        out &= ~((_occ(space, neg(t)) > 0) & (_occ(space, add(t, k)) > 0))
    return out


def theta2(space: FockSpace, layout: Layout, k, r) -> np.ndarray:
    """``prod_{q in S} (1 - 1{N_{r+q} + N_{-(k+r)+q} > 0})``; absent modes count as empty."""
    k, r = as_label(k), as_label(r)
    out = np.ones(space.dim, dtype=bool)
    mkr = neg(add(k, r))
    for q in layout.shell:
        out &= (_occ(space, add(r, q)) + _occ(space, add(mkr, q))) == 0
    return out


def cutoff_theta(space: FockSpace, layout: Layout, k, r) -> SparseOperator:
    """Diagonal projector ``Theta_{k,r} = Theta^(1)_k Theta^(2)_{k,r}``.

    Raises
    ------
    ValueError
        If ``k`` is not shell-tagged or ``r``, ``r+k`` are not high-tagged.
    """
    k, r = as_label(k), as_label(r)
    if k not in layout.shell:
        raise ValueError(f"k={k} is not a shell mode")
    if r not in layout.high or add(r, k) not in layout.high:
        raise ValueError(f"r={r} and r+k must be high modes")
    return space.diag((theta1(space, layout, k) & theta2(space, layout, k, r)).astype(float))


def active_cutoffs(layout: Layout) -> List[dict]:
    """Which cutoff factors can vanish on the layout, per ``(k, r)``.

    A ``Theta^(2)`` factor for ``q`` is active if one of ``r+q``, ``-(k+r)+q`` is a mode.
    """
    modes = set(layout.shell) | set(layout.high)
    rows = []
    for k in layout.shell:
        for r in layout.high_restricted(k):
            mkr = neg(add(k, r))
            active = [q for q in layout.shell if add(r, q) in modes or add(mkr, q) in modes]
            t1 = [t for t in layout.high if neg(t) in modes and add(t, k) in modes]
            rows.append({"k": k, "r": r, "theta1_pairs": len(t1), "theta2_active_q": active})
    return rows


@dataclass(frozen=True)
class CubicGenerator:
    k: Label
    sharp: SparseOperator
    circ: SparseOperator
    B: SparseOperator


def cubic_generator(space: FockSpace, layout: Layout, k) -> CubicGenerator:
    """``B_k^# = sum_{r in H_k} N^(1/2) phi_r a_{-r}^* a_{r+k}^* a_k Theta_{k,r}`` and its adjoint."""
    k = as_label(k)
    Hk = layout.high_restricted(k)
    if not Hk:
        raise ValueError(f"H_k is empty for k={k}")
    ak = space.annihilator(k)
    M = sp.csr_matrix((space.dim, space.dim))
    sqN = math.sqrt(layout.N)
    for r in Hk:
        th = cutoff_theta(space, layout, k, r).matrix
        M = M + sqN * layout.phi[r] * (space.annihilator(neg(r)).T @ space.annihilator(add(r, k)).T @ ak @ th)
    M.eliminate_zeros()
    sharp = SparseOperator(M)
    circ = SparseOperator(M.T.conj().tocsr())
    return CubicGenerator(k=k, sharp=sharp, circ=circ, B=SparseOperator(M - circ.matrix))


def xk_squared_formula(space: FockSpace, layout: Layout, k) -> np.ndarray:
    """Diagonal of ``sum_{r in H_k} N phi_r (phi_r + phi_{r+k}) N_k Theta_{k,r}``."""
    k = as_label(k)
    nk = space.occupation(k).astype(float)
    out = np.zeros(space.dim)
    for r in layout.high_restricted(k):
        th = theta1(space, layout, k) & theta2(space, layout, k, r)
        out += layout.N * layout.phi[r] * (layout.phi[r] + layout.phi[add(r, k)]) * nk * th
    return out


@dataclass(frozen=True)
class XkResult:
    x2: np.ndarray
    formula_deviation: float
    offdiag: float

    @property
    def x(self) -> np.ndarray:
        return np.sqrt(self.x2)


def xk_operator(space: FockSpace, layout: Layout, gen: CubicGenerator) -> XkResult:
    """``X_k^2 = B_k^o B_k^#``, checked against the closed diagonal formula.

    Raises
    ------
    ArithmeticError
        If ``B_k^o B_k^#`` has an eigenvalue below ``-1e-12``.
    """
    prod = (gen.circ.matrix @ gen.sharp.matrix).toarray()
    d = np.real(np.diag(prod)).copy()
    off = max_abs(prod - np.diag(np.diag(prod)))
    if off > 1e-12:
        ev = np.linalg.eigvalsh(0.5 * (prod + prod.conj().T))
        floor = ev.min()
    else:
        floor = d.min() if d.size else 0.0
    if floor < -1e-12:
        raise ArithmeticError(f"X_k^2 has negative eigenvalue {floor:.3e}")
    dev = max_abs(prod - np.diag(xk_squared_formula(space, layout, gen.k)))
    return XkResult(x2=np.clip(d, 0.0, None), formula_deviation=dev, offdiag=off)


def spectral_functions(x2: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``cos x``, ``sin x / x`` and ``(cos x - 1)/x^2`` of ``x = sqrt(x2)``, series below the threshold."""
    x2 = np.asarray(x2, dtype=float)
    small = x2 < SERIES_THRESHOLD
    x = np.sqrt(x2)
    safe = np.where(small, 1.0, x)
    cos = np.cos(x)
    sinc = np.where(small, 1.0 - x2 / 6.0 + x2 * x2 / 120.0, np.sin(safe) / safe)
    cosm = np.where(small, -0.5 + x2 / 24.0 - x2 * x2 / 720.0, (np.cos(safe) - 1.0) / (safe * safe))
    return cos, sinc, cosm


def cubic_unitary(space: FockSpace, layout: Layout, k, gen: Optional[CubicGenerator] = None) -> SparseOperator:
    """Closed form ``cos X + B^# sinX/X - sinX/X B^o + B^# (cosX - 1)/X^2 B^o``."""
    gen = cubic_generator(space, layout, k) if gen is None else gen
    xr = xk_operator(space, layout, gen)
    cos, sinc, cosm = (sp.diags(v, format="csr") for v in spectral_functions(xr.x2))
    T = cos + gen.sharp.matrix @ sinc - sinc @ gen.circ.matrix + gen.sharp.matrix @ cosm @ gen.circ.matrix
    return SparseOperator(T, unitary=True)


def cubic_unitary_expm(gen: CubicGenerator) -> np.ndarray:
    """Generic scaling-and-squaring exponential of ``B_k``."""
    return sla.expm(gen.B.toarray())


def cubic_product(space: FockSpace, layout: Layout, order: Optional[Sequence] = None) -> SparseOperator:
    """``T_c = prod_{k in S} T_k`` in the given order (default: layout order)."""
    order = layout.shell if order is None else [as_label(k) for k in order]
    if sorted(order) != sorted(layout.shell):
        raise ValueError("order must be a permutation of the shell")
    T = sp.identity(space.dim, format="csr")
    for k in order:
        if layout.high_restricted(k):
            T = T @ cubic_unitary(space, layout, k).matrix
    return SparseOperator(T, unitary=True)


@dataclass(frozen=True)
class ParityOps:
    M: np.ndarray
    P: SparseOperator
    Q: SparseOperator


def connections(space: FockSpace, layout: Layout, k) -> np.ndarray:
    """``M_k = N_k + 1/2 sum_{t in H_k} N_{-t} N_{t+k}`` as a diagonal vector."""
    k = as_label(k)
    out = space.occupation(k).astype(float)
    for t in layout.high_restricted(k):
        out = out + 0.5 * space.occupation(neg(t)) * space.occupation(add(t, k))
    return out


def parity_ops(space: FockSpace, layout: Layout, k) -> ParityOps:
    """``M_k`` and the projectors ``P_k = 1{M_k + M_-k even}``, ``Q_k = 1 - P_k``."""
    k = as_label(k)
    tot = connections(space, layout, k) + connections(space, layout, neg(k))
    n = np.rint(tot)
    if max_abs(tot - n) > 1e-12:
        raise ArithmeticError("M_k + M_-k is not an integer")
    even = (n.astype(np.int64) % 2) == 0
    return ParityOps(M=connections(space, layout, k), P=space.diag(even.astype(float)),
                     Q=space.diag((~even).astype(float)))


def xi_projector(space: FockSpace) -> SparseOperator:
    """``Xi = 1{N_{(S u H)^c} = 0} 1{N_H even}``."""
    outside = space.count() - space.count("shell") - space.count("high")
    return space.diag(((outside == 0) & (space.count("high") % 2 == 0)).astype(float))


def chi(space: FockSpace, layout: Layout, p, tilde: bool = False) -> SparseOperator:
    """Monogamy projector ``chi_p`` (or ``chi~_p`` without the exclusivity product)."""
    p = as_label(p)
    n_p = space.occupation(p)
    acc = np.zeros(space.dim, dtype=bool)
    partners = [space.occupation(add(neg(p), x)) for x in layout.shell]
    for i, nx in enumerate(partners):
        term = nx == 1
        if not tilde:
            for j, ny in enumerate(partners):
                if j != i:
                    term &= ny == 0
        acc |= term
    return space.diag(((n_p == 0) | ((n_p == 1) & acc)).astype(float))


def shell_support(space: FockSpace) -> np.ndarray:
    """Mask of basis vectors with ``N_{S^c} = 0``."""
    return space.count() == space.count("shell")


def _dense(x) -> np.ndarray:
    if isinstance(x, SparseOperator):
        return x.toarray()
    return x.toarray() if sp.issparse(x) else np.asarray(x)


def check_support(space: FockSpace, Gamma, tol: float = 1e-14) -> float:
    """Weight of ``Gamma`` outside ``Ran 1{N_{S^c}=0}``."""
    G = _dense(Gamma)
    out = ~shell_support(space)
    return max(max_abs(G[out, :]), max_abs(G[:, out]))


@dataclass(frozen=True)
class MonogamyReport:
    passed: bool
    chi_deviation: float
    chi_tilde_deviation: float
    worst_mode: Optional[Label]

    def __bool__(self) -> bool:
        return self.passed


def monogamy_check(space: FockSpace, layout: Layout, Gamma, T_c: Optional[SparseOperator] = None,
                   tol: float = 1e-12, enforce_support: bool = True) -> MonogamyReport:
    """``chi_p T_c Gamma T_c^* chi_p = T_c Gamma T_c^*`` for every high ``p``.

    Raises
    ------
    ValueError
        If ``enforce_support`` and ``Gamma`` has weight outside ``N_{S^c} = 0``.
    """
    if enforce_support and check_support(space, Gamma) > 0:
        raise ValueError("precondition violated: Gamma is not supported on N_{S^c} = 0")
    T = (cubic_product(space, layout) if T_c is None else T_c).toarray()
    rho = T @ _dense(Gamma) @ T.conj().T
    worst, dev, dev_t = None, 0.0, 0.0
    for p in layout.high:
        for tilde in (False, True):
            c = chi(space, layout, p, tilde).toarray().diagonal()
            d = max_abs(c[:, None] * rho * c[None, :] - rho)
            if tilde:
                dev_t = max(dev_t, d)
            elif d > dev:
                dev, worst = d, p
    return MonogamyReport(passed=max(dev, dev_t) <= tol, chi_deviation=dev,
                          chi_tilde_deviation=dev_t, worst_mode=worst)


def layout_gibbs(space: FockSpace, layout: Layout, T_eff: float = 1.0, coupling: float = 50.0):
    """Shell Gibbs state with ``e(p) = sqrt(p^4 + coupling p^2)`` on the layout's shell."""
    def disp(p):
        return p * math.sqrt(p * p + coupling)
    return gibbs_gamma0(space, disp, T_eff * disp(min(momentum_norm(k) for k in layout.shell)))


def shell_pairing(space: FockSpace, layout: Layout, coupling: float = 50.0) -> SparseOperator:
    """``e^{B2}`` for the shell pairing angles of the dispersion with the given coupling."""
    B = 0.5 * coupling
    eta = {}
    for k in layout.shell:
        p2 = momentum_norm(k) ** 2
        x = -B / (p2 + B)
        eta[k] = 0.25 * (math.log1p(x) - math.log1p(-x))
    return unitary_from_generator(pair_generator(space, eta))


@dataclass(frozen=True)
class MomentReport:
    j: int
    operator_floor: float
    trace_after: float
    trace_before: float
    high_after: float
    high_ratio: float

    @property
    def passed(self) -> bool:
        return self.operator_floor >= -1e-10 and self.trace_after <= self.trace_before + 1e-12


def moment_transport_check(space: FockSpace, layout: Layout, Gamma, j: int = 1,
                           T_c: Optional[SparseOperator] = None) -> MomentReport:
    """``T_c^* N_S^j T_c <= N_S^j`` on ``Ran 1{N_{S^c}=0}`` and the traced version.

    ``high_ratio`` is ``Tr T_c^* N_H T_c Gamma / Tr N_S Gamma``, the fitted constant of the
    high-number transport bound at this scale.
    """
    if j not in (1, 2):
        raise ValueError("j must be 1 or 2")
    if check_support(space, Gamma) > 0:
        raise ValueError("precondition violated: Gamma is not supported on N_{S^c} = 0")
    T = (cubic_product(space, layout) if T_c is None else T_c).toarray()
    ns = space.count("shell").astype(float) ** j
    lhs = T.conj().T @ (ns[:, None] * T)
    keep = np.flatnonzero(shell_support(space))
    diff = np.diag(ns)[np.ix_(keep, keep)] - lhs[np.ix_(keep, keep)]
    floor = float(np.linalg.eigvalsh(0.5 * (diff + diff.conj().T)).min())
    G = _dense(Gamma)
    after = float(np.real(np.sum(lhs * G.T)))
    before = float(np.real(np.sum(ns * np.diag(G))))
    nh = space.count("high").astype(float)
    high_after = float(np.real(np.sum((T.conj().T @ (nh[:, None] * T)) * G.T)))
    n1 = float(np.real(np.sum(space.count("shell") * np.diag(G))))
    return MomentReport(j=j, operator_floor=floor, trace_after=after, trace_before=before,
                        high_after=high_after, high_ratio=high_after / n1 if n1 > 0 else 0.0)


def q3_parts(space: FockSpace, layout: Layout, vhat, N: Optional[float] = None) -> Dict[str, SparseOperator]:
    """Shell-internal and mixed cubic terms restricted to the layout modes.

    ``S``: ``r, p, r+p in S``; ``M1``: ``r, p in H``, ``r+p in S``; ``M2``: ``r in S``, ``p in H_r``.
    Each includes its hermitian conjugate.
    """
    N = layout.N if N is None else N
    S, H = set(layout.shell), set(layout.high)
    sq = math.sqrt(N)

    def term(r, p):
        return sq * vhat(r) * (space.annihilator(neg(r)).T @ space.annihilator(add(r, p)).T @ space.annihilator(p))

    parts = {}
    groups = {
        "S": [(r, p) for r in layout.shell for p in layout.shell if add(r, p) in S],
        "M1": [(r, p) for r in layout.high for p in layout.high if add(r, p) in S],
        "M2": [(r, p) for r in layout.shell for p in layout.high_restricted(r)],
    }
    for name, pairs in groups.items():
        M = sp.csr_matrix((space.dim, space.dim))
        for r, p in pairs:
            if space.has(neg(r)) and space.has(add(r, p)) and space.has(p):
                M = M + term(r, p)
        parts[name] = SparseOperator(M + M.T.conj(), hermitian=True)
    return parts
