"""Weyl shift, quadratic Bogoliubov unitaries and Gibbs states on a truncated Fock space."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, Mapping, Optional, Tuple, Union

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .space import FockSpace, SparseOperator, as_label, ladder, max_abs, neg

TWO_PI = 2.0 * math.pi


def momentum_norm(label) -> float:
    """``|2 pi n|`` for an integer label ``n``."""
    n = np.asarray(as_label(label), dtype=float)
    return TWO_PI * float(np.sqrt(n @ n))


def low_sector(space: FockSpace, n_max: int) -> np.ndarray:
    """Indices of basis vectors with total occupation at most ``n_max``."""
    return np.flatnonzero(space.count() <= n_max)


def unitary_from_generator(gen: SparseOperator) -> SparseOperator:
    """``exp(G)`` for an anti-hermitian ``G`` (dense scaling and squaring)."""
    dev = max_abs(gen.matrix + gen.matrix.conj().T)
    if dev > 1e-12:
        raise ValueError(f"generator is not anti-hermitian (deviation {dev:.3e})")
    U = sla.expm(gen.toarray())
    U[np.abs(U) < 1e-300] = 0.0
    return SparseOperator(U, unitary=True)


def required_condensate_cap(amplitude: float, tail: float = 1e-12) -> int:
    """Smallest cap with Poisson tail ``P(n > cap) < tail`` for mean ``amplitude**2``."""
    lam = amplitude * amplitude
    if lam == 0:
        return 0
    n, p, cdf = 0, math.exp(-lam), 0.0
    while True:
        cdf += p
        if 1.0 - cdf < tail:
            return n
        n += 1
        p *= lam / n


def weyl(space: FockSpace, amplitude: float) -> SparseOperator:
    """``W = exp(amplitude (a_0^* - a_0))`` on the truncated space.

    Raises
    ------
    ValueError
        If no condensate mode is present, or the condensate cap is too small
        for the coherent-state tail (the message states the required cap).
    """
    zeros = space.labels_with("condensate")
    if not zeros:
        raise ValueError("weyl needs a condensate mode")
    label = zeros[0]
    cap = space.caps[space.position(label)]
    need = required_condensate_cap(amplitude) + 10
    if cap < need:
        raise ValueError(f"amplitude {amplitude!r} too large for condensate cap {cap}: need cap >= {need}")
    a, ad = ladder(space, label)
    return unitary_from_generator((ad - a) * amplitude)


def pair_generator(space: FockSpace, eta_map: Mapping) -> SparseOperator:
    """``B = 1/2 sum_p eta_p (a_p^* a_{-p}^* - a_p a_{-p})`` over the keys of ``eta_map``.

    Raises
    ------
    ValueError
        If a key lacks its partner ``-p`` in the map or the space, is a
        condensate mode, or ``eta_{-p} != eta_p``.
    """
    eta = {as_label(k): float(v) for k, v in eta_map.items()}
    G = sp.csr_matrix((space.dim, space.dim))
    for p, e in eta.items():
        q = neg(p)
        if q not in eta or not space.has(q) or not space.has(p):
            raise ValueError(f"unpaired mode {p} in eta_map")
        if space.tag(p) == "condensate":
            raise ValueError("eta_map must not contain the condensate mode")
        if eta[q] != e:
            raise ValueError(f"eta_map not even: eta{p}={e!r}, eta{q}={eta[q]!r}")
        if e == 0.0:
            continue
        ap, apd = space.annihilator(p), space.annihilator(p).T
        aq, aqd = space.annihilator(q), space.annihilator(q).T
        G = G + 0.5 * e * (apd @ aqd - ap @ aq)
    return SparseOperator(G)


def quadratic_bogoliubov(space: FockSpace, eta_map: Mapping) -> SparseOperator:
    """``U = exp(B)`` with ``B`` from :func:`pair_generator`.

    ``U^* a_p U = cosh(eta_p) a_p + sinh(eta_p) a_{-p}^*`` up to truncation.
    """
    return unitary_from_generator(pair_generator(space, eta_map))


def conjugate(U: SparseOperator, A: SparseOperator) -> np.ndarray:
    """Dense ``U^* A U``."""
    Ud = U.toarray()
    return Ud.conj().T @ (A.matrix @ Ud)


def extract_coefficients(space: FockSpace, U: SparseOperator, p, n_low: int = 3) -> Tuple[float, float, float]:
    """Least-squares ``(c, s)`` with ``U^* a_p U ~ c a_p + s a_{-p}^*`` on low columns.

    Returns ``(c, s, residual)`` with the max-norm residual of the fit.
    """
    p = as_label(p)
    cols = low_sector(space, n_low)
    lhs = conjugate(U, ladder(space, p)[0])[:, cols]
    b1 = space.annihilator(p).toarray()[:, cols]
    b2 = space.annihilator(neg(p)).T.toarray()[:, cols]
    design = np.column_stack([b1.ravel(), b2.ravel()])
    coef, *_ = np.linalg.lstsq(design, lhs.ravel(), rcond=None)
    c, s = (float(np.real(v)) for v in coef)
    resid = max_abs(lhs - c * b1 - s * b2)
    return c, s, resid


@dataclass(frozen=True)
class DiagoReport:
    deviation: float
    constant: float
    energies: Dict
    dimension: int


def shell_pair_hamiltonian(space: FockSpace, coupling_B: float) -> SparseOperator:
    """``sum_S p^2 N_p + B N_S + (B/2) sum_S (a_p^* a_{-p}^* + a_p a_{-p})``."""
    H = sp.csr_matrix((space.dim, space.dim))
    shell = space.labels_with("shell")
    for p in shell:
        a = space.annihilator(p)
        aq = space.annihilator(neg(p))
        H = H + (momentum_norm(p) ** 2 + coupling_B) * (a.T @ a)
        H = H + 0.5 * coupling_B * (a.T @ aq.T + a @ aq)
    return SparseOperator(H, hermitian=True)


def diago_check(space: FockSpace, a: float, N: float, kappa: float, n_low: int = 4) -> DiagoReport:
    """Compare ``e^{-B2} H e^{B2}`` with ``constant + sum_S e_p N_p`` on low columns.

    ``B2`` pairs the shell modes with ``tanh(2 tau_p) = -B/(p^2 + B)``,
    ``B = 8 pi a N^kappa``, and the expected constant is
    ``1/2 sum_S (e_p - p^2 - B)``.
    """
    B = 8.0 * math.pi * a * N**kappa
    shell = space.labels_with("shell")
    if not shell:
        raise ValueError("diago_check needs shell modes")
    eta, energies, const_terms = {}, {}, []
    for p in shell:
        p2 = momentum_norm(p) ** 2
        x = -B / (p2 + B)
        eta[p] = 0.25 * (math.log1p(x) - math.log1p(-x))
        e = math.sqrt(p2 * p2 + 2.0 * B * p2)
        energies[p] = e
        const_terms.append(0.5 * (-B * B / (e + p2 + B)))
    const = math.fsum(const_terms)
    U = quadratic_bogoliubov(space, eta)
    lhs = conjugate(U, shell_pair_hamiltonian(space, B))
    rhs = const * np.ones(space.dim)
    for p, e in energies.items():
        rhs = rhs + e * space.occupation(p)
    cols = low_sector(space, n_low)
    diff = lhs[:, cols] - np.diag(rhs)[:, cols]
    return DiagoReport(deviation=max_abs(diff), constant=const, energies=energies, dimension=space.dim)


def q2_operator(space: FockSpace, vhat: Callable, N0: float, modes=None) -> SparseOperator:
    """``(N0/2) sum_p V(p) (a_p^* a_{-p}^* + a_p a_{-p})`` over ``modes`` (default: non-condensate)."""
    modes = [m.label for m in space.modes if m.tag != "condensate"] if modes is None else [as_label(m) for m in modes]
    Q = sp.csr_matrix((space.dim, space.dim))
    for p in modes:
        q = neg(p)
        if not space.has(q):
            continue
        a, aq = space.annihilator(p), space.annihilator(q)
        Q = Q + 0.5 * N0 * vhat(p) * (a.T @ aq.T + a @ aq)
    return SparseOperator(Q, hermitian=True)


@dataclass(frozen=True)
class Q2Report:
    """Deviation of ``e^{-B} Q2 e^B - Q2`` from the three-term identity.

    ``deviation[w]`` uses weight ``w`` on the ``sum V c s a^* a`` term; the
    derived identity has ``w = 2``.
    """

    deviation: Dict[int, float]
    dimension: int


def q2_conjugation_check(space: FockSpace, eta_map: Mapping, vhat: Callable, N0: float,
                         n_low: int = 3, weights=(1, 2)) -> Q2Report:
    """Check ``e^{-B}Q2e^{B} - Q2 = N0 sum V s^2 (a^*a^* + h.c.) + w N0 sum V c s a^*a + N0 sum V c s``."""
    eta = {as_label(k): float(v) for k, v in eta_map.items()}
    U = quadratic_bogoliubov(space, eta)
    Q2 = q2_operator(space, vhat, N0, modes=list(eta))
    lhs = conjugate(U, Q2) - Q2.toarray()
    pair = np.zeros((space.dim, space.dim))
    number = np.zeros(space.dim)
    const = []
    for p, e in eta.items():
        c, s = math.cosh(e), math.sinh(e)
        v = vhat(p)
        a, aq = space.annihilator(p), space.annihilator(neg(p))
        pair += N0 * v * s * s * (a.T @ aq.T + a @ aq).toarray()
        number += N0 * v * c * s * space.occupation(p)
        const.append(N0 * v * c * s)
    cols = low_sector(space, n_low)
    out = {}
    for w in weights:
        rhs = pair + np.diag(w * number + math.fsum(const))
        out[int(w)] = max_abs((lhs - rhs)[:, cols])
    return Q2Report(deviation=out, dimension=space.dim)


EnergySource = Union[Callable, Mapping]


def _mode_energies(space: FockSpace, energies: EnergySource) -> Dict:
    out = {}
    for p in space.labels_with("shell"):
        out[p] = float(energies[p]) if isinstance(energies, Mapping) else float(energies(momentum_norm(p)))
    return out


def gibbs_gamma0(space: FockSpace, energies: EnergySource, T_eff: float) -> SparseOperator:
    """Diagonal ``Z^{-1} 1{N_{S^c}=0} exp(-sum_S e_p N_p / T_eff)`` on the truncated space.

    ``energies`` is a dispersion callable of ``|p|`` or a map label -> energy.
    ``T_eff = 0`` gives the vacuum projector.
    """
    if T_eff < 0:
        raise ValueError("T_eff must be non-negative")
    e = _mode_energies(space, energies)
    if not e:
        raise ValueError("gibbs_gamma0 needs shell modes")
    support = space.count() == space.count("shell")
    if T_eff == 0:
        w = (space.count() == 0).astype(float)
    else:
        expo = np.zeros(space.dim)
        for p, ep in e.items():
            expo += ep * space.occupation(p)
        expo = -expo / T_eff
        expo[~support] = -np.inf
        w = np.exp(expo - expo[support].max())
        w /= math.fsum(w)
    return space.diag(w)


def trace(op, rho) -> complex:
    """``Tr(op rho)`` for sparse or dense operators."""
    A = op.matrix if isinstance(op, SparseOperator) else op
    R = rho.matrix if isinstance(rho, SparseOperator) else rho
    if sp.issparse(A):
        A = A.toarray()
    if sp.issparse(R):
        R = R.toarray()
    return complex(np.sum(A * R.T))


def dress(U: SparseOperator, rho: SparseOperator) -> np.ndarray:
    """Dense ``U rho U^*``."""
    Ud = U.toarray()
    return Ud @ rho.toarray() @ Ud.conj().T


def exact_shell_moments(space: FockSpace, energies: EnergySource, T_eff: float,
                        eta_map: Optional[Mapping] = None) -> Tuple[float, float]:
    """``(Tr N_S Gamma, Tr N_S^2 Gamma)`` with ``Gamma = e^{B} Gamma0 e^{-B}``."""
    g0 = gibbs_gamma0(space, energies, T_eff)
    rho = dress(quadratic_bogoliubov(space, eta_map), g0) if eta_map else g0.toarray()
    ns = space.count("shell").astype(float)
    d = np.real(np.diag(rho))
    return float(np.sum(ns * d)), float(np.sum(ns * ns * d))


def exact_free_energy(space: FockSpace, energies: EnergySource, T_eff: float) -> float:
    """``-T_eff log Z`` of the truncated shell Gibbs state."""
    e = _mode_energies(space, energies)
    support = space.count() == space.count("shell")
    expo = np.zeros(space.dim)
    for p, ep in e.items():
        expo += ep * space.occupation(p)
    x = -expo[support] / T_eff
    m = x.max()
    return float(-T_eff * (m + math.log(math.fsum(np.exp(x - m)))))
