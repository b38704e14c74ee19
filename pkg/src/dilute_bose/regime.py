"""Scaling regime linking the thermodynamic box to the rescaled unit torus.

A gas of density ``rho`` in a box of side ``L = rho**(-gamma)`` holds
``N = rho * L**3`` particles. Rescaling lengths by ``L`` maps the problem to
the unit torus with an interaction of range ``N**(kappa - 1)``, where
``kappa = (2*gamma - 1) / (3*gamma - 1)``.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from ._numerics import lattice_ball

_REL = 1e-12

CONDENSATE, LOW, SHELL, HIGH, OUTSIDE = 0, 1, 2, 3, 4
CLASS_NAMES = {CONDENSATE: "condensate", LOW: "low", SHELL: "shell", HIGH: "high", OUTSIDE: "outside-cap"}


def kappa_of_gamma(gamma: float) -> float:
    """Rescaling exponent ``(2 gamma - 1) / (3 gamma - 1)``."""
    return (2.0 * gamma - 1.0) / (3.0 * gamma - 1.0)


def gamma_of_kappa(kappa: float) -> float:
    """Inverse of :func:`kappa_of_gamma`, valid for ``1/2 < kappa < 2/3``."""
    return (1.0 - kappa) / (2.0 - 3.0 * kappa)


def disjointness_margin(kappa: float, epsilon: float) -> float:
    """Value of ``-2 + 3 kappa + 4 epsilon``; negative means H and S are disjoint."""
    return -2.0 + 3.0 * kappa + 4.0 * epsilon


def in_full_window(kappa: float, epsilon: float) -> bool:
    """Whether ``1/2 < kappa < 8/15 - 2 epsilon / 3``."""
    return 0.5 < kappa < 8.0 / 15.0 - 2.0 * epsilon / 3.0


@dataclass(frozen=True)
class RegimeParams:
    """Scaling dictionary of one run.

    Attributes
    ----------
    rho : float
        Number density.
    gamma : float
        Box exponent, ``L = rho**(-gamma)``.
    kappa : float
        Rescaling exponent.
    epsilon : float
        Shell width exponent.
    N : float
        Rescaled particle scale ``rho**(1 - 3 gamma)``.
    L : float
        Box side, equal to ``N**(1 - kappa)``.
    T : float
        Temperature in units with ``hbar = 2m = 1``.
    T_eff : float
        Temperature on the unit torus, ``T * N**(2 - 2 kappa)``.
    a : float
        Full-space scattering length used to set ``T``.
    temp_ratio : float
        ``T / (rho a)``.
    """

    rho: float
    gamma: float
    kappa: float
    epsilon: float
    N: float
    L: float
    T: float
    T_eff: float
    a: float = 1.0
    temp_ratio: float = 0.0

    @property
    def full_theorem(self) -> bool:
        """True when ``1/2 < kappa < 8/15 - 2 epsilon/3``, where the complete bound applies."""
        return in_full_window(self.kappa, self.epsilon)

    @property
    def shell_inner(self) -> float:
        return self.N ** (self.kappa / 2.0 - self.epsilon)

    @property
    def shell_outer(self) -> float:
        return self.N ** (self.kappa / 2.0 + self.epsilon)

    @property
    def high_inner(self) -> float:
        return self.N ** (1.0 - self.kappa - self.epsilon)

    @property
    def support_scale(self) -> float:
        """Momentum scale ``N**(1 - kappa)`` of the rescaled interaction."""
        return self.N ** (1.0 - self.kappa)

    def with_scattering_length(self, a: float) -> "RegimeParams":
        """Copy with ``a`` replaced and ``T``, ``T_eff`` recomputed from ``temp_ratio``."""
        T = self.temp_ratio * self.rho * a
        return dataclasses.replace(self, a=a, T=T, T_eff=T * self.L**2)

    def with_temperature(self, T: float) -> "RegimeParams":
        """Copy with an explicit temperature."""
        if T < 0:
            raise ValueError("temperature must be non-negative")
        ratio = T / (self.rho * self.a) if self.a > 0 else 0.0
        return dataclasses.replace(self, T=T, T_eff=T * self.L**2, temp_ratio=ratio)


def _check_exponents(kappa: float, epsilon: float) -> None:
    if not kappa > 0.5:
        raise ValueError(f"kappa must exceed 1/2 (got kappa={kappa!r})")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    margin = disjointness_margin(kappa, epsilon)
    if not margin < 0:
        raise ValueError(
            "momentum sets overlap: need -2 + 3*kappa + 4*epsilon < 0, "
            f"got {margin:.6g} for kappa={kappa:.6g}, epsilon={epsilon:.6g}"
        )


def derive_regime(
    rho: float,
    gamma: float,
    epsilon: float,
    temp_ratio: float = 0.0,
    a: float = 1.0,
    strict: bool = False,
) -> RegimeParams:
    """Build the scaling dictionary from physical inputs.

    Parameters
    ----------
    rho : float
        Density, ``rho > 0``.
    gamma : float
        Box exponent, ``gamma > 1``.
    epsilon : float
        Shell width exponent.
    temp_ratio : float
        ``T / (rho a)``; ``T`` is set with the given ``a``.
    a : float
        Scattering length; 1 is a placeholder until the oracle value is known.
    strict : bool
        If True also require the full-theorem window
        ``1/2 < kappa < 8/15 - 2 epsilon/3``.

    Raises
    ------
    ValueError
        For ``gamma <= 1``, overlapping momentum sets, an ``N`` beyond the
        floating-point range, or (strict) a pair outside the full-theorem window.
    """
    if not rho > 0:
        raise ValueError("rho must be positive")
    if temp_ratio < 0:
        raise ValueError("temp_ratio must be non-negative")
    if not gamma > 1:
        raise ValueError(f"kappa must exceed 1/2 (gamma={gamma!r} gives kappa <= 1/2)")
    kappa = kappa_of_gamma(gamma)
    _check_exponents(kappa, epsilon)
    if strict and not in_full_window(kappa, epsilon):
        raise ValueError(
            f"outside full-theorem window: need kappa < 8/15 - 2*epsilon/3 = "
            f"{8 / 15 - 2 * epsilon / 3:.6g}, got kappa={kappa:.6g}"
        )
    if (1.0 - 3.0 * gamma) * math.log10(rho) > 300:
        raise ValueError("N = rho^(1 - 3 gamma) exceeds the floating-point range")
    N = rho ** (1.0 - 3.0 * gamma)
    L = rho ** (-gamma)
    L_alt = N ** (1.0 - kappa)
    if abs(L - L_alt) > _REL * 10 * L:
        raise ArithmeticError(f"box side mismatch: {L!r} vs {L_alt!r}")
    T = temp_ratio * rho * a
    return RegimeParams(
        rho=rho, gamma=gamma, kappa=kappa, epsilon=epsilon, N=N, L=L,
        T=T, T_eff=T * L * L, a=a, temp_ratio=temp_ratio,
    )


def regime_from_N(
    N: float, kappa: float, epsilon: float, temp_ratio: float = 0.0, a: float = 1.0
) -> RegimeParams:
    """Scaling dictionary for a chosen particle scale ``N``.

    Useful for ladders in ``N`` and for small synthetic simulator runs. The
    density is ``N**(-2 + 3 kappa)``.
    """
    if not N > 0:
        raise ValueError("N must be positive")
    _check_exponents(kappa, epsilon)
    if not kappa < 2.0 / 3.0:
        raise ValueError("kappa must be below 2/3")
    gamma = gamma_of_kappa(kappa)
    rho = N ** (-2.0 + 3.0 * kappa)
    L = N ** (1.0 - kappa)
    T = temp_ratio * rho * a
    return RegimeParams(
        rho=rho, gamma=gamma, kappa=kappa, epsilon=epsilon, N=float(N), L=L,
        T=T, T_eff=T * L * L, a=a, temp_ratio=temp_ratio,
    )


@dataclass(frozen=True)
class MomentumSets:
    """Classification of ``2 pi Z^3`` inside a ball of radius ``radius_cap``.

    ``points`` holds integer vectors ``n`` (momentum ``2 pi n``) in
    lexicographic order and ``labels`` the class code of each row.
    """

    params: RegimeParams
    radius_cap: float
    points: np.ndarray
    labels: np.ndarray
    _lookup: dict = field(repr=False, compare=False, default_factory=dict)

    def _select(self, code: int) -> np.ndarray:
        return self.points[self.labels == code]

    @property
    def shell(self) -> np.ndarray:
        return self._select(SHELL)

    @property
    def high(self) -> np.ndarray:
        return self._select(HIGH)

    @property
    def low(self) -> np.ndarray:
        """Nonzero points that are neither shell nor high."""
        return self._select(LOW)

    def classify(self, n) -> int:
        """Class code of an integer vector, ``OUTSIDE`` beyond the cap."""
        return self._lookup.get(tuple(int(v) for v in n), OUTSIDE)

    def high_restricted(self, k) -> np.ndarray:
        """``H_k = {r in H : r + k in H}`` within the cap."""
        k = np.asarray(k, dtype=int)
        h = self.high
        mask = np.array([self.classify(r + k) == HIGH for r in h], dtype=bool)
        return h[mask] if h.size else h

    def counts(self) -> dict:
        return {CLASS_NAMES[c]: int(np.sum(self.labels == c)) for c in (CONDENSATE, LOW, SHELL, HIGH)}


def classify_norms(p: np.ndarray, params: RegimeParams) -> np.ndarray:
    """Class codes for momenta of norm ``p`` (no cap applied)."""
    p = np.asarray(p, dtype=float)
    out = np.full(p.shape, LOW, dtype=np.int8)
    out[p == 0] = CONDENSATE
    out[(p > params.shell_inner) & (p <= params.shell_outer)] = SHELL
    out[p > params.high_inner] = HIGH
    return out


def momentum_sets(params: RegimeParams, radius_cap: float) -> MomentumSets:
    """Partition the truncated lattice into condensate, low, shell and high points.

    Raises
    ------
    ValueError
        If the cap does not contain the shell, or the shell holds no lattice point.
    """
    if radius_cap < params.shell_outer:
        raise ValueError(
            f"radius_cap={radius_cap:.6g} is below the shell outer radius {params.shell_outer:.6g}"
        )
    if not disjointness_margin(params.kappa, params.epsilon) < 0:
        raise ValueError("momentum sets overlap: need -2 + 3*kappa + 4*epsilon < 0")
    pts = lattice_ball(radius_cap)
    norms = 2.0 * np.pi * np.sqrt(np.einsum("ij,ij->i", pts, pts).astype(float))
    labels = classify_norms(norms, params)
    if not np.any(labels == SHELL):
        raise ValueError(
            "shell empty: no lattice point with "
            f"{params.shell_inner:.6g} < |p| <= {params.shell_outer:.6g}; N too small for epsilon"
        )
    lookup = {tuple(int(v) for v in row): int(c) for row, c in zip(pts, labels)}
    return MomentumSets(params=params, radius_cap=radius_cap, points=pts, labels=labels, _lookup=lookup)


def shell_volume_count(params: RegimeParams) -> float:
    """Continuum estimate of ``|S|``: annulus volume over ``(2 pi)^3``."""
    k, e, N = params.kappa, params.epsilon, params.N
    return N ** (1.5 * k) * (N ** (3 * e) - N ** (-3 * e)) * (4.0 * math.pi / 3.0) / (2.0 * math.pi) ** 3
