"""Bogoliubov coefficients, dispersion and the two constant-term evaluations.

Two families of hyperbolic coefficients enter the trial state:

* the high-momentum branch ``c_p = sqrt(1 + N0^2 phi_p^2)``, ``s_p = N0 phi_p``
  for ``|p| > N^(kappa/2 + epsilon)``, trivial otherwise;
* the shell branch ``tanh(2 tau_p) = -8 pi a N^kappa / (p^2 + 8 pi a N^kappa)``
  for ``p`` in the shell ``S``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from ._numerics import stable_sum
from .regime import RegimeParams
from .scattering import (
    Potential,
    ScatteringSolution,
    TWO_PI,
    _Convolver,
    DIRECT_MAX_POINTS,
    rescaled_fourier,
    write_csv_atomic,
)


def _p2_of(points: np.ndarray) -> np.ndarray:
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    return TWO_PI**2 * np.einsum("ij,ij->i", pts, pts)


@dataclass(frozen=True)
class Dispersion:
    """Excitation energy ``e(p) = sqrt(p^4 + 16 pi a N^kappa p^2)``."""

    a: float
    coupling: float

    @classmethod
    def from_params(cls, a: float, params: RegimeParams) -> "Dispersion":
        return cls(a=a, coupling=16.0 * math.pi * a * params.N**params.kappa)

    @property
    def B(self) -> float:
        """Off-diagonal weight ``8 pi a N^kappa``."""
        return 0.5 * self.coupling

    def A(self, p) -> np.ndarray:
        """Diagonal weight ``p^2 + 8 pi a N^kappa`` for momentum norms ``p``."""
        p = np.asarray(p, dtype=float)
        return p * p + self.B

    def __call__(self, p) -> np.ndarray:
        p = np.abs(np.asarray(p, dtype=float))
        return p * np.sqrt(p * p + self.coupling)

    def from_AB(self, p) -> np.ndarray:
        """Second route ``sqrt(A^2 - B^2)`` written as ``sqrt((A - B)(A + B))``."""
        A = self.A(p)
        return np.sqrt((A - self.B) * (A + self.B))


@dataclass(frozen=True)
class HighBranch:
    """``(c_p, s_p)`` on the lattice points of a scattering solution."""

    points: np.ndarray
    c: np.ndarray
    s: np.ndarray
    N0: float

    def to_csv(self, path: str) -> None:
        rows = [("px", "py", "pz", "c", "s")]
        for n, c, s in zip(self.points, self.c, self.s):
            p = TWO_PI * n
            rows.append((repr(float(p[0])), repr(float(p[1])), repr(float(p[2])), repr(float(c)), repr(float(s))))
        write_csv_atomic(path, rows)


@dataclass(frozen=True)
class ShellBranch:
    """``(tau_p, gamma_p, sigma_p)`` on the shell points."""

    points: np.ndarray
    tau: np.ndarray
    gamma: np.ndarray
    sigma: np.ndarray

    def to_csv(self, path: str) -> None:
        rows = [("px", "py", "pz", "tau", "gamma", "sigma")]
        for n, t, g, s in zip(self.points, self.tau, self.gamma, self.sigma):
            p = TWO_PI * n
            rows.append((repr(float(p[0])), repr(float(p[1])), repr(float(p[2])),
                         repr(float(t)), repr(float(g)), repr(float(s))))
        write_csv_atomic(path, rows)


@dataclass(frozen=True)
class BogoliubovCoeffs:
    high: Optional[HighBranch]
    shell: Optional[ShellBranch]
    N0: float


def high_branch(phi: Union[ScatteringSolution, np.ndarray], N0: float, params: RegimeParams,
                points: Optional[np.ndarray] = None) -> HighBranch:
    """High-momentum coefficients from the scattering solution.

    Parameters
    ----------
    phi : ScatteringSolution or ndarray
        Solution, or raw values together with ``points`` (integer labels).
    N0 : float
        Condensate number.
    params : RegimeParams
    """
    if isinstance(phi, ScatteringSolution):
        points, values = phi.points, phi.phi
    else:
        if points is None:
            raise ValueError("points are required with raw phi values")
        values = np.asarray(phi, dtype=float)
    points = np.asarray(points).reshape(-1, 3)
    norms = np.sqrt(_p2_of(points))
    s = np.where(norms > params.shell_outer, N0 * values, 0.0)
    c = np.hypot(1.0, s)
    return HighBranch(points=points, c=c, s=s, N0=N0)


def shell_branch(a: float, params: RegimeParams, S: np.ndarray) -> ShellBranch:
    """Shell coefficients with ``tanh(2 tau) = -B / (p^2 + B)``, ``B = 8 pi a N^kappa``.

    ``tau = (log1p(x) - log1p(-x)) / 4`` with ``x = tanh(2 tau)``.
    """
    S = np.asarray(S).reshape(-1, 3)
    p2 = _p2_of(S)
    B = 8.0 * math.pi * a * params.N**params.kappa
    x = -B / (p2 + B)
    if np.any(np.abs(x) >= 1.0):
        raise ValueError("|tanh(2 tau)| >= 1: shell contains p = 0 or a < 0")
    tau = 0.25 * (np.log1p(x) - np.log1p(-x))
    return ShellBranch(points=S, tau=tau, gamma=np.cosh(tau), sigma=np.sinh(tau))


def diago_constant(S: np.ndarray, a: float, params: RegimeParams, route: str = "stable") -> float:
    """``1/2 sum_S [e_p - p^2 - 8 pi a N^kappa]``.

    ``route="stable"`` uses ``e - A = -B^2 / (e + A)``; ``route="direct"`` the
    literal difference.
    """
    S = np.asarray(S).reshape(-1, 3)
    if len(S) == 0:
        raise ValueError("shell is empty")
    disp = Dispersion.from_params(a, params)
    p = np.sqrt(_p2_of(S))
    e = disp(p)
    A = disp.A(p)
    if route == "stable":
        terms = -disp.B**2 / (e + A)
    elif route == "direct":
        terms = e - A
    else:
        raise ValueError(f"unknown route {route!r}")
    return 0.5 * stable_sum(terms)


@dataclass(frozen=True)
class ConstantTerms:
    """Itemized constant term; ``total`` is the compensated sum of the parts."""

    parts: dict

    @property
    def total(self) -> float:
        return math.fsum(self.parts.values())


def renormalized_constant_direct(phi: ScatteringSolution, potential: Potential, N0: float,
                                 params: RegimeParams) -> ConstantTerms:
    """Constant term after the high-momentum Bogoliubov conjugation, summed literally.

    ``N0^2 V_N(0)/2 + sum_p [p^2 s_p^2 + N0 V_N(p) s_p + 1/2 sum_r V_N(p - r) s_p s_r]``
    with ``s`` from :func:`high_branch`.
    """
    hb = high_branch(phi, N0, params)
    s = hb.s
    p2 = phi.p2
    vn = rescaled_fourier(potential, params, phi.momenta)
    vn0 = float(rescaled_fourier(potential, params, np.zeros(3)))
    method = "direct" if len(phi.points) <= DIRECT_MAX_POINTS else "fft"
    conv = _Convolver(phi.points, potential, params, method)(s) if np.any(s) else np.zeros_like(s)
    parts = {
        "zero_mode": 0.5 * N0 * N0 * vn0,
        "kinetic": stable_sum(p2 * s * s),
        "linear": N0 * stable_sum(vn * s),
        "quadratic": 0.5 * stable_sum(s * conv),
    }
    return ConstantTerms(parts)


def renormalized_constant_closed(a: float, N0: float, params: RegimeParams, S: np.ndarray) -> ConstantTerms:
    """``4 pi a N^(1+kappa) - 8 pi a N^kappa (N - N0) + sum_S (4 pi a N^kappa)^2 / p^2``."""
    S = np.asarray(S).reshape(-1, 3)
    N, k = params.N, params.kappa
    g = 4.0 * math.pi * a * N**k
    p2 = _p2_of(S)
    parts = {
        "leading": g * N,
        "depletion_shift": -2.0 * g * (N - N0),
        "shell": stable_sum(g * g / p2) if len(S) else 0.0,
    }
    return ConstantTerms(parts)
