"""Gibbs sums over the shell, Riemann-sum limits and the free-energy report."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

from ._numerics import lattice_ball, log1mexp, loglog_slope, stable_sum
from .bogoliubov import Dispersion, ShellBranch
from .regime import RegimeParams
from .scattering import ScatteringSolution, TWO_PI, write_csv_atomic

LHY_COEFFICIENT = 128.0 / (15.0 * math.sqrt(math.pi))
EXP_CUTOFF = 700.0


class QuadratureError(RuntimeError):
    def __init__(self, message: str, estimate: float, error: float):
        super().__init__(f"{message}: estimate {estimate!r} with error {error:.3e}")
        self.estimate = estimate
        self.error = error


# ---------------------------------------------------------------- occupations


def bose_occupation(e, T_eff: float) -> np.ndarray:
    """Bose-Einstein occupation ``1 / (exp(e / T_eff) - 1)``.

    ``T_eff = 0`` returns zeros (the vacuum limit).

    Raises
    ------
    ValueError
        If any energy is not positive or ``T_eff < 0``.
    """
    e = np.asarray(e, dtype=float)
    if np.any(~(e > 0)):
        raise ValueError("occupations need strictly positive energies; the zero mode is excluded")
    if T_eff < 0:
        raise ValueError("T_eff must be non-negative")
    if T_eff == 0:
        return np.zeros_like(e)
    x = e / T_eff
    with np.errstate(over="ignore"):
        return np.where(x > EXP_CUTOFF, np.exp(-x), 1.0 / np.expm1(np.minimum(x, EXP_CUTOFF)))


@dataclass(frozen=True)
class ThermalOccupations:
    """Occupations of the free Gibbs state on the shell.

    ``n2 = 2 n^2 + n`` is the one-mode second moment.
    """

    T_eff: float
    points: np.ndarray
    n: np.ndarray
    n2: np.ndarray

    @classmethod
    def build(cls, S: np.ndarray, dispersion: Dispersion, T_eff: float) -> "ThermalOccupations":
        S = np.asarray(S).reshape(-1, 3)
        e = dispersion(_norms(S))
        n = bose_occupation(e, T_eff)
        return cls(T_eff=T_eff, points=S, n=n, n2=2.0 * n * n + n)


def _norms(S: np.ndarray) -> np.ndarray:
    S = np.asarray(S, dtype=float).reshape(-1, 3)
    return TWO_PI * np.sqrt(np.einsum("ij,ij->i", S, S))


def _weights(S, dispersion: Dispersion, shell_coeffs: Optional[ShellBranch]):
    """Return ``(A/e, (A/e - 1)/2, B/e)`` per shell point."""
    p = _norms(S)
    if shell_coeffs is not None:
        g, s = shell_coeffs.gamma, shell_coeffs.sigma
        return g * g + s * s, s * s, -2.0 * g * s
    e = dispersion(p)
    A = dispersion.A(p)
    half_dep = 0.5 * dispersion.B**2 / (e * (e + A))  # (A/e - 1)/2 without cancellation
    return A / e, half_dep, dispersion.B / e


@dataclass(frozen=True)
class ShellNumber:
    thermal: float
    depletion: float
    free_gas: float

    @property
    def total(self) -> float:
        return self.thermal + self.depletion


def shell_number(S: np.ndarray, dispersion: Dispersion, shell_coeffs: Optional[ShellBranch],
                 T_eff: float) -> ShellNumber:
    """Expected number of shell particles in the dressed Gibbs state.

    ``sum_S (A/e) n_p + 1/2 sum_S (A/e - 1)``. With shell coefficients given the
    weights are taken from ``gamma^2 + sigma^2`` and ``sigma^2``; otherwise from
    the dispersion. ``free_gas`` is ``sum_S 1/(exp(p^2/T_eff) - 1)``.
    """
    S = np.asarray(S).reshape(-1, 3)
    if len(S) == 0:
        raise ValueError("shell is empty")
    p = _norms(S)
    n = bose_occupation(dispersion(p), T_eff)
    w, half_dep, _ = _weights(S, dispersion, shell_coeffs)
    free = bose_occupation(p * p, T_eff)
    return ShellNumber(thermal=stable_sum(w * n), depletion=stable_sum(half_dep), free_gas=stable_sum(free))


@dataclass(frozen=True)
class SecondMoment:
    value: float
    mean: float
    variance: float


def shell_number_second_moment(S: np.ndarray, dispersion: Dispersion, T_eff: float,
                               shell_coeffs: Optional[ShellBranch] = None) -> SecondMoment:
    """``Tr N_S^2 Gamma`` for the dressed Gibbs state, by Wick's rule.

    With ``g_p = <a_p^* a_p>`` and ``m_p = <a_p a_{-p}>`` the state is
    quasi-free, so ``<N_S^2> = (sum g)^2 + sum_p [g_p (g_p + 1) + m_p^2]``.
    For vanishing pairing this is the sum of one-mode moments ``2 n^2 + n``
    plus the off-diagonal products.
    """
    S = np.asarray(S).reshape(-1, 3)
    if len(S) == 0:
        raise ValueError("shell is empty")
    p = _norms(S)
    n = bose_occupation(dispersion(p), T_eff)
    w, half_dep, b_over_e = _weights(S, dispersion, shell_coeffs)
    g = w * n + half_dep
    m = -b_over_e * (n + 0.5)
    mean = stable_sum(g)
    var = stable_sum(g * (g + 1.0) + m * m)
    return SecondMoment(value=mean * mean + var, mean=mean, variance=var)


# ---------------------------------------------------------------- integrals


def _quad(f, lo, hi, epsrel=1e-11):
    """Adaptive quadrature; the third value is True when QUADPACK warned."""
    out = integrate.quad(f, lo, hi, epsabs=0.0, epsrel=epsrel, limit=400, full_output=1)
    return out[0], out[1], len(out) > 3


def lhy_closed_form(a: float) -> float:
    """``4 pi a * 128 a^(3/2) / (15 sqrt(pi))``."""
    return 4.0 * math.pi * a * LHY_COEFFICIENT * a**1.5


def lhy_integrand(q, a: float) -> np.ndarray:
    """``sqrt(q^4 + 16 pi a q^2) - q^2 - 8 pi a + (8 pi a)^2 / (2 q^2)`` in cancellation-free form.

    Equal to ``b^3 (s + 3 q^2) / (8 (s + q^2)^3)`` with ``b = 16 pi a`` and
    ``s = sqrt(q^4 + b q^2)``.
    """
    q = np.asarray(q, dtype=float)
    b = 16.0 * math.pi * a
    q2 = q * q
    s = np.sqrt(q2 * q2 + b * q2)
    with np.errstate(divide="ignore", invalid="ignore"):
        return b**3 * (s + 3.0 * q2) / (8.0 * (s + q2) ** 3)


def lhy_integral(a: float) -> float:
    """Radial quadrature of ``(1/2) (2 pi)^-3 int [lhy_integrand] dq``.

    The prefactor 1/2 is the one carried by the shell sum whose Riemann limit
    this is; with it the value equals :func:`lhy_closed_form`.

    Raises
    ------
    QuadratureError
        If the adaptive quadrature reports non-convergence.
    """
    if a < 0:
        raise ValueError("a must be non-negative")
    if a == 0:
        return 0.0
    b = 16.0 * math.pi * a

    def radial(q):
        if q == 0.0:
            return 0.0
        q2 = q * q
        s = math.sqrt(q2 * q2 + b * q2)
        return q2 * b**3 * (s + 3.0 * q2) / (8.0 * (s + q2) ** 3)

    qs = math.sqrt(b)
    total, err = 0.0, 0.0
    for lo, hi in ((0.0, qs), (qs, 10.0 * qs), (10.0 * qs, math.inf)):
        val, e, warned = _quad(radial, lo, hi)
        if warned and e > 1e-9 * abs(val):
            raise QuadratureError("LHY quadrature did not converge", val, e)
        total += val
        err += e
    return 0.5 * 4.0 * math.pi * total / TWO_PI**3


def thermal_integral(a_over_x: float) -> float:
    """``int_{R^3} log(1 - exp(-sqrt(q^4 + 16 pi (a/x) q^2))) dq``.

    Negative for every finite gap parameter. For large ``a/x`` the phonon part
    of the dispersion dominates and the value behaves like
    ``-8 pi zeta(4) (16 pi a/x)^(-3/2)``. The integrand is evaluated as
    ``log(1 - exp(-e))`` without cancellation and the radial integral stops where ``e > 700``. The
    panel ``[0, q0]`` with the logarithmic endpoint singularity uses the
    substitution ``q = q0 u^2``.
    """
    if a_over_x < 0:
        raise ValueError("a/x must be non-negative")
    g = 16.0 * math.pi * a_over_x
    E2 = EXP_CUTOFF**2
    qmax = math.sqrt(0.5 * (-g + math.sqrt(g * g + 4.0 * E2)))

    def radial(q):
        if q == 0.0:
            return 0.0
        q2 = q * q
        e = math.sqrt(q2 * q2 + g * q2)
        return q2 * log1mexp(e)

    q0 = min(qmax, 1.0 / math.sqrt(1.0 + g))

    def inner(u):
        q = q0 * u * u
        return radial(q) * 2.0 * q0 * u

    v1, e1, _ = _quad(inner, 0.0, 1.0)
    v2, e2, _ = _quad(radial, q0, qmax) if qmax > q0 else (0.0, 0.0, False)
    val = 4.0 * math.pi * (v1 + v2)
    if not math.isfinite(val):
        raise QuadratureError("thermal quadrature failed", val, e1 + e2)
    return val


def thermal_integral_series(a_over_x: float = 0.0, terms: int = 200000) -> float:
    """Free-gas value by the Bose series ``-sum_k k^-1 (pi/k)^(3/2)`` (only ``a/x = 0``)."""
    if a_over_x != 0:
        raise ValueError("series oracle only covers the free gas")
    k = np.arange(1, terms + 1, dtype=float)
    head = stable_sum(k ** -2.5)
    # Euler-Maclaurin tail of sum_{k > terms} k^-5/2
    K = float(terms)
    tail = (2.0 / 3.0) * K**-1.5 - 0.5 * K**-2.5 + (5.0 / 24.0) * K**-3.5
    return -(math.pi**1.5) * (head + tail)


# ---------------------------------------------------------------- Riemann sums


def riemann_gap(integrand: Callable, N: float, kappa: float, integral: float,
                r_in: float = 0.0, r_out: float = 1.0) -> float:
    """``|h^3 sum_{q in h Z^3, r_in < |q| <= r_out} f(|q|) - integral|`` with ``h = 2 pi / N^(kappa/2)``."""
    h = TWO_PI / N ** (kappa / 2.0)
    pts = lattice_ball(r_out * TWO_PI / h)
    q = h * np.sqrt(np.einsum("ij,ij->i", pts, pts).astype(float))
    keep = (q > r_in) & (q <= r_out)
    vals = np.asarray(integrand(q[keep]), dtype=float)
    return abs(h**3 * stable_sum(vals) - integral)


def riemann_gap_ladder(integrand: Callable, Ns: Sequence[float], kappa: float, integral: float,
                       r_in: float = 0.0, r_out: float = 1.0) -> tuple:
    """Gaps over a ladder of ``N`` and their fitted log-log exponent."""
    gaps = [riemann_gap(integrand, N, kappa, integral, r_in, r_out) for N in Ns]
    positive = [(N, g) for N, g in zip(Ns, gaps) if g > 0]
    slope = loglog_slope(*zip(*positive)) if len(positive) >= 2 else float("-inf")
    return gaps, slope


# ---------------------------------------------------------------- N0, particle count


@dataclass(frozen=True)
class CondensateChoice:
    N0: float
    slack: float
    depletion_constant: float
    exceeds_N: bool


def choose_N0(params: RegimeParams, shell_number: float) -> CondensateChoice:
    """``N0 = N - Tr N_S Gamma + N^(3 kappa/2 - (kappa - 1/2))``.

    ``depletion_constant`` is ``(N - N0) / N^(3 kappa/2)``. When the slack
    exceeds the shell number ``N0 > N``; this is reported with a warning and
    not clamped.
    """
    N, k = params.N, params.kappa
    if shell_number >= N:
        raise ValueError("regime violated: shell number is not below N")
    slack = N ** (1.5 * k - (k - 0.5))
    N0 = N - shell_number + slack
    exceeds = N0 > N
    if exceeds:
        warnings.warn("N0 exceeds N: slack term larger than the shell number", RuntimeWarning, stacklevel=2)
    return CondensateChoice(N0=N0, slack=slack, depletion_constant=(N - N0) / N ** (1.5 * k), exceeds_N=exceeds)


@dataclass(frozen=True)
class ParticleCount:
    lower: float
    high_occupancy: float
    tail: float
    slack_constant: float

    @property
    def total(self) -> float:
        return self.lower + self.high_occupancy + self.tail


def total_particle_number(params: RegimeParams, phi: ScatteringSolution, N0: float,
                          shell_total: float, occupations_H: Optional[dict] = None) -> ParticleCount:
    """Expected particle number of the trial state.

    ``N0 + Tr N_S Gamma + 2 sum_H N0^2 phi_p^2 <N_p> + sum_{|p| > N^(kappa/2+eps)} N0^2 phi_p^2``.
    ``occupations_H`` maps integer labels to ``<N_p>``; absent labels count as 0.
    ``slack_constant`` is the last two terms divided by ``N^(3 kappa/2 - eps)``.
    """
    norms = phi.norms
    w = N0 * N0 * phi.phi * phi.phi
    tail = stable_sum(w[norms > params.shell_outer])
    mid = 0.0
    if occupations_H:
        occ = np.array([occupations_H.get(tuple(int(v) for v in n), 0.0) for n in phi.points])
        mid = 2.0 * stable_sum(np.where(norms > params.high_inner, w * occ, 0.0))
    scale = params.N ** (1.5 * params.kappa - params.epsilon)
    return ParticleCount(lower=N0 + shell_total, high_occupancy=mid, tail=tail,
                         slack_constant=(mid + tail) / scale)


# ---------------------------------------------------------------- free energy


def gamma0_free_energy(S: np.ndarray, dispersion: Dispersion, T_eff: float) -> float:
    """``-T log Z = T sum_S log(1 - exp(-e_p / T))`` for the free shell Gibbs state."""
    S = np.asarray(S).reshape(-1, 3)
    if len(S) == 0:
        raise ValueError("shell is empty")
    if T_eff == 0:
        return 0.0
    e = dispersion(_norms(S))
    return gibbs_free_energy_from_energies(e, T_eff)


def gibbs_free_energy_from_energies(e, T_eff: float) -> float:
    e = np.asarray(e, dtype=float)
    x = e / T_eff
    return T_eff * stable_sum(log1mexp(x))


def energy_minus_TS(e, T_eff: float) -> float:
    """``sum e n - T sum [(1 + n) log(1 + n) - n log n]`` from occupations."""
    e = np.asarray(e, dtype=float)
    n = bose_occupation(e, T_eff)
    with np.errstate(divide="ignore", invalid="ignore"):
        nlogn = np.where(n > 0, n * np.log(n), 0.0)
    entropy = (1.0 + n) * np.log1p(n) - nlogn
    return stable_sum(e * n) - T_eff * stable_sum(entropy)


@dataclass(frozen=True)
class FreeEnergyReport:
    """Itemized upper bound on the free energy density.

    ``total = leading + lhy + error_allowance + thermal``.
    """

    rho: float
    T: float
    a: float
    leading: float
    lhy: float
    error_allowance: float
    thermal: float
    notes: tuple = field(default_factory=tuple)

    @property
    def total(self) -> float:
        return self.leading + self.lhy + self.error_allowance + self.thermal

    def row(self) -> tuple:
        return (self.rho, self.T, self.leading, self.lhy, self.thermal, self.total)


def free_energy_upper_bound(rho: float, T: float, a: float, c_eps: float = 0.0,
                            epsilon: float = 0.05, temp_ratio_max: Optional[float] = None) -> FreeEnergyReport:
    """Assemble the upper bound on ``f(rho, T)``.

    Parameters
    ----------
    rho, T, a : float
        Density, temperature and scattering length.
    c_eps : float
        Constant of the ``(rho a^3)^(1/2 + epsilon)`` allowance.
    epsilon : float
        Exponent of the allowance.
    temp_ratio_max : float, optional
        If given, enforce ``T <= temp_ratio_max * rho * a``.
    """
    if not rho > 0 or a < 0 or T < 0:
        raise ValueError("need rho > 0, a >= 0, T >= 0")
    y = rho * a**3
    if y >= 1:
        raise ValueError("not dilute: rho a^3 >= 1")
    if temp_ratio_max is not None and T > temp_ratio_max * rho * a:
        raise ValueError("temperature above the admissible range T <= C rho a")
    notes = []
    if y >= 1e-2:
        notes.append("rho a^3 >= 1e-2: outside the dilute advisory range")
    leading = 4.0 * math.pi * a * rho * rho
    lhy = leading * LHY_COEFFICIENT * math.sqrt(y)
    allowance = leading * c_eps * y ** (0.5 + epsilon)
    if T == 0:
        thermal = 0.0
    else:
        gap = rho * a / T
        thermal = T**2.5 / TWO_PI**3 * thermal_integral(gap)
    return FreeEnergyReport(rho=rho, T=T, a=a, leading=leading, lhy=lhy, error_allowance=allowance,
                            thermal=thermal, notes=tuple(notes))


FREE_ENERGY_COLUMNS = ("rho", "T", "leading", "lhy", "thermal", "total")


def write_free_energy_csv(path: str, reports: Sequence[FreeEnergyReport]) -> None:
    """Write reports as ``rho,T,leading,lhy,thermal,total`` with round-trip floats."""
    rows = [FREE_ENERGY_COLUMNS]
    rows += [tuple(repr(float(v)) for v in r.row()) for r in reports]
    write_csv_atomic(path, rows)
