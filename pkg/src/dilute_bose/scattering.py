"""Box scattering equation on the momentum lattice and full-space oracle.

The rescaled interaction on the unit torus has Fourier coefficients
``V_N(p) = N**(kappa - 1) * Vhat(p / N**(1 - kappa))``. The periodic zero-energy
scattering solution ``phi`` solves, for every lattice momentum ``p != 0``,

    p**2 phi_p + 1/2 sum_{q != 0} V_N(p - q) phi_q = -1/2 V_N(p),   phi_0 = 0,

and defines the box scattering length through

    8 pi a_N = Vhat(0) + N**(1 - kappa) sum_{p != 0} V_N(p) phi_p.
"""

from __future__ import annotations

import csv
import math
import os
import tempfile
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np
import scipy.fft as sfft
from scipy import integrate

from ._numerics import lattice_ball, loglog_slope, stable_sum
from .regime import RegimeParams

TWO_PI = 2.0 * math.pi
DIRECT_MAX_POINTS = 3000


class ScatteringConvergenceError(RuntimeError):
    """Raised when the lattice solver misses its tolerance."""

    def __init__(self, message: str, best_residual: float, iterations: int):
        super().__init__(f"{message} (best residual {best_residual:.3e} after {iterations} iterations)")
        self.best_residual = best_residual
        self.iterations = iterations


def _gauss_fourier(profile: Callable, R: float, nodes: int = 600) -> Callable:
    x, w = np.polynomial.legendre.leggauss(nodes)
    r = 0.5 * R * (x + 1.0)
    wr = 0.5 * R * w * r * r * np.asarray(profile(r), dtype=float)

    def fourier(k):
        k = np.asarray(k, dtype=float)
        kr = np.multiply.outer(k, r)
        return 4.0 * math.pi * (np.sinc(kr / math.pi) @ wr)

    return fourier


@dataclass(frozen=True)
class Potential:
    """Radial, non-negative, compactly supported pair potential.

    Parameters
    ----------
    profile : callable
        ``V(r)`` evaluated on arrays of radii.
    R : float
        Support radius; ``V(r) = 0`` for ``r > R``.
    fourier : callable, optional
        ``Vhat(k)`` as a function of ``|k|``. Computed by Gauss-Legendre
        quadrature of ``4 pi int r^2 V(r) sinc(kr) dr`` when omitted.
    full_space_a : float, optional
        Known scattering length of ``-Delta + V/2``.
    name : str
        Label used in reports.
    """

    profile: Callable
    R: float
    fourier: Optional[Callable] = None
    full_space_a: Optional[float] = None
    name: str = "custom"
    spec: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not (self.R > 0 and math.isfinite(self.R)):
            raise ValueError("support radius R must be positive and finite")
        r = np.linspace(0.0, self.R, 257)
        vals = np.asarray(self.profile(r), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise ValueError("potential is not finite on its support; V must lie in L^2")
        if np.any(vals < 0):
            raise ValueError("potential must be non-negative")
        outside = np.asarray(self.profile(self.R * np.linspace(1.0 + 1e-9, 3.0, 64)), dtype=float)
        if np.any(outside != 0):
            raise ValueError("potential must vanish beyond R")
        l2, _ = integrate.quad(lambda s: s * s * float(self.profile(np.array([s]))[0]) ** 2,
                               0.0, self.R, limit=200)
        if not math.isfinite(l2):
            raise ValueError("potential is not square integrable")
        if self.fourier is None:
            object.__setattr__(self, "fourier", _gauss_fourier(self.profile, self.R))

    @property
    def vhat0(self) -> float:
        """``Vhat(0) = int V``."""
        return float(np.asarray(self.fourier(np.array([0.0])))[0])

    @property
    def is_zero(self) -> bool:
        r = np.linspace(0.0, self.R, 513)
        return not np.any(np.asarray(self.profile(r)) > 0)

    def describe(self) -> str:
        if self.spec:
            return self.name + ":" + ",".join(f"{k}={v!r}" for k, v in self.spec.items())
        return self.name

    @classmethod
    def from_cartesian(cls, func: Callable, R: float, name: str = "custom", seed: int = 0) -> "Potential":
        """Wrap ``V(x)`` given on 3-vectors after checking it is radial.

        ``func`` receives an ``(M, 3)`` array. The check compares values at
        random directions on a set of radii.
        """
        rng = np.random.default_rng(seed)
        dirs = rng.normal(size=(16, 3))
        dirs /= np.linalg.norm(dirs, axis=1)[:, None]
        for rad in np.linspace(0.05, 0.95, 10) * R:
            v = np.asarray(func(rad * dirs), dtype=float)
            if np.ptp(v) > 1e-12 * max(1.0, np.max(np.abs(v))):
                raise ValueError("non-radial profile rejected")
        ex = np.array([[1.0, 0.0, 0.0]])

        def profile(r):
            r = np.atleast_1d(np.asarray(r, dtype=float))
            return np.asarray(func(r[:, None] * ex), dtype=float).reshape(r.shape)

        return cls(profile=profile, R=R, name=name)


def soft_sphere(V0: float, R: float) -> Potential:
    """``V(r) = V0`` for ``r <= R`` and zero beyond.

    The Fourier transform is ``4 pi V0 (sin kR - kR cos kR) / k^3`` and the
    scattering length of ``-Delta + V/2`` is ``R - tanh(k0 R)/k0`` with
    ``k0 = sqrt(V0/2)``.
    """
    if V0 < 0:
        raise ValueError("V0 must be non-negative")

    def profile(r):
        r = np.asarray(r, dtype=float)
        return np.where(r <= R, float(V0), 0.0)

    def fourier(k):
        k = np.abs(np.asarray(k, dtype=float))
        x = k * R
        out = np.empty_like(x)
        small = x < 1e-2
        xs = x[small]
        out[small] = (4.0 * math.pi * V0 * R**3) * (1.0 / 3.0 - xs**2 / 30.0 + xs**4 / 840.0 - xs**6 / 45360.0)
        xl = x[~small]
        out[~small] = 4.0 * math.pi * V0 * R**3 * (np.sin(xl) - xl * np.cos(xl)) / xl**3
        return out

    if V0 == 0:
        a = 0.0
    else:
        k0 = math.sqrt(V0 / 2.0)
        a = R - math.tanh(k0 * R) / k0
    return Potential(profile=profile, R=R, fourier=fourier, full_space_a=a,
                     name="soft-sphere", spec={"V0": float(V0), "R": float(R)})


def zero_potential() -> Potential:
    """The trivial potential ``V = 0``."""
    pot = soft_sphere(0.0, 1.0)
    return Potential(profile=pot.profile, R=1.0, fourier=pot.fourier, full_space_a=0.0,
                     name="zero", spec={})


def parse_potential(text: str) -> Potential:
    """Parse ``soft-sphere:V0=<f>,R=<f>`` (or ``zero``) into a :class:`Potential`."""
    text = text.strip()
    if text == "zero":
        return zero_potential()
    kind, sep, rest = text.partition(":")
    if kind != "soft-sphere" or not sep:
        raise ValueError(f"invalid potential spec {text!r}; expected soft-sphere:V0=<f>,R=<f>")
    values = {}
    for item in rest.split(","):
        key, eq, val = item.partition("=")
        key = key.strip()
        if not eq or key not in ("V0", "R") or key in values:
            raise ValueError(f"invalid potential spec {text!r}")
        try:
            values[key] = float(val)
        except ValueError:
            raise ValueError(f"invalid number {val!r} in potential spec") from None
    if set(values) != {"V0", "R"}:
        raise ValueError(f"potential spec {text!r} needs both V0 and R")
    return soft_sphere(values["V0"], values["R"])


def _norms(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim >= 1 and p.shape[-1] == 3:
        return np.sqrt(np.sum(p * p, axis=-1))
    return np.abs(p)


def rescaled_fourier(potential: Potential, params: RegimeParams, p) -> np.ndarray:
    """``V_N(p) = N**(kappa - 1) Vhat(|p| / N**(1 - kappa))``.

    ``p`` is either an array of momentum 3-vectors or of momentum norms.
    """
    M = params.support_scale
    k = _norms(p)
    return np.asarray(potential.fourier(k / M), dtype=float) / M


# ---------------------------------------------------------------- convolution


class _Convolver:
    """Applies ``phi -> sum_q V_N(p - q) phi_q`` on a fixed ball of lattice points."""

    def __init__(self, points: np.ndarray, potential: Potential, params: RegimeParams, method: str):
        self.points = points
        self.method = method
        M = params.support_scale
        if method == "direct":
            d = points[:, None, :] - points[None, :, :]
            d2 = np.einsum("ijk,ijk->ij", d, d)
            table = self._table(int(d2.max()), potential, M)
            self.kernel = table[d2]
        elif method == "fft":
            m = int(np.max(np.abs(points))) if points.size else 0
            n = sfft.next_fast_len(4 * m + 1, real=True)
            f = np.rint(sfft.fftfreq(n, 1.0 / n)).astype(np.int64)
            f2 = f * f
            n2 = f2[:, None, None] + f2[None, :, None] + f2[None, None, :]
            table = self._table(int(n2.max()), potential, M)
            self.n = n
            self.kernel_hat = sfft.rfftn(table[n2])
            self.idx = tuple((points % n).T)
        else:
            raise ValueError(f"unknown convolution method {method!r}")

    @staticmethod
    def _table(max_sq: int, potential: Potential, M: float) -> np.ndarray:
        norms = TWO_PI * np.sqrt(np.arange(max_sq + 1, dtype=float))
        return np.asarray(potential.fourier(norms / M), dtype=float) / M

    def __call__(self, phi: np.ndarray) -> np.ndarray:
        if self.method == "direct":
            return np.sum(self.kernel * phi[None, :], axis=1)
        g = np.zeros((self.n, self.n, self.n))
        g[self.idx] = phi
        out = sfft.irfftn(sfft.rfftn(g) * self.kernel_hat, s=g.shape)
        return out[self.idx]


def direct_convolution(points: np.ndarray, values: np.ndarray, targets: np.ndarray,
                       potential: Potential, params: RegimeParams, block: int = 512) -> np.ndarray:
    """Reference convolution by explicit summation, blocked over targets.

    Independent of the solver's internal operator; used for residual audits.
    """
    M = params.support_scale
    out = np.empty(len(targets))
    for s in range(0, len(targets), block):
        t = targets[s:s + block]
        d = t[:, None, :] - points[None, :, :]
        norms = TWO_PI * np.sqrt(np.einsum("ijk,ijk->ij", d, d).astype(float))
        kern = np.asarray(potential.fourier(norms / M), dtype=float) / M
        out[s:s + block] = np.sum(kern * values[None, :], axis=1)
    return out


# ---------------------------------------------------------------- solution


class BoxScatteringLength(NamedTuple):
    a_N: float
    correction: float
    tail_bound: float


@dataclass(frozen=True)
class ScatteringSolution:
    """Lattice solution of the box scattering equation.

    Attributes
    ----------
    points : ndarray, shape (K, 3)
        Integer labels ``n`` of the nonzero lattice momenta ``2 pi n`` kept.
    phi : ndarray, shape (K,)
        Solution values; ``phi_0 = 0`` is implicit.
    a_N : float
        Box scattering length.
    correction : float
        ``N**(1 - kappa) sum V_N(p) phi_p`` (negative for repulsive V).
    residual : float
        Max-norm of ``b - A phi`` at exit.
    cap : float
        Truncation radius in momentum units.
    tail_bound : float
        Estimate of ``|a_N(infinite cap) - a_N|`` from ``|phi_p| <= C/p^2``.
    p2phi_sup : float
        ``max |p^2 phi_p|``; the constant ``C`` of ``|p^2 phi_p| <= C N^(kappa-1)``
        is ``p2phi_sup * N^(1-kappa)``.
    """

    params: RegimeParams
    points: np.ndarray
    phi: np.ndarray
    a_N: float
    correction: float
    residual: float
    cap: float
    tol: float
    iterations: int
    method: str
    tail_bound: float
    p2phi_sup: float
    potential_name: str = ""

    @property
    def momenta(self) -> np.ndarray:
        return TWO_PI * self.points

    @property
    def p2(self) -> np.ndarray:
        return TWO_PI**2 * np.einsum("ij,ij->i", self.points, self.points).astype(float)

    @property
    def norms(self) -> np.ndarray:
        return np.sqrt(self.p2)

    @property
    def a_interval(self) -> tuple:
        return (self.a_N - self.tail_bound, self.a_N + self.tail_bound)

    @property
    def C_bound(self) -> float:
        """Constant ``C`` in ``|p^2 phi_p| <= C N^(kappa - 1)``."""
        return self.p2phi_sup * self.params.support_scale

    def as_dict(self) -> dict:
        """Map ``(nx, ny, nz) -> phi`` including the zero mode."""
        out = {(0, 0, 0): 0.0}
        out.update({tuple(int(v) for v in n): float(x) for n, x in zip(self.points, self.phi)})
        return out

    def value(self, n) -> float:
        """``phi`` at integer label ``n`` (zero at the origin and beyond the cap)."""
        return self.as_dict().get(tuple(int(v) for v in n), 0.0)

    def to_csv(self, path: str) -> None:
        """Write ``px,py,pz,phi`` rows atomically."""
        rows = [("px", "py", "pz", "phi")]
        for p, x in zip(self.momenta, self.phi):
            rows.append((repr(float(p[0])), repr(float(p[1])), repr(float(p[2])), repr(float(x))))
        write_csv_atomic(path, rows)


def write_csv_atomic(path: str, rows: Sequence[Sequence[str]]) -> None:
    """Write rows to ``path`` via a temporary file and ``os.replace``."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", suffix=".csv", dir=directory)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerows(rows)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fourier_envelope_integral(potential: Potential, k0: float) -> float:
    """``int_{k0}^inf sup_{k' >= k} |Vhat(k')| dk`` with a ``k^-2`` tail model."""
    kmax = max(200.0 * k0, 200.0 / potential.R)
    k = np.linspace(k0, kmax, 40001)
    v = np.abs(np.asarray(potential.fourier(k), dtype=float))
    env = np.maximum.accumulate(v[::-1])[::-1]
    body = float(np.sum(0.5 * (env[1:] + env[:-1]) * np.diff(k)))
    return body + env[-1] * kmax


def _tail_bound(points, phi, p2, potential, params, cap) -> tuple:
    if not phi.size:
        return 0.0, 0.0
    p2phi = np.abs(p2 * phi)
    outer = np.sqrt(p2) >= 0.5 * cap
    C = float(np.max(p2phi[outer])) if np.any(outer) else float(np.max(p2phi))
    M = params.support_scale
    # M * sum_{|p|>cap} |V_N(p)| C / p^2 ~ 4 pi C M / (2 pi)^3 * int_{cap/M} env(k) dk
    tail_corr = 4.0 * math.pi * C * M / TWO_PI**3 * _fourier_envelope_integral(potential, cap / M)
    return tail_corr / (8.0 * math.pi), float(np.max(p2phi))


def solve_box_scattering(
    potential: Potential,
    params: RegimeParams,
    cap: Optional[float] = None,
    tol: float = 1e-10,
    method: str = "auto",
    max_iter: int = 500,
) -> ScatteringSolution:
    """Solve the box scattering equation by preconditioned conjugate gradients.

    Parameters
    ----------
    potential : Potential
    params : RegimeParams
    cap : float, optional
        Truncation radius in momentum units; default ``4 N**(1 - kappa)``.
    tol : float
        Target max-norm residual.
    method : {"auto", "direct", "fft"}
        Convolution route. ``auto`` picks direct summation up to
        ``DIRECT_MAX_POINTS`` lattice points.
    max_iter : int

    Returns
    -------
    ScatteringSolution

    Raises
    ------
    ScatteringConvergenceError
        If the residual stays above ``tol``.
    """
    M = params.support_scale
    if cap is None:
        cap = 4.0 * M
    if cap < M:
        raise ValueError(f"cap={cap:.6g} must cover the support scale N^(1-kappa)={M:.6g}")
    if not tol > 0:
        raise ValueError("tol must be positive")
    points = lattice_ball(cap, include_origin=False)
    if method == "auto":
        method = "direct" if len(points) <= DIRECT_MAX_POINTS else "fft"
    p2 = TWO_PI**2 * np.einsum("ij,ij->i", points, points).astype(float)
    vn = rescaled_fourier(potential, params, TWO_PI * points)
    b = -0.5 * vn

    if not np.any(vn != 0) and potential.is_zero:
        phi = np.zeros(len(points))
        return ScatteringSolution(params=params, points=points, phi=phi, a_N=0.0, correction=0.0,
                                  residual=0.0, cap=cap, tol=tol, iterations=0, method=method,
                                  tail_bound=0.0, p2phi_sup=0.0, potential_name=potential.describe())

    conv = _Convolver(points, potential, params, method)

    def apply(x):
        return p2 * x + 0.5 * conv(x)

    x = np.zeros_like(b)
    r = b.copy()
    z = r / p2
    d = z.copy()
    rz = float(np.sum(r * z))
    best = float(np.max(np.abs(r)))
    it = 0
    while it < max_iter:
        Ad = apply(d)
        alpha = rz / float(np.sum(d * Ad))
        x += alpha * d
        r -= alpha * Ad
        it += 1
        if float(np.max(np.abs(r))) <= 0.5 * tol:
            r = b - apply(x)  # refresh against drift
            best = min(best, float(np.max(np.abs(r))))
            if best <= tol:
                break
        z = r / p2
        rz_new = float(np.sum(r * z))
        d = z + (rz_new / rz) * d
        rz = rz_new
    residual = float(np.max(np.abs(b - apply(x))))
    if residual > tol:
        raise ScatteringConvergenceError("box scattering solve did not converge", residual, it)

    correction = M * stable_sum(vn * x)
    a_N = (potential.vhat0 + correction) / (8.0 * math.pi)
    tail, sup = _tail_bound(points, x, p2, potential, params, cap)
    return ScatteringSolution(params=params, points=points, phi=x, a_N=a_N, correction=correction,
                              residual=residual, cap=cap, tol=tol, iterations=it, method=method,
                              tail_bound=tail, p2phi_sup=sup, potential_name=potential.describe())


def box_scattering_length(solution: ScatteringSolution, potential: Potential,
                          params: RegimeParams) -> BoxScatteringLength:
    """Recompute ``a_N`` and the correction term from a solution."""
    vn = rescaled_fourier(potential, params, solution.momenta)
    correction = params.support_scale * stable_sum(vn * solution.phi)
    a_N = (potential.vhat0 + correction) / (8.0 * math.pi)
    return BoxScatteringLength(a_N, correction, solution.tail_bound)


def scattering_length_quadratic_form(solution: ScatteringSolution, potential: Potential,
                                     params: RegimeParams) -> float:
    """``a_N`` from the energy identity of the scattering equation.

    Pairing the equation with ``phi`` gives
    ``sum V_N phi = -2 (sum p^2 phi^2 + 1/2 <phi, V_N * phi>)`` up to the residual;
    the double sum is evaluated by direct summation.
    """
    pts, phi = solution.points, solution.phi
    conv = direct_convolution(pts, phi, pts, potential, params)
    quad = stable_sum(solution.p2 * phi * phi) + 0.5 * stable_sum(phi * conv)
    return (potential.vhat0 - 2.0 * params.support_scale * quad) / (8.0 * math.pi)


def independent_residual(solution: ScatteringSolution, potential: Potential,
                         params: RegimeParams) -> float:
    """Max-norm residual recomputed by explicit summation over the lattice ball."""
    pts, phi = solution.points, solution.phi
    conv = direct_convolution(pts, phi, pts, potential, params)
    vn = rescaled_fourier(potential, params, solution.momenta)
    res = solution.p2 * phi + 0.5 * conv + 0.5 * vn
    return float(np.max(np.abs(res))) if res.size else 0.0


# ---------------------------------------------------------------- full space


def full_space_scattering_length_ode(potential: Potential) -> float:
    """Scattering length from the radial zero-energy equation ``u'' = V u / 2``.

    Integrates from ``u(0) = 0, u'(0) = 1`` to ``R`` and matches to
    ``u = A (r - a)`` outside the support.
    """
    if potential.is_zero:
        return 0.0

    def rhs(r, y):
        v = float(np.asarray(potential.profile(np.array([r])))[0])
        return [y[1], 0.5 * v * y[0]]

    sol = integrate.solve_ivp(rhs, (0.0, potential.R), [0.0, 1.0], method="DOP853",
                              rtol=1e-13, atol=1e-15, max_step=potential.R / 200.0)
    if not sol.success:
        raise RuntimeError(f"radial ODE failed: {sol.message}")
    u, du = sol.y[0, -1], sol.y[1, -1]
    return float(potential.R - u / du)


def full_space_scattering_length(potential: Potential) -> float:
    """Full-space scattering length of ``-Delta + V/2``.

    Uses the analytic value when the potential carries one, else the radial ODE.
    """
    if not isinstance(potential, Potential):
        raise TypeError("expected a radial Potential")
    if potential.full_space_a is not None:
        return float(potential.full_space_a)
    return full_space_scattering_length_ode(potential)


# ---------------------------------------------------------------- norms


NORM_EXPONENTS = {
    "l1": lambda k, al: 0.0,
    "l2": lambda k, al: -1.0 + k,
    "linf": lambda k, al: -1.0 + k,
    "p_l2_sq": lambda k, al: -1.0 + k,
    "l2_alpha": lambda k, al: -1.0 + k - al / 2.0,
    "linf_alpha": lambda k, al: -1.0 + k - 2.0 * al,
}


@dataclass(frozen=True)
class NormReport:
    """Norms of ``phi`` appearing in the size estimates of the scattering solution."""

    N: float
    kappa: float
    l1: float
    l2: float
    linf: float
    p_l2_sq: float
    p2phi_sup: float
    alpha: Optional[float] = None
    l2_alpha: Optional[float] = None
    linf_alpha: Optional[float] = None

    def scaled(self) -> dict:
        """Each norm divided by ``N`` to its expected exponent."""
        out = {}
        for key, expo in NORM_EXPONENTS.items():
            val = getattr(self, key)
            if val is None:
                continue
            out[key] = val / self.N ** expo(self.kappa, self.alpha or 0.0)
        return out


def scattering_norm_report(solution: ScatteringSolution, params: RegimeParams,
                           alpha: Optional[float] = None) -> NormReport:
    """Norms ``||phi||_1, ||phi||_2, ||phi||_inf, ||p phi||_2^2`` and cutoff variants.

    ``phi^(alpha)`` keeps only ``|p| > N**alpha``. All bounds are read as bounds
    on absolute values.
    """
    phi = np.abs(solution.phi)
    p2 = solution.p2
    rep = dict(
        l1=stable_sum(phi),
        l2=math.sqrt(stable_sum(phi * phi)),
        linf=float(phi.max()) if phi.size else 0.0,
        p_l2_sq=stable_sum(p2 * phi * phi),
        p2phi_sup=float(np.max(p2 * phi)) if phi.size else 0.0,
    )
    if alpha is not None:
        keep = np.sqrt(p2) > params.N ** alpha
        sub = phi[keep]
        rep["alpha"] = alpha
        rep["l2_alpha"] = math.sqrt(stable_sum(sub * sub))
        rep["linf_alpha"] = float(sub.max()) if sub.size else 0.0
    return NormReport(N=params.N, kappa=params.kappa, **rep)


def norm_scaling(reports: Sequence[NormReport], tolerance: float = 0.15) -> dict:
    """Regress every norm against ``N`` over a ladder of reports.

    Returns ``{name: (observed_slope, expected_exponent, flagged)}`` where a
    flag marks a deviation larger than ``tolerance``.
    """
    if len(reports) < 2:
        raise ValueError("need at least two reports")
    kappa = reports[0].kappa
    alpha = reports[0].alpha
    Ns = [r.N for r in reports]
    out = {}
    for key, expo in NORM_EXPONENTS.items():
        vals = [getattr(r, key) for r in reports]
        if any(v is None for v in vals) or any(v == 0 for v in vals):
            continue
        slope = loglog_slope(Ns, vals)
        expected = expo(kappa, alpha or 0.0)
        out[key] = (slope, expected, abs(slope - expected) > tolerance)
    return out
