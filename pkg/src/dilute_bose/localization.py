"""Dirichlet window and the box bookkeeping that links small periodic boxes to the bulk.

The window ``q_{L,l}`` equals 1 on ``|t| < L/2 - l``, ramps down as a quarter
cosine on ``|t -+ L/2| <= l`` and vanishes beyond ``L/2 + l``. Its square
integrates periodic functions exactly as a single period does.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from ._numerics import loglog_slope


@dataclass(frozen=True)
class WindowSpec:
    """Box side ``L``, transition width ``ell`` and corridor ``R``.

    Raises
    ------
    ValueError
        Unless ``0 < R < ell < L``. The ramps must not overlap, so ``2 ell <= L``
        is also required.
    """

    L: float
    ell: float
    R: float

    def __post_init__(self):
        if not (0 < self.R < self.ell < self.L):
            raise ValueError(f"need 0 < R < ell < L, got R={self.R!r}, ell={self.ell!r}, L={self.L!r}")
        if 2 * self.ell > self.L:
            raise ValueError(f"ramps overlap: need 2*ell <= L, got ell={self.ell!r}, L={self.L!r}")

    @property
    def support(self) -> tuple:
        return (-self.L / 2 - self.ell, self.L / 2 + self.ell)


def window_value(t, spec: WindowSpec) -> np.ndarray:
    """``q_{L,l}(t)``, evaluated as a function of ``|t|`` so that it is exactly even."""
    t = np.abs(np.asarray(t, dtype=float))
    L, l = spec.L, spec.ell
    plateau = t < L / 2 - l
    # ramp is the complement of the plateau so no point falls between them
    ramp = ~plateau & (t <= L / 2 + l)
    angle = np.clip(math.pi * (t - L / 2 + l) / (4 * l), 0.0, math.pi / 2)
    return np.where(plateau, 1.0, np.where(ramp, np.cos(angle), 0.0))


def window_square_integral(spec: WindowSpec) -> float:
    """Exact ``int q^2``: plateau ``L - 2 l`` plus two ramps of ``l`` each."""
    # each ramp integrates cos^2 over a quarter period of length 2l
    return (spec.L - 2 * spec.ell) + 2 * spec.ell


def partition_gap(spec: WindowSpec, n: int = 2001) -> float:
    """``max |q(t)^2 + q(t+L)^2 - 1|`` over ``t`` in the left ramp."""
    t = np.linspace(-spec.L / 2 - spec.ell, -spec.L / 2 + spec.ell, n)
    return float(np.max(np.abs(window_value(t, spec) ** 2 + window_value(t + spec.L, spec) ** 2 - 1.0)))


@dataclass(frozen=True)
class TrigPolynomial:
    """``c0 + sum_n [a_n cos(2 pi n t / L) + b_n sin(2 pi n t / L)]``, ``n = 1..len(a)``."""

    period: float
    c0: float
    a: np.ndarray
    b: np.ndarray

    @classmethod
    def random(cls, period: float, degree: int, seed: int) -> "TrigPolynomial":
        rng = np.random.default_rng(seed)
        return cls(period, float(rng.normal()), rng.normal(size=degree), rng.normal(size=degree))

    @property
    def degree(self) -> int:
        return len(self.a)

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        n = np.arange(1, self.degree + 1)
        w = 2 * math.pi * np.multiply.outer(t, n) / self.period
        return self.c0 + np.cos(w) @ self.a + np.sin(w) @ self.b

    def period_integral(self) -> float:
        return self.c0 * self.period


def _gauss(f: Callable, lo: float, hi: float, order: int, panels: int) -> float:
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(lo, hi, panels + 1)
    total = []
    for a, b in zip(edges[:-1], edges[1:]):
        h = 0.5 * (b - a)
        total.append(h * float(np.sum(w * f(a + h + h * x))))
    return math.fsum(total)


@dataclass(frozen=True)
class IntegralCheck:
    windowed: float
    period: float

    @property
    def gap(self) -> float:
        return abs(self.windowed - self.period)


def periodic_integral_check(phi: Union[TrigPolynomial, Callable], spec: WindowSpec,
                            order: int = 64, panels: Optional[int] = None) -> IntegralCheck:
    """Compare ``int_{-L/2-l}^{L/2+l} Phi q^2`` with ``int_{-L/2}^{L/2} Phi``.

    ``phi`` is an ``L``-periodic trigonometric polynomial (exact period integral)
    or any ``L``-periodic callable (Gauss-Legendre on both sides). The windowed
    side uses Gauss-Legendre separately on the plateau and the two ramps.
    """
    L, l = spec.L, spec.ell
    if isinstance(phi, TrigPolynomial):
        if not math.isclose(phi.period, L, rel_tol=1e-15):
            raise ValueError("trigonometric polynomial period must equal L")
        deg = phi.degree
    else:
        deg = 20
    if panels is None:
        panels = max(4, 2 * deg)

    def f(t):
        return phi(t) * window_value(t, spec) ** 2

    pieces = [
        _gauss(f, -L / 2 - l, -L / 2 + l, order, panels),
        _gauss(f, -L / 2 + l, L / 2 - l, order, panels) if L > 2 * l else 0.0,
        _gauss(f, L / 2 - l, L / 2 + l, order, panels),
    ]
    windowed = math.fsum(pieces)
    period = phi.period_integral() if isinstance(phi, TrigPolynomial) else _gauss(phi, -L / 2, L / 2, order, panels)
    return IntegralCheck(windowed=windowed, period=period)


@dataclass(frozen=True)
class Dilution:
    """``rho~ = TrN / (L + 2l + R)^3`` and the kinetic overhead ``c rho~ / (L l)``."""

    rho_tilde: float
    overhead: float
    c: float


def dilution_bookkeeping(TrN: float, spec: WindowSpec, c: float = 1.0) -> Dilution:
    """Density after padding the box and the localization overhead.

    Raises
    ------
    ValueError
        For negative ``TrN``.
    """
    if TrN < 0:
        raise ValueError("TrN must be non-negative")
    rt = TrN / (spec.L + 2 * spec.ell + spec.R) ** 3
    return Dilution(rho_tilde=rt, overhead=c * rt / (spec.L * spec.ell), c=c)


@dataclass(frozen=True)
class ChainRow:
    rho: float
    L: float
    ell: float
    rho_tilde: float
    margin: float
    overhead_ratio: float
    padding: float


def dilution_chain(rhos: Sequence[float], gamma: float, alpha: float, c1: float = 1.0,
                   R: float = 1.0, c: float = 1.0, a: float = 1.0) -> list:
    """Evaluate the density chain with ``L = rho^-gamma``, ``l = L^alpha``.

    ``TrN = (rho + c1 rho^((gamma+2)/2)) L^3``. Each row reports
    ``margin = rho~ - rho``, the overhead relative to ``4 pi a rho^2`` and the
    padding ``(L + 2l + R)^3 / L^3 - 1``, which scales as ``rho^(gamma - alpha gamma)``.
    """
    rows = []
    for rho in rhos:
        L = rho ** (-gamma)
        ell = L**alpha
        spec = WindowSpec(L=L, ell=ell, R=min(R, 0.5 * ell))
        TrN = (rho + c1 * rho ** ((gamma + 2) / 2)) * L**3
        d = dilution_bookkeeping(TrN, spec, c)
        pad = math.expm1(3 * math.log1p((2 * ell + spec.R) / L))
        rows.append(ChainRow(rho=rho, L=L, ell=ell, rho_tilde=d.rho_tilde, margin=d.rho_tilde - rho,
                             overhead_ratio=d.overhead / (4 * math.pi * a * rho * rho), padding=pad))
    return rows


def chain_exponents(rows: list) -> dict:
    """Fitted log-log slopes of the overhead ratio and the padding against ``rho``."""
    rho = np.array([r.rho for r in rows])
    return {
        "overhead_ratio": loglog_slope(rho, np.array([r.overhead_ratio for r in rows])),
        "padding": loglog_slope(rho, np.array([r.padding for r in rows])),
    }
