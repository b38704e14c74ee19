import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from dilute_bose.regime import (
    CONDENSATE,
    HIGH,
    LOW,
    SHELL,
    derive_regime,
    gamma_of_kappa,
    kappa_of_gamma,
    momentum_sets,
    regime_from_N,
    shell_volume_count,
)


def test_gamma_one_rejected():
    with pytest.raises(ValueError, match="kappa must exceed 1/2"):
        derive_regime(1e-4, 1.0, 0.05)


def test_kappa_limit():
    assert math.isclose(kappa_of_gamma(1e9), 2.0 / 3.0, rel_tol=1e-8)


def test_example_rho_gamma():
    p = derive_regime(1e-4, 1.1, 0.05)
    assert math.isclose(p.kappa, 1.2 / 2.3, rel_tol=1e-15)
    # independent route: L = rho^-gamma, N = rho L^3
    L = 1e-4 ** -1.1
    assert math.isclose(p.N, 1e-4 * L**3, rel_tol=1e-12)
    assert math.isclose(math.log10(p.N), 9.2, rel_tol=1e-12)
    assert math.isclose(p.L, p.N ** (1 - p.kappa), rel_tol=1e-12)


def test_disjointness_violation_names_inequality():
    with pytest.raises(ValueError, match=r"-2 \+ 3\*kappa \+ 4\*epsilon"):
        derive_regime(1e-4, 1.5, 0.1)


def test_strict_window():
    with pytest.raises(ValueError, match="full-theorem window"):
        derive_regime(1e-4, 1.2, 0.05, strict=True)
    assert derive_regime(1e-4, 1.05, 0.01, strict=True).full_theorem


def test_other_rejections():
    with pytest.raises(ValueError):
        derive_regime(-1.0, 1.1, 0.05)
    with pytest.raises(ValueError):
        derive_regime(1e-4, 1.1, 0.05, temp_ratio=-1)
    with pytest.raises(ValueError):
        derive_regime(1e-4, 1.1, 0.0)


def test_overflow_rejected():
    with pytest.raises(ValueError, match="floating-point range"):
        derive_regime(1e-7, 16.0, 0.001)


def test_temperature_bookkeeping():
    p = derive_regime(1e-4, 1.1, 0.05, temp_ratio=2.0, a=0.5)
    assert math.isclose(p.T, 2.0 * 1e-4 * 0.5)
    assert math.isclose(p.T_eff, p.T * p.N ** (2 - 2 * p.kappa), rel_tol=1e-12)
    q = p.with_scattering_length(0.25)
    assert math.isclose(q.T, 2.0 * 1e-4 * 0.25)


@settings(max_examples=60, deadline=None)
@given(gamma=st.floats(1.01, 20.0), frac=st.floats(0.01, 0.99), logrho=st.floats(-12, -1))
def test_round_trip(gamma, frac, logrho):
    rho = 10.0**logrho
    eps = frac * (2 - 3 * kappa_of_gamma(gamma)) / 4
    assume((3 * gamma - 1) * -logrho <= 300)
    p = derive_regime(rho, gamma, eps)
    assert 0.5 < p.kappa < 2 / 3
    assert math.isclose(gamma_of_kappa(p.kappa), gamma, rel_tol=1e-12)
    # rho from (N, kappa): rho = N^(-2 + 3 kappa)
    assert math.isclose(p.N ** (-2 + 3 * p.kappa), rho, rel_tol=1e-12)
    assert math.isclose(p.L, p.N ** (1 - p.kappa), rel_tol=1e-12)


def _smallest_shell_params():
    # N^(k/2 - e) < 2 pi <= N^(k/2 + e) and next shell 2 pi sqrt 2 outside
    kappa, eps = 0.52, 0.02
    N = (2 * math.pi) ** (1 / (kappa / 2 + eps)) * 1.01
    return regime_from_N(N, kappa, eps)


def test_smallest_shell_has_six_points():
    p = _smallest_shell_params()
    ms = momentum_sets(p, p.shell_outer * 1.5)
    assert len(ms.shell) == 6
    assert set(map(tuple, ms.shell)) == {(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)}


def test_cap_below_shell_rejected():
    p = _smallest_shell_params()
    with pytest.raises(ValueError, match="below the shell outer radius"):
        momentum_sets(p, 0.5 * p.shell_outer)


def test_shell_empty():
    p = regime_from_N(10.0, 0.52, 0.02)
    with pytest.raises(ValueError, match="shell empty"):
        momentum_sets(p, p.shell_outer * 2)


def test_partition_and_symmetry():
    p = regime_from_N(3e4, 0.55, 0.05)
    ms = momentum_sets(p, p.high_inner * 1.3)
    # each point has exactly one class and the class matches its norm
    n = 2 * math.pi * np.linalg.norm(ms.points, axis=1)
    assert len(ms.labels) == len(ms.points)
    assert np.all((ms.labels == CONDENSATE) == (n == 0))
    assert np.all((ms.labels == SHELL) == ((n > p.shell_inner) & (n <= p.shell_outer)))
    assert np.all((ms.labels == HIGH) == (n > p.high_inner))
    assert np.all(np.isin(ms.labels, [CONDENSATE, LOW, SHELL, HIGH]))
    assert not np.any((ms.labels == SHELL) & (n > p.high_inner))
    shell = set(map(tuple, ms.shell))
    assert all(tuple(-v for v in x) in shell for x in shell)
    c = ms.counts()
    assert sum(c.values()) == len(ms.points)


def test_high_restricted():
    p = regime_from_N(3e4, 0.55, 0.05)
    ms = momentum_sets(p, p.high_inner * 1.3)
    k = ms.shell[0]
    hk = ms.high_restricted(k)
    assert len(hk) > 0
    assert all(ms.classify(r + k) == HIGH for r in hk)


def test_shell_count_volume():
    for N in (1e5, 1e6):
        p = regime_from_N(N, 0.55, 0.05)
        ms = momentum_sets(p, p.shell_outer * 1.01)
        assert abs(len(ms.shell) / shell_volume_count(p) - 1) < 0.2
