import csv
import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dilute_bose import regime_from_N, solve_box_scattering, zero_potential
from dilute_bose.bogoliubov import (
    Dispersion,
    diago_constant,
    high_branch,
    renormalized_constant_closed,
    renormalized_constant_direct,
    shell_branch,
)
from dilute_bose.regime import momentum_sets
from dilute_bose.scattering import rescaled_fourier

TWO_PI = 2 * math.pi


@pytest.fixture(scope="module")
def params():
    return regime_from_N(2500.0, 0.52, 0.1)


@pytest.fixture(scope="module")
def shell(params):
    return momentum_sets(params, params.shell_outer * 1.01).shell


@pytest.fixture(scope="module")
def solution(sphere, params):
    return solve_box_scattering(sphere, params, cap=2 * params.support_scale)


def _a_matching(params, p2):
    """Scattering length with ``8 pi a N^kappa = p2``."""
    return p2 / (8 * math.pi * params.N**params.kappa)


# ---- high branch


def test_high_branch_trivial(params):
    pts = np.array([(50, 0, 0), (60, 1, 0)])
    hb = high_branch(np.zeros(2), 10.0, params, points=pts)
    assert np.all(hb.c == 1) and np.all(hb.s == 0)


def test_high_branch_inside_shell_is_trivial(params):
    pts = np.array([(1, 0, 0)])
    assert TWO_PI <= params.shell_outer
    hb = high_branch(np.array([-0.3]), 10.0, params, points=pts)
    assert hb.c[0] == 1 and hb.s[0] == 0


def test_high_branch_345(params):
    pts = np.array([(100, 0, 0)])
    hb = high_branch(np.array([-0.075]), 10.0, params, points=pts)
    assert math.isclose(hb.s[0], -0.75, rel_tol=1e-15)
    assert math.isclose(hb.c[0], 1.25, rel_tol=1e-15)


def test_high_branch_needs_points(params):
    with pytest.raises(ValueError):
        high_branch(np.zeros(3), 1.0, params)


def test_hyperbolic_identity_on_solution(solution, params):
    hb = high_branch(solution, params.N, params)
    assert np.max(np.abs(hb.c**2 - hb.s**2 - 1)) <= 1e-12
    assert np.all(hb.s[solution.norms <= params.shell_outer] == 0)
    assert np.any(hb.s != 0)


# ---- shell branch


def test_shell_branch_a_zero(params, shell):
    sb = shell_branch(0.0, params, shell)
    assert np.all(sb.tau == 0) and np.all(sb.gamma == 1) and np.all(sb.sigma == 0)


def test_shell_branch_log3(params):
    a = _a_matching(params, TWO_PI**2)
    sb = shell_branch(a, params, np.array([(1, 0, 0)]))
    assert math.isclose(sb.tau[0], -0.25 * math.log(3), rel_tol=1e-14)
    assert math.isclose(sb.tau[0], -0.27465, abs_tol=1e-5)


def test_shell_branch_large_momentum(params):
    sb = shell_branch(1.0, params, np.array([(10**k, 0, 0) for k in range(1, 6)]))
    assert np.all(np.diff(np.abs(sb.tau)) < 0)
    assert abs(sb.tau[-1]) < 1e-6


def test_shell_branch_rejects_zero_mode(params):
    with pytest.raises(ValueError):
        shell_branch(1.0, params, np.array([(0, 0, 0)]))


def test_shell_identities(params, shell):
    a = 0.3
    sb = shell_branch(a, params, shell)
    d = Dispersion.from_params(a, params)
    p = TWO_PI * np.linalg.norm(shell, axis=1)
    e = d(p)
    assert np.all(sb.tau < 0)
    assert np.max(np.abs(sb.gamma**2 - sb.sigma**2 - 1)) <= 1e-12
    assert np.max(np.abs(sb.gamma**2 + sb.sigma**2 - d.A(p) / e)) <= 1e-12
    assert np.max(np.abs(2 * sb.gamma * sb.sigma + d.B / e)) <= 1e-12
    assert np.allclose(np.tanh(2 * sb.tau), -d.B / d.A(p), rtol=0, atol=1e-13)


# ---- dispersion


@settings(max_examples=200, deadline=None)
@given(p=st.floats(1e-3, 1e4), ratio=st.floats(0.0, 1e3))
def test_dispersion_routes(p, ratio):
    # shell regime: B / p^2 stays bounded
    d = Dispersion(a=1.0, coupling=2 * ratio * p * p)
    e = float(d(p))
    assert e >= p * p * (1 - 1e-15)
    assert abs(float(d.from_AB(p)) / e - 1) <= 1e-12


@settings(max_examples=200, deadline=None)
@given(p=st.floats(1e-4, 1e4), coupling=st.floats(0.0, 1e4))
def test_dispersion_cancellation_bound(p, coupling):
    # A - B loses about log10(B / p^2) digits
    d = Dispersion(a=1.0, coupling=coupling)
    rel = abs(float(d.from_AB(p)) / float(d(p)) - 1)
    assert rel <= 4 * np.finfo(float).eps * (1 + d.B / (p * p))


def test_dispersion_basics():
    d = Dispersion(a=1.0, coupling=5.0)
    assert d(0.0) == 0.0
    p = np.linspace(0, 50, 1001)
    assert np.all(np.diff(d(p)) > 0)


# ---- diagonalization constant


def test_diago_constant_a_zero(params, shell):
    assert diago_constant(shell, 0.0, params) == 0.0


def test_diago_constant_single_pair(params):
    a = _a_matching(params, TWO_PI**2)
    S = np.array([(1, 0, 0), (-1, 0, 0)])
    expected = 2 * 0.5 * TWO_PI**2 * (math.sqrt(3) - 2)
    assert math.isclose(diago_constant(S, a, params), expected, rel_tol=1e-13)


def test_diago_constant_routes(params, shell):
    for a in (0.01, 0.3, 2.0):
        s = diago_constant(shell, a, params, "stable")
        d = diago_constant(shell, a, params, "direct")
        assert s <= 0
        assert abs(s - d) <= 1e-12 * abs(s)


def test_diago_constant_empty(params):
    with pytest.raises(ValueError):
        diago_constant(np.zeros((0, 3)), 1.0, params)


# ---- constant term


def test_direct_constant_zero_potential(params):
    s = solve_box_scattering(zero_potential(), params)
    assert renormalized_constant_direct(s, zero_potential(), params.N, params).total == 0.0


def test_direct_constant_born_level(solution, sphere, params):
    born = dataclasses.replace(solution, phi=np.zeros_like(solution.phi))
    N0 = 0.9 * params.N
    v0 = float(rescaled_fourier(sphere, params, np.zeros(3)))
    assert math.isclose(renormalized_constant_direct(born, sphere, N0, params).total,
                        0.5 * N0 * N0 * v0, rel_tol=1e-15)


def test_closed_constant_trivial(params, shell):
    empty = np.zeros((0, 3))
    assert math.isclose(renormalized_constant_closed(0.4, params.N, params, empty).total,
                        4 * math.pi * 0.4 * params.N ** (1 + params.kappa), rel_tol=1e-15)
    assert renormalized_constant_closed(0.0, 0.9 * params.N, params, shell).total == 0.0


def test_closed_constant_loop_orders(params, shell):
    N0 = 0.95 * params.N
    fwd = renormalized_constant_closed(0.3, N0, params, shell).parts["shell"]
    rng = np.random.default_rng(0)
    rev = renormalized_constant_closed(0.3, N0, params, shell[rng.permutation(len(shell))]).parts["shell"]
    assert fwd == rev


def test_csv_exports(solution, params, shell, tmp_path):
    hb = high_branch(solution, params.N, params)
    hb.to_csv(str(tmp_path / "h.csv"))
    rows = list(csv.reader(open(tmp_path / "h.csv")))
    assert rows[0] == ["px", "py", "pz", "c", "s"] and len(rows) == len(hb.c) + 1
    sb = shell_branch(0.3, params, shell)
    sb.to_csv(str(tmp_path / "s.csv"))
    rows = list(csv.reader(open(tmp_path / "s.csv")))
    assert rows[0] == ["px", "py", "pz", "tau", "gamma", "sigma"] and len(rows) == len(shell) + 1
