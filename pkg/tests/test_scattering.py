import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dilute_bose import regime_from_N, soft_sphere, zero_potential
from dilute_bose._numerics import loglog_slope
from dilute_bose.scattering import (
    Potential,
    box_scattering_length,
    full_space_scattering_length,
    full_space_scattering_length_ode,
    independent_residual,
    norm_scaling,
    parse_potential,
    rescaled_fourier,
    scattering_length_quadratic_form,
    scattering_norm_report,
    solve_box_scattering,
)

VHAT0 = 4.0 * math.pi / 3.0 * 2.0  # V0 times ball volume


@pytest.fixture(scope="module")
def params():
    return regime_from_N(300.0, 0.55, 0.05)


@pytest.fixture(scope="module")
def solution(sphere, params):
    return solve_box_scattering(sphere, params, cap=2 * params.support_scale)


# ---- potentials and Fourier transforms


def test_vhat0(sphere):
    assert math.isclose(sphere.vhat0, VHAT0, rel_tol=1e-14)
    assert math.isclose(sphere.vhat0, 8.37758, rel_tol=1e-6)


def test_closed_form_fourier_matches_quadrature(sphere):
    numeric = Potential(profile=sphere.profile, R=1.0)  # Gauss-Legendre route
    k = np.linspace(0.0, 30.0, 301)
    assert np.max(np.abs(numeric.fourier(k) - sphere.fourier(k))) < 1e-8


def test_rescaled_fourier(sphere, params):
    assert math.isclose(float(rescaled_fourier(sphere, params, np.zeros(3))),
                        params.N ** (params.kappa - 1) * VHAT0, rel_tol=1e-14)
    p = np.array([[2 * math.pi, 0, 0], [0, 4 * math.pi, 2 * math.pi]])
    assert np.all(rescaled_fourier(zero_potential(), params, p) == 0)


@pytest.mark.parametrize("bad, msg", [
    (dict(profile=lambda r: -np.ones_like(r), R=1.0), "non-negative"),
    (dict(profile=lambda r: np.ones_like(r), R=1.0), "vanish beyond R"),
    (dict(profile=lambda r: np.ones_like(r), R=0.0), "positive"),
    (dict(profile=lambda r: np.where(r <= 1, 1 / np.where(r > 0, r, 0.0), 0.0), R=1.0), "not finite"),
])
def test_potential_validation(bad, msg):
    with np.errstate(divide="ignore"):
        with pytest.raises(ValueError, match=msg):
            Potential(**bad)


def test_non_radial_rejected():
    with pytest.raises(ValueError, match="non-radial"):
        Potential.from_cartesian(lambda x: np.where(np.linalg.norm(x, axis=1) < 1, 1 + x[:, 0], 0.0), 1.0)


def test_parse_potential():
    p = parse_potential("soft-sphere:V0=2,R=1")
    assert math.isclose(p.full_space_a, 1 - math.tanh(1))
    assert parse_potential("zero").is_zero
    for bad in ("hard-core:R=1", "soft-sphere:V0=2", "soft-sphere:V0=x,R=1", "soft-sphere:V0=1,R=1,R=2"):
        with pytest.raises(ValueError):
            parse_potential(bad)


# ---- full-space oracle


def test_full_space_analytic(sphere, sphere_a):
    assert math.isclose(full_space_scattering_length(sphere), sphere_a, rel_tol=1e-15)
    assert math.isclose(sphere_a, 0.238406, abs_tol=1e-6)
    assert full_space_scattering_length(zero_potential()) == 0.0


@settings(max_examples=15, deadline=None)
@given(V0=st.floats(0.1, 20.0), R=st.floats(0.3, 3.0))
def test_ode_matches_analytic(V0, R):
    pot = soft_sphere(V0, R)
    assert abs(full_space_scattering_length_ode(pot) - pot.full_space_a) < 1e-8


def test_ode_for_smooth_profile():
    # repulsive V gives 0 < a < Born value
    pot = Potential(profile=lambda r: np.where(r <= 1, 3.0 * (1 - r * r), 0.0), R=1.0)
    a = full_space_scattering_length(pot)
    born = pot.vhat0 / (8 * math.pi)
    assert 0 < a < born


def test_non_potential_rejected():
    with pytest.raises(TypeError):
        full_space_scattering_length(lambda r: r)


# ---- box scattering solve


def test_zero_potential_solution(params):
    s = solve_box_scattering(zero_potential(), params)
    assert s.a_N == 0.0 and s.residual == 0.0 and not np.any(s.phi)


def test_residual_and_independent_residual(solution, sphere, params):
    assert solution.residual <= solution.tol
    assert independent_residual(solution, sphere, params) <= 2 * solution.tol


def test_two_summation_orders(solution, sphere, params):
    qf = scattering_length_quadratic_form(solution, sphere, params)
    assert abs(qf / solution.a_N - 1) <= 1e-9
    again = box_scattering_length(solution, sphere, params)
    assert again.a_N == solution.a_N
    assert again.correction < 0


def test_below_born(solution):
    assert solution.a_N < VHAT0 / (8 * math.pi)
    assert math.isclose(VHAT0 / (8 * math.pi), 1 / 3, rel_tol=1e-14)


def test_phi_negative_at_small_momenta(solution, params):
    small = solution.norms < params.support_scale / 4
    assert np.all(solution.phi[small] < 0)
    assert solution.value((0, 0, 0)) == 0.0


def test_direct_and_fft_routes_agree(sphere, params):
    d = solve_box_scattering(sphere, params, cap=2 * params.support_scale, method="direct")
    f = solve_box_scattering(sphere, params, cap=2 * params.support_scale, method="fft")
    assert np.max(np.abs(d.phi - f.phi)) < 1e-12
    assert abs(d.a_N - f.a_N) < 1e-12


def test_cap_doubling_within_tail_bound(sphere, params):
    M = params.support_scale
    s1 = solve_box_scattering(sphere, params, cap=2 * M)
    s2 = solve_box_scattering(sphere, params, cap=4 * M)
    assert abs(s2.a_N - s1.a_N) <= s1.tail_bound
    lo, hi = s1.a_interval
    assert lo <= s2.a_N <= hi


def test_cap_below_support_rejected(sphere, params):
    with pytest.raises(ValueError, match="support scale"):
        solve_box_scattering(sphere, params, cap=0.5 * params.support_scale)


def test_non_convergence_reports_residual(sphere, params):
    from dilute_bose.scattering import ScatteringConvergenceError

    with pytest.raises(ScatteringConvergenceError) as exc:
        solve_box_scattering(sphere, params, cap=2 * params.support_scale, max_iter=1)
    assert exc.value.best_residual > 0


def test_csv_export(solution, tmp_path):
    path = tmp_path / "phi.csv"
    solution.to_csv(str(path))
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["px", "py", "pz", "phi"]
    assert len(rows) == len(solution.phi) + 1
    assert float(rows[1][3]) == solution.phi[0]


def test_convergence_rate_kappa_055(sphere, sphere_a):
    kappa = 0.55
    Ns = [50.0, 150.0, 450.0, 1350.0]
    errs = []
    for N in Ns:
        p = regime_from_N(N, kappa, 0.05)
        errs.append(abs(solve_box_scattering(sphere, p, cap=4 * p.support_scale).a_N - sphere_a))
    assert abs(loglog_slope(Ns, errs) + (1 - kappa)) <= 0.2


# ---- norms


def test_norms_of_zero(params):
    s = solve_box_scattering(zero_potential(), params)
    r = scattering_norm_report(s, params, alpha=0.2)
    assert r.l1 == r.l2 == r.linf == r.p_l2_sq == r.l2_alpha == r.linf_alpha == 0.0


def test_norm_scaling_ladder(sphere):
    reps = []
    for N in (1e3, 3e3, 1e4, 3e4):
        p = regime_from_N(N, 0.55, 0.02)
        s = solve_box_scattering(sphere, p, cap=2 * p.support_scale)
        reps.append(scattering_norm_report(s, p, alpha=0.3))
    scaled = [r.scaled()["linf"] for r in reps]
    assert max(scaled) / min(scaled) < 3
    out = norm_scaling(reps)
    slope, expected, flagged = out["linf_alpha"]
    assert math.isclose(expected, -1 + 0.55 - 0.6)
    assert not flagged and abs(slope - expected) <= 0.15
    assert not any(v[2] for v in out.values())
