"""Pass/fail table of the exact operator identities on small mode sets."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np

from . import cubic as C
from . import transforms as TR
from .hamiltonian import weyl_decomposition_check
from .space import FockSpace, ladder, max_abs


@dataclass(frozen=True)
class CheckRow:
    group: str
    name: str
    value: float
    tol: float
    passed: bool

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.group:<12} {self.name:<44} {self.value:.3e} (tol {self.tol:.0e})"


def _row(group, name, value, tol, upper=True) -> CheckRow:
    value = float(value)
    ok = value <= tol if upper else value >= tol
    return CheckRow(group, name, value, tol, bool(ok))


def _toy_vhat(n) -> float:
    n2 = float(sum(v * v for v in n))
    return 0.3 / (1.0 + 0.1 * n2)


def ladder_checks() -> List[CheckRow]:
    s = FockSpace([((1, 0, 0), "shell")], caps=3)
    a, ad = ladder(s, (1, 0, 0))
    num = (ad @ a).toarray()
    comm = (a @ ad).toarray() - num
    below = s.basis[:, 0] < 3
    return [
        _row("ladder", "number spectrum {0,1,2,3}", max_abs(np.sort(np.linalg.eigvalsh(num)) - np.arange(4)), 1e-12),
        _row("ladder", "[a,a*] = I below cap", max_abs(comm[np.ix_(below, below)] - np.eye(below.sum())), 1e-12),
        _row("ladder", "a vacuum = 0", max_abs(a.toarray()[:, 0]), 0.0),
    ]


def weyl_checks() -> List[CheckRow]:
    s = FockSpace([((0, 0, 0), "condensate")], caps=40)
    W = TR.weyl(s, 0.5)
    a, _ = ladder(s, (0, 0, 0))
    d = TR.conjugate(W, a) - a.toarray() - 0.5 * np.eye(s.dim)
    Wd = W.toarray()
    n = np.arange(s.dim)
    mean = float(np.sum(n * np.abs(Wd[:, 0]) ** 2))
    return [
        _row("weyl", "unitary", max_abs(Wd.conj().T @ Wd - np.eye(s.dim)), 1e-8),
        _row("weyl", "shift on n<=10", max_abs(d[:11, :11]), 1e-8),
        _row("weyl", "Poisson mean = amplitude^2", abs(mean - 0.25), 1e-12),
    ]


def bogoliubov_checks() -> List[CheckRow]:
    p, q = (1, 0, 0), (-1, 0, 0)
    s = FockSpace([(p, "high"), (q, "high")], caps=12)
    U = TR.quadratic_bogoliubov(s, {p: 0.1, q: 0.1})
    c, sn, _ = TR.extract_coefficients(s, U, p)
    s2 = FockSpace([(p, "shell"), (q, "shell")], caps=30)
    diago = TR.diago_check(s2, a=1.0, N=2.0, kappa=0.52)
    q2 = TR.q2_conjugation_check(s, {p: 0.1, q: 0.1}, lambda x: 0.7, 5.0)
    return [
        _row("bogoliubov", "extracted c = cosh 0.1", abs(c - math.cosh(0.1)), 1e-7),
        _row("bogoliubov", "extracted s = sinh 0.1", abs(sn - math.sinh(0.1)), 1e-7),
        _row("bogoliubov", "diagonalization identity", diago.deviation, 1e-6),
        _row("bogoliubov", "Q2 conjugation, a*a weight 2", q2.deviation[2], 1e-6),
        _row("bogoliubov", "Q2 conjugation, a*a weight 1 (rejected)", q2.deviation[1], 1e-2, upper=False),
    ]


def gibbs_checks() -> List[CheckRow]:
    from ..thermal import bose_occupation, gamma0_free_energy
    from ..bogoliubov import Dispersion

    k = (1, 0, 0)
    disp = Dispersion(a=1.0, coupling=30.0)
    e = float(disp(TR.momentum_norm(k)))
    s1 = FockSpace([(k, "shell")], caps=60)
    g = TR.gibbs_gamma0(s1, disp, e)
    occ = float(np.sum(s1.occupation(k) * g.toarray().diagonal()))
    s2 = FockSpace([(k, "shell"), ((-1, 0, 0), "shell")], caps=80)
    f_exact = TR.exact_free_energy(s2, disp, e)
    f_closed = gamma0_free_energy(np.array([k, (-1, 0, 0)]), disp, e)
    return [
        _row("gibbs", "occupation = Bose factor", abs(occ - float(bose_occupation(e, e))), 1e-12),
        _row("gibbs", "2-mode -T log Z exact trace", abs(f_exact - f_closed) / abs(f_closed), 1e-10),
    ]


def _layout_rows(layout: C.Layout, space: FockSpace, tag: str) -> List[CheckRow]:
    rows = []
    sq = x2 = ex = un = par = 0.0
    for k in layout.shell:
        if not layout.high_restricted(k):
            continue
        g = C.cubic_generator(space, layout, k)
        sq = max(sq, max_abs(g.sharp.matrix @ g.sharp.matrix))
        x2 = max(x2, C.xk_operator(space, layout, g).formula_deviation)
        T = C.cubic_unitary(space, layout, k, g).toarray()
        ex = max(ex, max_abs(T - C.cubic_unitary_expm(g)))
        un = max(un, max_abs(T.conj().T @ T - np.eye(space.dim)))
    Tc = C.cubic_product(space, layout)
    Td = Tc.toarray()
    for k in layout.shell:
        P = C.parity_ops(space, layout, k).P.toarray()
        par = max(par, max_abs(Td @ P - P @ Td))
    gamma = TR.dress(C.shell_pairing(space, layout), C.layout_gibbs(space, layout))
    mono = C.monogamy_check(space, layout, gamma, T_c=Tc)
    inv = space.count("shell") + 0.5 * space.count("high")
    invd = max_abs(Td.conj().T @ (inv[:, None] * Td) - np.diag(inv))
    rows += [
        _row(tag, "(a) (B#)^2 = 0", sq, 0.0),
        _row(tag, "(b) X_k^2 formula", x2, 1e-12),
        _row(tag, "(c) closed-form T_k vs expm", ex, 1e-10),
        _row(tag, "(d) T_k unitary", un, 1e-12),
        _row(tag, "(e) [T_c, P_k] = 0", par, 1e-12),
        _row(tag, "(f) monogamy chi / chi~", max(mono.chi_deviation, mono.chi_tilde_deviation), 1e-12),
        _row(tag, "(g) N_S + N_H/2 invariance", invd, 1e-12),
    ]
    for j in (1, 2):
        m = C.moment_transport_check(space, layout, gamma, j, T_c=Tc)
        rows.append(_row(tag, f"(h) Tr T*N_S^{j}T G - Tr N_S^{j} G", max(m.trace_after - m.trace_before, 0.0), 1e-12))
        rows.append(_row(tag, f"(h) operator floor j={j}", -m.operator_floor, 1e-10))
    return rows


def cubic_checks(seeds=range(5)) -> List[CheckRow]:
    rows = _layout_rows(C.toy_layout(), C.toy_layout().space(), "cubic-toy")
    for seed in seeds:
        L = C.random_layout(seed)
        rows += _layout_rows(L, L.space(weighted_cap=4, shell_cap=2, high_cap=1), f"cubic-s{seed}")
    return rows


def structure_checks() -> List[CheckRow]:
    rows = []
    for L, kw in ((C.toy_layout(), {}), (C.triad_layout(), dict(weighted_cap=6, shell_cap=3, high_cap=1))):
        s = L.space(**kw)
        U2 = C.shell_pairing(s, L)
        gamma = TR.dress(U2, C.layout_gibbs(s, L))
        Tc = C.cubic_product(s, L).toarray()
        Tr = C.cubic_product(s, L, order=list(reversed(L.shell))).toarray()
        rho = Tc @ gamma @ Tc.conj().T
        X = C.xi_projector(s).toarray()
        zero = 0.0
        for Q in C.q3_parts(s, L, _toy_vhat).values():
            zero = max(zero, abs(np.sum(Q.toarray() * rho.T)))
        a = s.annihilator(L.shell[0])
        zero = max(zero, abs(np.sum((a + a.T).toarray() * rho.T)))
        ns = s.count("shell").astype(float)
        t1 = np.sum((Tc.conj().T @ (ns[:, None] * Tc)) * gamma.T)
        t2 = np.sum((Tr.conj().T @ (ns[:, None] * Tr)) * gamma.T)
        tag = f"struct-{L.name}"
        rows += [
            _row(tag, "Xi commutes with T_c", max_abs(X @ Tc - Tc @ X), 1e-12),
            _row(tag, "Xi commutes with e^B2", max_abs(X @ U2.toarray() - U2.toarray() @ X), 1e-12),
            _row(tag, "zero traces Q3^S, Q3^M, odd", zero, 1e-12),
            _row(tag, "order-independent Tr T*N_S T G", abs(t1 - t2), 1e-12),
        ]
    rows.append(gamma_n_check())
    return rows


def gamma_n_check() -> CheckRow:
    L = C.toy_layout()
    s = L.space(weighted_cap=4, shell_cap=2, high_cap=1, condensate_cap=20)
    g0 = C.layout_gibbs(s, L)
    U2 = C.shell_pairing(s, L)
    Tc = C.cubic_product(s, L)
    eta = {r: 0.05 * L.phi[r] for r in L.high}
    B1 = TR.quadratic_bogoliubov(s, eta)
    W = TR.weyl(s, 0.5)
    U = W.toarray() @ B1.toarray() @ Tc.toarray() @ U2.toarray()
    G = U @ g0.toarray() @ U.conj().T
    ev = np.linalg.eigvalsh(0.5 * (G + G.conj().T))
    dev = max(abs(np.trace(G) - 1.0), max(-ev.min(), 0.0))
    return _row("struct", "Gamma_N trace 1 and PSD", dev, 1e-12)


def hamiltonian_checks() -> List[CheckRow]:
    s = FockSpace([((0, 0, 0), "condensate"), ((1, 0, 0), "low"), ((-1, 0, 0), "low")], caps=[40, 3, 3])
    r = weyl_decomposition_check(s, _toy_vhat, 0.25, weyl_low=10)
    s5 = FockSpace([((0, 0, 0), "condensate")] + [((i, 0, 0), "low") for i in (1, -1, 2, -2)],
                   caps=[6, 2, 2, 2, 2], total_cap=6)
    r5 = weyl_decomposition_check(s5, _toy_vhat, 3.0)
    return [
        _row("hamiltonian", "shift decomposition, symbolic", r.symbolic, 1e-10),
        _row("hamiltonian", "shift decomposition, matrices", r.matrix, 1e-10),
        _row("hamiltonian", "matrix Weyl route, low sector", r.matrix_weyl, 1e-8),
        _row("hamiltonian", "5-mode decomposition, matrices", r5.matrix, 1e-10),
    ]


def run_suite(seed: int = 0, dump_dir: Optional[str] = None) -> List[CheckRow]:
    """All checks; random layouts use seeds ``seed .. seed+4``.

    With ``dump_dir`` the toy-layout operators are written as sparse triplets.
    """
    rows: List[CheckRow] = []
    for fn in (ladder_checks, weyl_checks, bogoliubov_checks, gibbs_checks):
        rows += fn()
    rows += cubic_checks(range(seed, seed + 5))
    rows += structure_checks()
    rows += hamiltonian_checks()
    if dump_dir is not None:
        dump_operators(dump_dir)
    return rows


def dump_operators(directory: str) -> List[str]:
    """Write toy-layout ``B_k^#``, ``T_k``, ``T_c``, ``P_k`` and ``Gamma_0`` as triplet files."""
    os.makedirs(directory, exist_ok=True)
    L = C.toy_layout()
    s = L.space()
    written = []

    def put(name, op):
        path = os.path.join(directory, name + ".txt")
        op.dump(path)
        written.append(path)

    for i, k in enumerate(L.shell):
        g = C.cubic_generator(s, L, k)
        put(f"B_sharp_{i}", g.sharp)
        put(f"T_{i}", C.cubic_unitary(s, L, k, g))
        put(f"P_{i}", C.parity_ops(s, L, k).P)
    put("T_c", C.cubic_product(s, L))
    put("Gamma0", C.layout_gibbs(s, L))
    return written
