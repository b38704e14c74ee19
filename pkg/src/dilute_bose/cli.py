"""Command-line front end.

Subcommands: ``scattering``, ``free-energy``, ``verify``, ``fock-demo`` and
``localize``. Exit codes: 0 when every check passes, 1 on a check failure,
2 on a usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import sys
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

COMMANDS = ("scattering", "free-energy", "verify", "fock-demo", "localize")


class UsageError(ValueError):
    pass


def _floats(text) -> Tuple[float, ...]:
    if isinstance(text, (tuple, list)):
        return tuple(float(v) for v in text)
    try:
        return tuple(float(v) for v in str(text).split(",") if v.strip())
    except ValueError:
        raise UsageError(f"expected a comma-separated list of numbers, got {text!r}") from None


@dataclass
class RunConfig:
    """Every knob of a run; each field has a default."""

    command: str = "verify"
    potential: str = "soft-sphere:V0=2,R=1"
    rho: Tuple[float, ...] = (1e-4,)
    gamma: float = 1.0909090909090908
    epsilon: float = 0.1
    temp_ratio: Tuple[float, ...] = (0.0,)
    N: Tuple[float, ...] = (50.0, 150.0, 450.0, 1350.0)
    cap_factor: float = 4.0
    tol: float = 1e-10
    seed: int = 0
    alpha_source: str = "full"
    c_eps: float = 0.0
    c_loc: float = 1.0
    out: Optional[str] = None
    dump_ops: Optional[str] = None

    _LISTS = ("rho", "temp_ratio", "N")

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.alpha_source not in ("full", "box"):
            raise UsageError("alpha-source must be 'full' or 'box'")
        if any(r <= 0 for r in self.rho):
            raise UsageError("rho values must be positive")
        if any(t < 0 for t in self.temp_ratio):
            raise UsageError("temp-ratio values must be non-negative")
        if self.cap_factor <= 1:
            raise UsageError("cap-factor must exceed 1")
        from .scattering import parse_potential

        try:
            parse_potential(self.potential)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        return self

    def to_text(self) -> str:
        """Flat ``key = value`` text that :meth:`from_text` reads back."""
        lines = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            if isinstance(v, tuple):
                v = ",".join(repr(float(x)) for x in v)
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, base: Optional["RunConfig"] = None) -> "RunConfig":
        cfg = dataclasses.replace(base) if base is not None else cls()
        names = {f.name: f for f in dataclasses.fields(cls)}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"config line {lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in names:
                raise UsageError(f"config line {lineno}: unknown key {key!r}")
            setattr(cfg, key, _coerce(key, value, cfg))
        return cfg


def _coerce(key: str, value, cfg: RunConfig):
    current = getattr(RunConfig(), key)
    if key in RunConfig._LISTS:
        return _floats(value)
    if key == "seed":
        try:
            return int(value)
        except ValueError:
            raise UsageError(f"seed must be an integer, got {value!r}") from None
    if isinstance(current, float):
        try:
            return float(value)
        except ValueError:
            raise UsageError(f"{key} must be a number, got {value!r}") from None
    return str(value)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value file; flags override it")
    common.add_argument("--rho")
    common.add_argument("--gamma")
    common.add_argument("--epsilon")
    common.add_argument("--temp-ratio")
    common.add_argument("--N", help="particle-scale ladder for scattering")
    common.add_argument("--potential")
    common.add_argument("--cap-factor")
    common.add_argument("--tol")
    common.add_argument("--seed")
    common.add_argument("--alpha-source", choices=("full", "box"))
    common.add_argument("--c-eps")
    common.add_argument("--c-loc", help="constant of the localization overhead")
    common.add_argument("--out", help="CSV output path")
    p = argparse.ArgumentParser(prog="dilute-bose", description="Dilute Bose gas free-energy lab")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name == "fock-demo":
            sp.add_argument("--dump-ops", help="directory for sparse triplet dumps")
    return p


def config_from_args(argv: Optional[Sequence[str]] = None) -> RunConfig:
    args = build_parser().parse_args(argv)
    cfg = RunConfig(command=args.command)
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = RunConfig.from_text(fh.read(), cfg)
        except OSError as exc:
            raise UsageError(f"cannot read config file: {exc}") from None
        cfg.command = args.command
    for f in dataclasses.fields(RunConfig):
        if f.name == "command":
            continue
        v = getattr(args, f.name, None)
        if v is not None:
            setattr(cfg, f.name, _coerce(f.name, v, cfg))
    return cfg.validate()


# ---------------------------------------------------------------- pipelines


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tol: float
    passed: bool


def _check(name, value, tol) -> Check:
    value = float(value)
    return Check(name, value, tol, bool(value <= tol))


def _fmt(x) -> str:
    return repr(float(x)) if isinstance(x, (float, np.floating)) else str(x)


def _write(path: Optional[str], rows: List[tuple]) -> None:
    from .scattering import write_csv_atomic

    if path is None:
        return
    try:
        write_csv_atomic(path, [tuple(_fmt(v) for v in r) for r in rows])
    except OSError as exc:
        raise UsageError(f"cannot write output {path!r}: {exc}") from None


def _print_checks(checks: Sequence[Check]) -> None:
    for c in checks:
        status = "PASS" if c.passed else "FAIL"
        print(f"{status}  {c.name:<52} {c.value:.3e} (tol {c.tol:.0e})")


def run_scattering(cfg: RunConfig) -> int:
    from ._numerics import loglog_slope
    from .regime import kappa_of_gamma, regime_from_N
    from .scattering import ScatteringConvergenceError, full_space_scattering_length, parse_potential, solve_box_scattering

    pot = parse_potential(cfg.potential)
    a = full_space_scattering_length(pot)
    kappa = kappa_of_gamma(cfg.gamma)
    print(f"potential {pot.describe()}")
    print(f"full-space scattering length a = {a!r}")
    rows = [("N", "kappa", "a_N", "a", "abs_err", "residual", "iterations", "tail_bound")]
    errs, Ns, ok = [], [], True
    for N in cfg.N:
        params = regime_from_N(N, kappa, cfg.epsilon)
        try:
            sol = solve_box_scattering(pot, params, cap=cfg.cap_factor * params.support_scale, tol=cfg.tol)
        except ScatteringConvergenceError as exc:
            print(f"FAIL  N={N!r}: {exc}")
            ok = False
            continue
        err = abs(sol.a_N - a)
        rows.append((float(N), kappa, sol.a_N, a, err, sol.residual, sol.iterations, sol.tail_bound))
        print(f"N={N:<10g} a_N={sol.a_N:.12f} |a_N-a|={err:.3e} iterations={sol.iterations}")
        if err > 0:
            errs.append(err)
            Ns.append(N)
    if len(Ns) >= 2:
        print(f"slope of log|a_N-a| vs log N: {loglog_slope(np.array(Ns), np.array(errs)):.4f} "
              f"(scale exponent {-(1 - kappa):.4f})")
    _write(cfg.out, rows)
    return 0 if ok else 1


def _alpha_a(cfg: RunConfig) -> float:
    from .regime import kappa_of_gamma, regime_from_N
    from .scattering import full_space_scattering_length, parse_potential, solve_box_scattering

    pot = parse_potential(cfg.potential)
    if cfg.alpha_source == "full":
        return full_space_scattering_length(pot)
    params = regime_from_N(cfg.N[-1], kappa_of_gamma(cfg.gamma), cfg.epsilon)
    return solve_box_scattering(pot, params, cap=cfg.cap_factor * params.support_scale, tol=cfg.tol).a_N


def run_free_energy(cfg: RunConfig) -> int:
    from .thermal import FREE_ENERGY_COLUMNS, free_energy_upper_bound

    a = _alpha_a(cfg)
    reports, checks = [], []
    for rho in cfg.rho:
        for ratio in cfg.temp_ratio:
            r = free_energy_upper_bound(rho, ratio * rho * a, a, c_eps=cfg.c_eps)
            reports.append(r)
            tag = f"rho={rho!r} T/(rho a)={ratio!r}"
            finite = all(math.isfinite(v) for v in r.row())
            checks.append(Check(f"{tag}: finite, thermal <= 0", r.thermal, 0.0, finite and r.thermal <= 0))
            for note in r.notes:
                print(f"note  {tag}: {note}")
    rows = [FREE_ENERGY_COLUMNS] + [tuple(float(v) for v in r.row()) for r in reports]
    print(",".join(FREE_ENERGY_COLUMNS))
    for r in rows[1:]:
        print(",".join(_fmt(v) for v in r))
    _print_checks(checks)
    _write(cfg.out, rows)
    return 0 if all(c.passed for c in checks) else 1


def verification_checks(seed: int = 0) -> List[Check]:
    """Numerical identities across modules; random samples use ``seed``."""
    from .bogoliubov import Dispersion, shell_branch
    from .fockmicro import transforms as TR
    from .fockmicro.space import FockSpace
    from .regime import regime_from_N
    from .thermal import (
        energy_minus_TS,
        gibbs_free_energy_from_energies,
        lhy_integral,
        shell_number_second_moment,
        thermal_integral,
        thermal_integral_series,
    )

    rng = np.random.default_rng(seed)
    checks = []
    target = 512.0 * math.sqrt(math.pi) / 15.0
    checks.append(_check("LHY integral = 512 sqrt(pi)/15 (relative)", abs(lhy_integral(1.0) / target - 1.0), 1e-6))
    # B / p^2 <= 50 keeps A - B free of cancellation
    p = rng.uniform(1.0, 1e3, size=10000)
    disp = Dispersion(a=1.0, coupling=float(rng.uniform(0.1, 100.0)))
    rel = np.max(np.abs(disp.from_AB(p) / disp(p) - 1.0))
    checks.append(_check("sqrt(A^2-B^2) = e_p on 1e4 points (relative)", rel, 1e-12))
    worst = 0.0
    for _ in range(20):
        e = rng.uniform(0.05, 20.0, size=int(rng.integers(1, 50)))
        T = float(rng.uniform(0.1, 10.0))
        f1 = gibbs_free_energy_from_energies(e, T)
        f2 = energy_minus_TS(e, T)
        worst = max(worst, abs(f1 - f2) / abs(f1))
    checks.append(_check("-T log Z = E - T S on 20 samples (relative)", worst, 1e-10))
    checks.append(_check("thermal integral at zero gap vs Bose series",
                         abs(thermal_integral(0.0) - thermal_integral_series(0.0)), 1e-9))
    params = regime_from_N(2.0, 0.52, 0.1)
    S = np.array([(1, 0, 0), (-1, 0, 0)])
    d = Dispersion.from_params(1.0, params)
    sb = shell_branch(1.0, params, S)
    T = float(d(2 * math.pi)) / 2
    wick = shell_number_second_moment(S, d, T, sb).value
    space = FockSpace([((1, 0, 0), "shell"), ((-1, 0, 0), "shell")], caps=30)
    _, exact = TR.exact_shell_moments(space, d, T, {(1, 0, 0): sb.tau[0], (-1, 0, 0): sb.tau[1]})
    checks.append(_check("Wick Tr N_S^2 Gamma vs exact 2-mode trace", abs(wick - exact), 1e-10))
    return checks


def localization_checks(seed: int = 0, c: float = 1.0) -> List[Check]:
    from . import localization as LO

    spec = LO.WindowSpec(L=10.0, ell=2.0, R=0.5)
    checks = [
        _check("window partition identity", LO.partition_gap(spec), 1e-12),
        _check("window symmetry q(t) = q(-t)",
               float(np.max(np.abs(LO.window_value(np.linspace(0, 7, 701), spec)
                                   - LO.window_value(-np.linspace(0, 7, 701), spec)))), 0.0),
        _check("int q^2 = L", abs(LO.periodic_integral_check(lambda t: np.ones_like(t), spec).windowed - spec.L), 1e-12),
    ]
    worst = 0.0
    for deg in (1, 5, 10, 20):
        for s in range(seed, seed + 5):
            g = LO.periodic_integral_check(LO.TrigPolynomial.random(spec.L, deg, s), spec).gap
            worst = max(worst, g)
    checks.append(_check("periodic integral preservation, degree <= 20, 5 seeds", worst, 1e-10))
    rows = LO.dilution_chain([10.0**-k for k in range(4, 13)], gamma=1.1, alpha=0.25, c=c)
    neg = sum(1 for r in rows if r.margin < 0)
    checks.append(_check("rho~ >= rho along the density ladder (violations)", neg, 0.0))
    ex = LO.chain_exponents(rows)
    checks.append(_check("overhead exponent vs gamma + alpha gamma - 1", abs(ex["overhead_ratio"] - 0.375), 0.02))
    checks.append(_check("padding exponent vs gamma - alpha gamma", abs(ex["padding"] - 0.825), 0.02))
    return checks


def run_verify(cfg: RunConfig) -> int:
    from .fockmicro.suite import run_suite

    checks = verification_checks(cfg.seed)
    checks += localization_checks(cfg.seed, cfg.c_loc)
    checks += [Check(f"{r.group}: {r.name}", r.value, r.tol, r.passed) for r in run_suite(cfg.seed)]
    _print_checks(checks)
    rows = [("check", "value", "tol", "passed")]
    rows += [(c.name, c.value, c.tol, "1" if c.passed else "0") for c in checks]
    _write(cfg.out, rows)
    return 0 if all(c.passed for c in checks) else 1


def run_fock_demo(cfg: RunConfig) -> int:
    from .fockmicro.suite import run_suite

    rows = run_suite(cfg.seed, dump_dir=cfg.dump_ops)
    for r in rows:
        print(r.line())
    _write(cfg.out, [("group", "check", "value", "tol", "passed")]
           + [(r.group, r.name, r.value, r.tol, "1" if r.passed else "0") for r in rows])
    return 0 if all(r.passed for r in rows) else 1


def run_localize(cfg: RunConfig) -> int:
    checks = localization_checks(cfg.seed, cfg.c_loc)
    _print_checks(checks)
    _write(cfg.out, [("check", "value", "tol", "passed")]
           + [(c.name, c.value, c.tol, "1" if c.passed else "0") for c in checks])
    return 0 if all(c.passed for c in checks) else 1


PIPELINES = {
    "scattering": run_scattering,
    "free-energy": run_free_energy,
    "verify": run_verify,
    "fock-demo": run_fock_demo,
    "localize": run_localize,
}


def run(cfg: RunConfig) -> int:
    return PIPELINES[cfg.command](cfg)


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        cfg = config_from_args(argv)
        return run(cfg)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else 2
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
