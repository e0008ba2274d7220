"""Command-line front end.

    mepack packet  --config run.ini
    mepack evolve  --config run.ini --out traj.csv [--seed N]
    mepack scan    --config run.ini --out scan.csv
    mepack chain   --config run.ini --out modes.csv
    mepack verify

Exit codes: 0 success, 1 invalid input or infeasible request, 2 numerical
failure, 3 unreadable or malformed configuration.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import chain as chain_mod
from .config import ConfigError, RunConfig, load
from .core import classical_entropy, classical_multipliers
from .dynamics import (classical_limit_scan, closed_form_record, evolve_taylor, matrix_oracle, mc_oracle,
                       write_atomic)
from .errors import NumericalError, UncertaintyViolationError, ValidationError
from .qpacket import QuantumMEPacket, build_truncated_state, diagonal_weights, minimal_cutoff, quantum_multipliers

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_PARSE = 0, 1, 2, 3
TRUNCATED_REPORT_LIMIT = 2000


class _Out:
    def __init__(self, quiet: bool):
        self.quiet = quiet

    def info(self, text: str):
        if not self.quiet:
            print(text)

    def diag(self, text: str):
        if not self.quiet:
            print(text, file=sys.stderr)


def _emit(text: str, path: str | None, out: _Out):
    if path:
        write_atomic(path, text)
        out.diag(f"wrote {path}")
    else:
        sys.stdout.write(text)


def _out_path(args, cfg: RunConfig) -> str | None:
    return args.out or cfg.output_path


def cmd_packet(cfg: RunConfig, args, out: _Out) -> int:
    params = cfg.packet
    cm = classical_multipliers(params)
    out.info(f"hbar = {params.hbar:.17g}   v = {params.constants.v:.17g}")
    out.info(f"classical entropy = {classical_entropy(params):.17g}")
    for k, d in enumerate(params.dofs):
        out.info(f"dof {k}: Q = {d.Q:g}, P = {d.P:g}, dQ = {d.dQ:g}, dP = {d.dP:g}")
        out.info(f"  classical multipliers: l1 = {cm.l1[k]:.17g}, l2 = {cm.l2[k]:.17g}, "
                 f"l3 = {cm.l3[k]:.17g}, l4 = {cm.l4[k]:.17g}")
    packet = QuantumMEPacket.from_params(params)
    for k, nu in enumerate(packet.nu):
        out.info(f"dof {k}: nu = {nu:.17g}")
        if nu > 1.0:
            qm = quantum_multipliers(params)
            out.info(f"  quantum multipliers: l1 = {qm.l1[k]:.17g}, l2 = {qm.l2[k]:.17g}, "
                     f"l3 = {qm.l3[k]:.17g}, l4 = {qm.l4[k]:.17g}")
        else:
            out.info("  quantum multipliers: diverge at the pure-state boundary nu = 1")
        w = diagonal_weights(nu, 4)
        out.info("  weights R_0..R_4: " + ", ".join(f"{x:.6g}" for x in w))
        if params.n == 1 and minimal_cutoff(nu) <= TRUNCATED_REPORT_LIMIT:
            state = build_truncated_state(packet)
            mom = state.moments()
            targets = state.diagnostics["targets"]
            res = ", ".join(f"{key} {mom[key] - targets[key]:.2e}" for key in ("q", "p", "q2", "p2"))
            out.info(f"  truncated state dim {state.dim}: constraint residuals {res}")
    out.info(f"quantum entropy = {packet.entropy():.17g}")
    return EXIT_OK


def cmd_evolve(cfg: RunConfig, args, out: _Out) -> int:
    ev = cfg.evolve
    if args.seed is not None:
        ev.seed = args.seed
    params, pot = cfg.packet, cfg.potential
    times = np.linspace(0.0, ev.t_max, ev.n_out)
    if ev.method == "closed":
        rec = closed_form_record(params, pot, times)
    elif ev.method == "taylor":
        if ev.engine == "quantum":
            QuantumMEPacket.from_params(params)
        rec = evolve_taylor(params, pot, times, K=ev.taylor_order, tol=ev.tol, engine=ev.engine)
    elif ev.method == "mc":
        rec = mc_oracle(params, pot, times, samples=ev.mc_samples, seed=ev.seed, n_steps=ev.mc_steps)
    else:
        rec = matrix_oracle(QuantumMEPacket.from_params(params), pot, times, dim=ev.trunc_dim)
    for key, value in rec.diagnostics.items():
        out.diag(f"{key} = {value}")
    _emit(rec.to_csv(), _out_path(args, cfg), out)
    return EXIT_OK


def cmd_scan(cfg: RunConfig, args, out: _Out) -> int:
    sc = cfg.scan
    params = cfg.packet
    nu_min = params.scaled(sc.s_min).nu[0]
    if nu_min <= 1.0:
        raise UncertaintyViolationError(
            f"nu(s_min) = {nu_min:.6g} <= 1: the scan needs mixed quantum packets", nu=nu_min
        )
    s_grid = np.geomspace(sc.s_min, sc.s_max, sc.n_points)
    res = classical_limit_scan(params, cfg.potential, sc.t_probe, s_grid, K=sc.taylor_order)
    for note in res.notes:
        out.diag(note)
    _emit(res.to_csv(), _out_path(args, cfg), out)
    finite = [k for k in ("varQ", "varP") if np.isfinite(res.decay_exponent(k))]
    summary = ", ".join(f"{k} {res.decay_exponent(k):.4f}" for k in finite) or "n/a"
    out.diag(f"fitted decay exponent in s: {summary}")
    if res.notes and len(res.notes) == len(s_grid):
        raise NumericalError("no scan point converged")
    return EXIT_OK


def cmd_chain(cfg: RunConfig, args, out: _Out) -> int:
    ch = cfg.chain
    model = ch.model
    basis = chain_mod.mode_basis(model)
    if ch.E is not None:
        gibbs = chain_mod.gibbs_from_energy(model, ch.E, basis)
    else:
        gibbs = chain_mod.gibbs_from_lambda(model, ch.lam, basis)
    stats = chain_mod.length_statistics(model, gibbs, basis)
    alt = chain_mod.length_statistics(model, gibbs, basis, convention="printed")
    _emit(chain_mod.chain_report_csv(basis, gibbs, stats), _out_path(args, cfg), out)
    asym = chain_mod.asymptotic_relative_spread(model, gibbs.lam)
    for text in (
        f"particles = {model.n_particles}, lambda = {gibbs.lam:.17g}, E = {gibbs.E:.17g}",
        f"L_mean = {stats.mean:.17g} (N xi)",
        f"dL_rel = {stats.relative_spread:.17g}; high-temperature asymptote {asym:.17g} "
        f"(ratio {stats.relative_spread / asym:.4f})",
        f"x_N - x_1 convention: mean {alt.mean:.17g}, dL_rel {alt.relative_spread:.17g}",
        f"dE/E = {chain_mod.energy_fluctuation(gibbs):.6g}",
        "residuals: " + ", ".join(f"{k} {v:.2e}" for k, v in basis.residuals.items()),
    ):
        out.diag(text)
    return EXIT_OK


def cmd_verify(args, out: _Out) -> int:
    from .verify import run_all

    checks = run_all()
    for c in checks:
        out.info(c.line())
    failed = [c for c in checks if c.status == "FAIL"]
    passed = sum(c.status == "PASS" for c in checks)
    out.info(f"{passed} passed, {len(failed)} failed, {sum(c.status == 'INFO' for c in checks)} informational")
    return EXIT_VALIDATION if failed else EXIT_OK


COMMANDS = {"packet": cmd_packet, "evolve": cmd_evolve, "scan": cmd_scan, "chain": cmd_chain}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mepack", description="Maximum-entropy packet toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("packet", "evolve", "scan", "chain", "verify"):
        p = sub.add_parser(name)
        p.add_argument("--config", metavar="PATH", required=name != "verify")
        p.add_argument("--out", metavar="PATH")
        p.add_argument("--seed", type=int, metavar="N")
        p.add_argument("--quiet", action="store_true")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_PARSE
    out = _Out(args.quiet)
    try:
        if args.command == "verify":
            return cmd_verify(args, out)
        cfg = load(args.config, args.command)
        return COMMANDS[args.command](cfg, args, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValidationError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
