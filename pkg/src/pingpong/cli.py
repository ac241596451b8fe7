"""Command-line interface: ``pingpong {exact,simulate,sweep,verify}``.

Settings are resolved as built-in defaults, then an optional JSON file given
with ``--config``, then explicit flags. Exit codes: 0 success, 1 usage or
configuration error, 2 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, fields
from typing import Optional

from . import analysis, checks
from .attack import ATTACK_KINDS, AttackVariant
from .kernels import BACKEND
from .protocol import LOSS_LEGS, ChannelConfig, ProtocolConfig, binomial_sigma, run_session

EXIT_OK, EXIT_USAGE, EXIT_VERIFY = 0, 1, 2
COMMANDS = ("exact", "simulate", "sweep", "verify")
CSV_HEADER = ("eta", "variant", "f_star", "I_AE_eff", "I_AB_eff", "induced_loss")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str = "exact"
    variant: str = "improved"
    symmetrize: bool = False
    eta: float = 1.0
    rounds: int = 100_000
    seed: int = 0
    control_probability: float = 0.5
    two_basis: bool = False
    attack_fraction: float = 1.0
    loss_leg: str = "outbound"
    eta_start: float = 0.0
    eta_stop: float = 1.0
    eta_steps: int = 101
    suite: str = "all"
    workers: int = 1
    compare_oracle: bool = False
    output: Optional[str] = None

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.variant not in ATTACK_KINDS:
            raise UsageError(f"variant must be one of {ATTACK_KINDS}")
        if self.symmetrize and self.variant == "none":
            raise UsageError("--symmetrize needs an attack variant")
        for name in ("eta", "control_probability", "attack_fraction", "eta_start", "eta_stop"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise UsageError(f"{name} must lie in [0, 1], got {v}")
        if self.rounds < 1 or self.eta_steps < 1 or self.workers < 1:
            raise UsageError("rounds, eta_steps and workers must be >= 1")
        if self.loss_leg not in LOSS_LEGS:
            raise UsageError(f"loss_leg must be one of {LOSS_LEGS}")
        if self.suite not in ("all",) + checks.SUITES:
            raise UsageError(f"suite must be one of {('all',) + checks.SUITES}")

    @property
    def attack(self) -> AttackVariant:
        return AttackVariant(self.variant, self.symmetrize)


def load_config_file(path: str) -> dict:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise UsageError("config file must hold a JSON object")
    raw = dict(raw)
    grid = raw.pop("eta_grid", None)
    if grid is not None:
        if not isinstance(grid, dict):
            raise UsageError("eta_grid must be an object with start/stop/steps")
        for key in ("start", "stop", "steps"):
            if key in grid:
                raw[f"eta_{key}"] = grid[key]
    known = {f.name for f in fields(RunConfig)}
    unknown = set(raw) - known
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return raw


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    defaults = RunConfig()
    parser = _Parser(prog="pingpong", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="JSON file with RunConfig fields (flags override it)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--variant", choices=ATTACK_KINDS, default=None,
                       help=f"attack variant (default {defaults.variant})")
        p.add_argument("--symmetrize", action="store_true", default=None,
                       help="Eve applies S_ty on a fair coin after the return-leg attack")
        p.add_argument("--output", "-o", default=None, help="write JSON/CSV here")

    p = sub.add_parser("exact", help="exact distributions and information measures")
    common(p)
    p.add_argument("--compare-oracle", action="store_true", default=None,
                   help="also measure the closed-form return-leg oracle states")

    p = sub.add_parser("simulate", help="Monte Carlo protocol session")
    common(p)
    p.add_argument("--eta", type=float, default=None, help=f"channel transmission (default {defaults.eta})")
    p.add_argument("--rounds", type=int, default=None, help=f"rounds (default {defaults.rounds})")
    p.add_argument("--seed", type=int, default=None, help=f"RNG seed (default {defaults.seed})")
    p.add_argument("--control-probability", type=float, default=None,
                   help=f"P(control mode) (default {defaults.control_probability})")
    p.add_argument("--two-basis", action="store_true", default=None, help="random z/x control basis")
    p.add_argument("--attack-fraction", type=float, default=None,
                   help=f"fraction of rounds Eve attacks (default {defaults.attack_fraction})")
    p.add_argument("--loss-leg", choices=LOSS_LEGS, default=None,
                   help=f"which traversal is lossy without Eve (default {defaults.loss_leg})")
    p.add_argument("--workers", type=int, default=None, help="worker processes (default 1)")

    p = sub.add_parser("sweep", help="eta sweep of attackable fraction and effective information (CSV)")
    p.add_argument("--symmetrize", action="store_true", default=None)
    p.add_argument("--eta-start", type=float, default=None, help=f"default {defaults.eta_start}")
    p.add_argument("--eta-stop", type=float, default=None, help=f"default {defaults.eta_stop}")
    p.add_argument("--eta-steps", type=int, default=None, help=f"default {defaults.eta_steps}")
    p.add_argument("--output", "-o", default=None, help="CSV path (default stdout)")

    p = sub.add_parser("verify", help="run the invariant and oracle checks")
    p.add_argument("--suite", choices=("all",) + checks.SUITES, default=None, help="default all")
    p.add_argument("--rounds", type=int, default=None, help="Monte Carlo rounds per check")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--output", "-o", default=None, help="write a JSON report here")
    return parser


def resolve_config(argv) -> RunConfig:
    args = build_parser().parse_args(argv)
    values = load_config_file(args.config) if args.config else {}
    for key, value in vars(args).items():
        if key != "config" and value is not None:
            values[key] = value
    try:
        cfg = RunConfig(**values)
    except TypeError as exc:
        raise UsageError(str(exc)) from exc
    cfg.validate()
    return cfg


# --------------------------------------------------------------------------
# Formatting


def num(x: float) -> str:
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return f"{x:.15g}"


def _key(v) -> str:
    return "-" if v is None else str(v)


def format_joint(joint: analysis.JointDistribution) -> list[str]:
    lines = ["  j k m  p_jkm"]
    for (j, k, m), p in sorted(joint.table().items(), key=lambda kv: tuple(map(str, kv[0]))):
        if p > 1e-15:
            lines.append(f"  {_key(j)} {_key(k)} {_key(m)}  {num(p)}")
    return lines


def _report_dict(variant: AttackVariant) -> dict:
    joint = analysis.exact_joint(variant)
    rep = analysis.info_report(variant)
    return {
        "variant": variant.kind,
        "symmetrize": variant.symmetrize,
        "p_jkm": {",".join(map(_key, key)): p for key, p in sorted(
            joint.table().items(), key=lambda kv: tuple(map(str, kv[0]))) if p > 1e-15},
        **asdict(rep),
    }


def cmd_exact(cfg: RunConfig, out) -> int:
    v = cfg.attack
    joint = analysis.exact_joint(v)
    rep = analysis.info_report(v)
    print(f"exact analysis: variant={v.kind} symmetrize={v.symmetrize}", file=out)
    print("\n".join(format_joint(joint)), file=out)
    for name in ("I_AE", "I_AB", "I_BE", "qber", "induced_loss", "detection_z", "detection_two_basis"):
        print(f"{name:20s} {num(getattr(rep, name))}", file=out)
    payload = _report_dict(v)
    if cfg.compare_oracle:
        pub = analysis.oracle_joint(v.symmetrize)
        print("\nmeasuring the closed-form return-leg oracle states instead:", file=out)
        print("\n".join(format_joint(pub)), file=out)
        pub_info = {pair: analysis.mutual_information(pub, pair) for pair in ("AE", "AB", "BE")}
        for pair, value in pub_info.items():
            print(f"I_{pair:18s} {num(value)}", file=out)
        print(f"{'qber':20s} {num(analysis.qber(pub))}", file=out)
        tv = joint.total_variation(pub)
        print(f"total variation (engine vs oracle) {num(tv)}", file=out)
        payload["oracle"] = {f"I_{k}": v for k, v in pub_info.items()}
        payload["oracle"]["qber"] = analysis.qber(pub)
        payload["oracle"]["total_variation"] = tv
    if cfg.output:
        _write_json(cfg.output, payload)
    return EXIT_OK


def _rate_line(name: str, k: int, n: int) -> str:
    if not n:
        return f"{name:28s} n/a (0 rounds)"
    p = k / n
    return f"{name:28s} {num(p)} +/- {num(binomial_sigma(p, n))}  ({k}/{n})"


def cmd_simulate(cfg: RunConfig, out) -> int:
    pconf = ProtocolConfig(
        control_probability=cfg.control_probability,
        attack=cfg.attack,
        attack_fraction=cfg.attack_fraction,
        two_basis_control=cfg.two_basis,
        rounds=cfg.rounds,
        seed=cfg.seed,
    )
    channel = ChannelConfig(cfg.eta, cfg.loss_leg)
    stats = run_session(pconf, channel, workers=cfg.workers)
    print(f"simulation: variant={cfg.attack} eta={num(cfg.eta)} rounds={cfg.rounds} seed={cfg.seed} "
          f"control_probability={num(cfg.control_probability)} two_basis={cfg.two_basis} "
          f"attack_fraction={num(cfg.attack_fraction)}", file=out)
    print(f"control rounds {stats.control_rounds}, message rounds {stats.message_rounds}, "
          f"attacked {stats.attacked}, photons lost {stats.photon_lost}", file=out)
    print(_rate_line("control photon-found rate", stats.photons_found, stats.control_rounds), file=out)
    print(_rate_line("control detection rate", stats.detections, stats.control_rounds), file=out)
    for b in sorted(stats.control_by_basis):
        print(_rate_line(f"  detection rate ({b} basis)", stats.detections_by_basis[b],
                         stats.control_by_basis[b]), file=out)
    decoded = sum(n for (_, _, m, _), n in stats.joint.items() if m != "loss")
    errors = sum(n for (j, _, m, _), n in stats.joint.items() if m != "loss" and m != j)
    print(_rate_line("message error rate (QBER)", errors, decoded), file=out)
    if stats.message_rounds:
        emp = analysis.JointDistribution.from_counts(stats.joint)
        print("empirical joint:", file=out)
        print("\n".join(format_joint(emp)), file=out)
        if cfg.eta == 1.0 and cfg.attack_fraction == 1.0:
            tv = analysis.exact_joint(cfg.attack).total_variation(emp)
            print(f"total variation vs exact {num(tv)}", file=out)
    if cfg.output:
        payload = {"config": asdict(cfg), **stats.to_dict()}
        _write_json(cfg.output, payload)
    return EXIT_OK


def sweep_csv(cfg: RunConfig) -> str:
    grid = analysis.eta_grid(cfg.eta_start, cfg.eta_stop, cfg.eta_steps)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in analysis.sweep(grid, symmetrize=cfg.symmetrize):
        writer.writerow([num(r.eta), r.variant, num(r.f_star), num(r.I_AE_eff), num(r.I_AB_eff),
                         num(r.induced_loss)])
    return buf.getvalue()


def cmd_sweep(cfg: RunConfig, out) -> int:
    text = sweep_csv(cfg)
    if cfg.output:
        _write_text(cfg.output, text)
    else:
        out.write(text)
    return EXIT_OK


def cmd_verify(cfg: RunConfig, out) -> int:
    suites = checks.SUITES if cfg.suite == "all" else (cfg.suite,)
    results = checks.run_checks(suites, rounds=cfg.rounds, seed=cfg.seed)
    print(f"kernel backend: {BACKEND}", file=out)
    for c in results:
        print(f"[{c.suite}] {c.line()}", file=out)
    failed = [c for c in results if not c.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed", file=out)
    if cfg.output:
        _write_json(cfg.output, {"checks": [asdict(c) for c in results]})
    return EXIT_VERIFY if failed else EXIT_OK


def _write_json(path: str, payload) -> None:
    _write_text(path, json.dumps(payload, indent=2, sort_keys=True, default=str) + "\n")


def _write_text(path: str, text: str) -> None:
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc}") from exc


HANDLERS = {"exact": cmd_exact, "simulate": cmd_simulate, "sweep": cmd_sweep, "verify": cmd_verify}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    try:
        cfg = resolve_config(argv)
        return HANDLERS[cfg.command](cfg, out)
    except UsageError as exc:
        print(f"pingpong: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"pingpong: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
