"""``hisepq`` command-line tool.

Exit codes: 0 success, 1 user error (bad input, bad arguments), 2 the
simulation stopped with an error status.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

from . import asm, histogram, isa
from .bench.report import DEFAULT_QUBITS, SUITES, SYNTHETIC_DEPTH, report
from .core import (
    BernoulliSource,
    DistributionSource,
    GateOpLUT,
    RunStatus,
    SimConfig,
    Simulator,
    trace_to_csv,
)
from .errors import HisepqError

SEED_ENV = "HISEPQ_SEED"


class UserError(Exception):
    pass


@dataclass
class RunConfig:
    """JSON run configuration; unknown keys are rejected."""

    n_qubits: int = isa.WINDOW
    shots: int = 100
    top_m: int = 4
    seed: int = 0
    fifo_depth: int = 64
    timing_depth: int = 64
    start_delay: int = 16
    measure_latency: int = 0
    memory_size: int = 4096
    memory_init: dict = field(default_factory=dict)
    max_cycles: int = 10_000_000
    measurement: dict = field(default_factory=lambda: {"kind": "bernoulli", "p": 0.0})
    lut: dict | None = None

    def __post_init__(self):
        if not 1 <= self.n_qubits <= isa.MAX_QUBITS:
            raise UserError(f"n_qubits must be in [1, {isa.MAX_QUBITS}]")
        if not 0 <= self.top_m <= self.shots:
            raise UserError(f"top_m ({self.top_m}) must not exceed shots ({self.shots})")

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise UserError(f"unknown config keys: {', '.join(sorted(extra))}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UserError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(data)

    def sim_config(self) -> SimConfig:
        return SimConfig(
            n_qubits=self.n_qubits, shots=self.shots, top_m=self.top_m, seed=self.seed,
            fifo_depth=self.fifo_depth, timing_depth=self.timing_depth, start_delay=self.start_delay,
            measure_latency=self.measure_latency, memory_size=self.memory_size,
            memory_init={int(k): int(v) for k, v in self.memory_init.items()}, max_cycles=self.max_cycles,
        )

    def measurement_source(self):
        model = self.measurement
        kind = model.get("kind", "bernoulli")
        if kind == "bernoulli":
            return BernoulliSource(model.get("p", 0.0), self.seed)
        if kind == "table":
            states = {int(k, 0) if isinstance(k, str) else int(k): float(v) for k, v in model["states"].items()}
            return DistributionSource(states, self.seed)
        raise UserError(f"unknown measurement kind {kind!r}")


def _env_seed() -> int | None:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return None
    try:
        return int(raw, 0)
    except ValueError:
        raise UserError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _read_text(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UserError(f"cannot read {path}: {exc}") from exc


def _load_image(path) -> isa.ProgramImage:
    try:
        return isa.ProgramImage.load(path)
    except OSError as exc:
        raise UserError(f"cannot read {path}: {exc}") from exc


def cmd_asm(args) -> int:
    image = asm.assemble(_read_text(args.source))
    image.save(args.output)
    print(f"{args.output}: {len(image.words)} words, {image.size_bits} bits")
    return 0


def cmd_disasm(args) -> int:
    sys.stdout.write(asm.disassemble(_load_image(args.image)))
    return 0


def cmd_run(args) -> int:
    image = _load_image(args.image)
    if args.config:
        cfg = RunConfig.load(args.config)
    else:
        cfg = RunConfig(n_qubits=image.n_qubits, shots=max(image.shots, 1), top_m=min(image.top_m, max(image.shots, 1)))
    seed = _env_seed()
    if seed is not None:
        cfg.seed = seed
    lut = GateOpLUT.from_config(cfg.lut) if cfg.lut else GateOpLUT.default()
    sim = Simulator(image, cfg.sim_config(), measurement=cfg.measurement_source(), lut=lut)
    status = sim.run()
    if args.trace:
        Path(args.trace).write_text(f"# root_seed={cfg.seed}\n" + trace_to_csv(sim.trace))
    if args.histogram:
        entries = sim.histogram.top_m_entries()
        Path(args.histogram).write_text(f"# root_seed={cfg.seed}\n" + histogram.to_csv(entries, cfg.n_qubits))
    if args.fhr and sim.last_fhr:
        addr, size = sim.last_fhr
        Path(args.fhr).write_bytes(bytes(sim.memory[addr : addr + size]))
    print(f"root_seed={cfg.seed} cycles={sim.clock} pulses={len(sim.trace)} shots={sim.shot_index}")
    if status is RunStatus.ERROR:
        print(f"error: {sim.error}", file=sys.stderr)
        return 2
    return 0


def _parse_qubits(text: str) -> list[int]:
    try:
        values = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UserError(f"--qubits wants a comma-separated list of integers, got {text!r}") from None
    if not values or any(not 1 <= n <= isa.MAX_QUBITS for n in values):
        raise UserError(f"qubit counts must lie in [1, {isa.MAX_QUBITS}]")
    return values


def cmd_bench(args) -> int:
    seed = _env_seed()
    root_seed = args.seed if seed is None else seed
    rep = report(SUITES[args.suite], _parse_qubits(args.qubits), root_seed,
                 include_qv=args.qv, depth=args.depth)
    text = rep.to_csv()
    if args.csv:
        Path(args.csv).write_text(text)
    else:
        sys.stdout.write(text)
    for bench, n, why in rep.skipped:
        print(f"skipped {bench} at {n} qubits: {why}", file=sys.stderr)
    return 0


def cmd_histo_demo(args) -> int:
    if args.dist:
        n, dist = histogram.load_distribution(args.dist)
    else:
        n, dist = None, histogram.gaussian_distribution()
    seed = _env_seed()
    seed = args.seed if seed is None else seed
    if not 0 <= args.topm <= args.shots:
        raise UserError("--topm must lie in [0, --shots]")
    res = histogram.run_demo(dist, args.shots, args.topm, seed, n_qubits=n)
    n_qubits = res.transmission.n_qubits
    print(f"# root_seed={seed}")
    print(f"last update at cycle {res.last_update}, top-{args.topm} visible at cycle {res.visible_at}")
    sys.stdout.write(histogram.to_csv(res.top, n_qubits))
    t = res.transmission
    print(f"transmission: {t.baseline_bytes:g} bytes raw, {t.ours_bytes:g} bytes top-M, {100 * t.ratio:.2f}% saved")
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # Usage mistakes are user errors (exit 1); exit 2 is kept for simulation failures.
        self.print_help(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hisepq", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("asm", help="assemble source text into a binary image")
    a.add_argument("source")
    a.add_argument("-o", "--output", required=True)
    a.set_defaults(func=cmd_asm)

    d = sub.add_parser("disasm", help="print the canonical source of a binary image")
    d.add_argument("image")
    d.set_defaults(func=cmd_disasm)

    r = sub.add_parser("run", help="simulate a binary image")
    r.add_argument("image")
    r.add_argument("--config")
    r.add_argument("--trace", help="pulse trace CSV output")
    r.add_argument("--histogram", help="top-M histogram CSV output")
    r.add_argument("--fhr", help="write the last FHR record block to this file")
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("bench", help="program-size comparison")
    b.add_argument("--suite", choices=sorted(SUITES), default="all")
    b.add_argument("--qubits", default=",".join(map(str, DEFAULT_QUBITS)))
    b.add_argument("--csv")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--depth", type=int, default=SYNTHETIC_DEPTH)
    b.add_argument("--qv", action="store_true", help="add the coarse qV baseline rows")
    b.set_defaults(func=cmd_bench)

    h = sub.add_parser("histo-demo", help="top-M histogram on a sampled distribution")
    h.add_argument("--dist", help="distribution JSON (default: discrete Gaussian over 8 states)")
    h.add_argument("--shots", type=int, default=100)
    h.add_argument("--topm", type=int, default=4)
    h.add_argument("--seed", type=int, default=0)
    h.set_defaults(func=cmd_histo_demo)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UserError, HisepqError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
