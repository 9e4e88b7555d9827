"""Program-size comparison grid and its CSV form."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Sequence

from .circuits import CircuitIR, gen_grover_operator, gen_synthetic
from .compile import compile_hisepq, compile_quasar_model, compile_qv_model

HISEPQ = "HiSEP-Q"
QUASAR = "QUASAR"
QV = "qV"
DEFAULT_QUBITS = (8, 16, 32, 64, 96, 100)
SYNTHETIC_DEPTH = 20
SUITES = {
    "go": ("GO",),
    "syn10": ("Syn_10",),
    "syn50": ("Syn_50",),
    "syn100": ("Syn_100",),
    "all": ("GO", "Syn_10", "Syn_50", "Syn_100"),
}
_DENSITY = {"Syn_10": 0.1, "Syn_50": 0.5, "Syn_100": 1.0}
CSV_FIELDS = ("benchmark", "isa", "n_qubits", "instructions", "bits", "reduction_pct")


@dataclass(frozen=True)
class SizeRow:
    benchmark: str
    isa: str
    n_qubits: int
    instructions: int
    bits: int
    reduction_pct: float | None = None  # against the QUASAR row of the same point


@dataclass
class SizeReport:
    rows: list[SizeRow]
    root_seed: int
    skipped: list[tuple[str, int, str]]

    def lookup(self, benchmark: str, isa: str, n_qubits: int) -> SizeRow:
        for r in self.rows:
            if (r.benchmark, r.isa, r.n_qubits) == (benchmark, isa, n_qubits):
                return r
        raise KeyError((benchmark, isa, n_qubits))

    def to_csv(self) -> str:
        return report_to_csv(self)


def benchmark_seed(root_seed: int, benchmark: str, n_qubits: int) -> int:
    """Per-point seed so every grid point is reproducible on its own."""
    density = round(_DENSITY.get(benchmark, 0) * 100)
    return root_seed + 1000 * density + n_qubits


def build_circuit(benchmark: str, n_qubits: int, root_seed: int = 0, depth: int = SYNTHETIC_DEPTH) -> CircuitIR:
    if benchmark == "GO":
        return gen_grover_operator(n_qubits)
    if benchmark in _DENSITY:
        return gen_synthetic(n_qubits, depth, _DENSITY[benchmark], benchmark_seed(root_seed, benchmark, n_qubits))
    raise ValueError(f"unknown benchmark {benchmark!r}")


def measure_point(benchmark: str, n_qubits: int, root_seed: int = 0, include_qv: bool = False,
                  depth: int = SYNTHETIC_DEPTH) -> list[SizeRow]:
    circ = build_circuit(benchmark, n_qubits, root_seed, depth)
    ours = compile_hisepq(circ)
    quasar = compile_quasar_model(circ)
    reduction = 100.0 * (1 - ours.size_bits / quasar.bits) if quasar.bits else 0.0
    rows = [
        SizeRow(benchmark, HISEPQ, n_qubits, ours.n_instructions, ours.size_bits, reduction),
        SizeRow(benchmark, QUASAR, n_qubits, quasar.instructions, quasar.bits),
    ]
    if include_qv:
        qv = compile_qv_model(circ)
        rows.append(SizeRow(benchmark, QV, n_qubits, qv.instructions, qv.bits))
    return rows


def report(benchmarks: Iterable[str] = SUITES["all"], qubits: Sequence[int] = DEFAULT_QUBITS,
           root_seed: int = 0, include_qv: bool = False, depth: int = SYNTHETIC_DEPTH) -> SizeReport:
    """Rows for every (benchmark, n) point.  Synthetic points whose density selects
    no qubit (e.g. 10% of 8) are skipped and listed in ``skipped``."""
    rows: list[SizeRow] = []
    skipped = []
    for bench in benchmarks:
        for n in qubits:
            try:
                rows.extend(measure_point(bench, n, root_seed, include_qv, depth))
            except ValueError as exc:
                skipped.append((bench, n, str(exc)))
    return SizeReport(rows, root_seed, skipped)


def report_to_csv(rep: SizeReport) -> str:
    buf = io.StringIO()
    buf.write(f"# root_seed={rep.root_seed}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for r in rep.rows:
        pct = "" if r.reduction_pct is None else f"{r.reduction_pct:.2f}"
        writer.writerow([r.benchmark, r.isa, r.n_qubits, r.instructions, r.bits, pct])
    return buf.getvalue()


def read_report_csv(text: str) -> list[SizeRow]:
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    out = []
    for rec in csv.DictReader(lines):
        pct = rec["reduction_pct"]
        out.append(SizeRow(rec["benchmark"], rec["isa"], int(rec["n_qubits"]), int(rec["instructions"]),
                           int(rec["bits"]), float(pct) if pct else None))
    return out
