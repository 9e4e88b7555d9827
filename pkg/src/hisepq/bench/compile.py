"""Lower a CircuitIR to instructions, and the analytical 32-bit baseline models."""

from __future__ import annotations

from collections import OrderedDict, defaultdict
from dataclasses import dataclass, field
from typing import Callable

from .. import isa
from ..errors import CompileError, UnsupportedGate
from ..isa import WINDOW, Bank, BundleOp, Pair, QReg
from .circuits import CircuitIR, Gate

SMSO_SPAN = 8
QUASAR_WINDOW = 32
QUASAR_ADDRESSING = 3  # 32-bit instructions per 32-qubit group
QV_ADDRESSING = 4
TIMING_PER_GROUP = 1


@dataclass
class CompiledProgram:
    """``body`` encodes the circuit; ``epilogue`` is the optional shot loop and END.

    ``start_delay`` is the smallest initial cursor that keeps every bundle's
    time point at or after its fetch cycle; run the program with at least that
    (exactly that when it has a shot loop, whose wait is sized for it).
    """

    body: list[isa.Instruction]
    epilogue: list[isa.Instruction] = field(default_factory=list)
    prologue: list[isa.Instruction] = field(default_factory=list)
    memory_init: dict[int, int] = field(default_factory=dict)
    start_delay: int = 0

    @property
    def instructions(self) -> list[isa.Instruction]:
        return self.prologue + self.body + self.epilogue

    @property
    def size_bits(self) -> int:
        """Program-size metric: the circuit body (or the lone END of an empty circuit)."""
        if not self.body:
            return isa.program_size_bits(self.epilogue[-1:])
        return isa.program_size_bits(self.body)

    @property
    def n_instructions(self) -> int:
        return len(self.body) if self.body else min(1, len(self.epilogue))

    def image(self, n_qubits: int, shots: int = 1, top_m: int = 0) -> isa.ProgramImage:
        return isa.ProgramImage.from_instructions(self.instructions, n_qubits=n_qubits, shots=shots, top_m=top_m)


class _RegisterFile:
    """LRU allocation of the eight registers of each bank, keyed by content."""

    def __init__(self):
        self.live: dict[Bank, OrderedDict[tuple[int, int], int]] = {b: OrderedDict() for b in Bank}

    def lookup(self, bank: Bank, key: tuple[int, int]) -> tuple[int, bool]:
        """Return (register index, already loaded)."""
        live = self.live[bank]
        if key in live:
            live.move_to_end(key)
            return live[key], True
        if len(live) < 8:
            index = len(live)
        else:
            _, index = live.popitem(last=False)
        live[key] = index
        return index, False


def _gate_ids(gates) -> dict[str, isa.GateInfo]:
    return {g.name: g for g in gates}


def _single_op(offset: int, positions: list[int]) -> tuple[Bank, int, Callable]:
    lo, hi = positions[0], positions[-1]
    if hi - lo < SMSO_SPAN:
        mask = sum(1 << (p - lo) for p in positions)
        return Bank.S, mask << lo, lambda r: isa.Smso(r, offset, mask, lo)
    mask = sum(1 << p for p in positions)
    return Bank.SL, mask, lambda r: isa.Smsol(r, offset, mask)


def _pair_op(offset: int, pairs: list[tuple[int, int]]) -> tuple[Bank, int, Callable]:
    if len(pairs) == 1:
        (src, tgt), = pairs
        payload = 1 << 14 | src << 7 | tgt
        return Bank.T, payload, lambda r: isa.Sito(r, offset, src, tgt)
    slots = tuple(Pair(True, s, t) for s, t in pairs)
    payload = 0
    for k, (_, s, t) in enumerate(slots):
        payload |= (1 << 14 | s << 7 | t) << (isa.PAIR_BITS * k)
    return Bank.TL, payload, lambda r: isa.Sitol(r, offset, slots)


def layer_ops(layer: list[Gate], gates: dict[str, isa.GateInfo]) -> list[tuple[int, Bank, int, int, Callable]]:
    """Group one layer into (gate_id, bank, offset, payload, make_setter) operations."""
    singles: dict[tuple[int, int], list[int]] = defaultdict(list)
    doubles: dict[tuple[int, int], list[tuple[int, int]]] = defaultdict(list)
    for g in layer:
        info = gates.get(g.kind)
        if info is None:
            raise UnsupportedGate(f"gate {g.kind!r} is not in the gate table")
        if info.arity != g.arity:
            raise CompileError(f"{g.kind} has arity {info.arity}, IR gives {g.qubits}")
        if g.arity == 1:
            q = g.qubits[0]
            singles[info.gate_id, q // WINDOW].append(q % WINDOW)
        else:
            a, b = g.qubits
            if a // WINDOW != b // WINDOW:
                raise CompileError(f"{g.kind}{g.qubits} spans two {WINDOW}-qubit windows")
            doubles[info.gate_id, a // WINDOW].append((a % WINDOW, b % WINDOW))
    ops = []
    for (gid, offset), positions in sorted(singles.items()):
        positions.sort()
        bank, payload, make = _single_op(offset, positions)
        ops.append((gid, bank, offset, payload, make))
    for (gid, offset), pairs in sorted(doubles.items()):
        pairs.sort()
        for i in range(0, len(pairs), isa.MAX_PAIRS):
            bank, payload, make = _pair_op(offset, pairs[i : i + isa.MAX_PAIRS])
            ops.append((gid, bank, offset, payload, make))
    return ops


def _body_timing(body: list[isa.Instruction]) -> tuple[int, int]:
    """(lead, duration): lead is max(fetch cycle - time point) over bundles, both
    counted from the first body instruction; duration is the cursor advance."""
    cursor = lead = 0
    for i, instr in enumerate(body):
        if isinstance(instr, isa.Qwait):
            cursor += instr.imm
        elif isinstance(instr, isa.QBundle):
            cursor += instr.pi
            lead = max(lead, i - cursor)
    return lead, cursor


def compile_hisepq(circuit: CircuitIR, *, layer_interval: int = 1, shots: int | None = None,
                   top_m: int = 0, measure_latency: int = 0, gates=isa.DEFAULT_GATES) -> CompiledProgram:
    """Compile layer by layer.

    Same-kind single-qubit gates of a layer share one mask register per window
    (SMSO when they fit eight consecutive positions, SMSOL otherwise); two-qubit
    gates are packed seven pairs per SITOL (SITO for a lone pair).  A register
    already holding the wanted content is reused.  Operations go out two per
    QBUNDLE; the first bundle of each layer waits ``layer_interval`` cycles and
    the rest of the layer shares its time point.

    With ``shots`` the body is wrapped in a loop that accumulates each shot
    with SRA and finally copies the histogram to memory address 0 with FHR.
    Each pass spins until the shot's last time point (plus ``measure_latency``)
    has passed, so SRA sees this shot's results, and then pads the cursor with
    QWAIT so it advances exactly one pass length; ``top_m`` keeps a pass longer
    than the sorter latency.
    """
    if circuit.n_qubits > isa.MAX_QUBITS:
        raise CompileError(f"{circuit.n_qubits} qubits exceed the addressable {isa.MAX_QUBITS}")
    if layer_interval < 0:
        raise CompileError("layer_interval must be non-negative")
    table = _gate_ids(gates)
    regs = _RegisterFile()
    body: list[isa.Instruction] = []
    pending = 0
    for layer in circuit.layers:
        pending += layer_interval
        ops = layer_ops(layer, table)
        if not ops:
            continue
        for i in range(0, len(ops), 2):
            bundle = []
            for gid, bank, offset, payload, make in ops[i : i + 2]:
                index, loaded = regs.lookup(bank, (offset, payload))
                if not loaded:
                    body.append(make(index))
                bundle.append(BundleOp(gid, QReg(bank, index)))
            if pending > 7:
                body.append(isa.Qwait(pending))
                pending = 0
            body.append(isa.QBundle(pending, tuple(bundle)))
            pending = 0
    lead, duration = _body_timing(body)
    prog = CompiledProgram(body, start_delay=lead)
    if shots is None:
        prog.epilogue = [isa.End()]
        return prog
    if shots < 1:
        raise CompileError("shots must be positive")
    # R1 counts remaining shots, R2 holds the constant 1, R3 the spin count.
    prog.prologue = [isa.Load(1, 0, 0), isa.Load(2, 0, 4)]
    prog.start_delay = lead + len(prog.prologue)
    # One spin iteration is three cycles; SRA must come after the last time point.
    spins = max(1, -(-(lead + duration + measure_latency - len(body)) // 3))
    # pass = body + LOAD + 3*spins + SRA + QWAIT + SUB + CMP + BR
    spins = max(spins, -(-(top_m + 2 - len(body) - 6) // 3))
    pass_cycles = len(body) + 3 * spins + 6
    prog.memory_init = {0: shots, 4: 1, 8: spins}
    back = -(len(isa.encode_program(body)) + 8)  # from BR to the first body word
    prog.epilogue = [
        isa.Load(3, 0, 8),
        isa.Alu(isa.AluOp.SUB, 3, 3, 2),
        isa.Cmp(3, 0),
        isa.Br(isa.Flag.NE, -2),
        isa.Sra(),
        isa.Qwait(pass_cycles - duration),
        isa.Alu(isa.AluOp.SUB, 1, 1, 2),
        isa.Cmp(1, 0),
        isa.Br(isa.Flag.NE, back),
        isa.Fhr(0),
        isa.End(),
    ]
    return prog


@dataclass(frozen=True)
class BaselineCost:
    instructions: int
    bits: int


def _groups(qubits: list[int], width: int) -> int:
    """Greedy cover of sorted qubit indices by windows of ``width`` consecutive qubits."""
    count = 0
    end = -1
    for q in sorted(qubits):
        if q >= end:
            count += 1
            end = q + width
    return count


def _window_model(circuit: CircuitIR, addressing: int) -> BaselineCost:
    total = 0
    for layer in circuit.layers:
        by_kind: dict[str, list[int]] = defaultdict(list)
        for g in layer:
            by_kind[g.kind].extend(g.qubits)
        for qubits in by_kind.values():
            total += _groups(qubits, QUASAR_WINDOW) * (addressing + TIMING_PER_GROUP)
    return BaselineCost(total, total * isa.WORD_BITS)


def compile_quasar_model(circuit: CircuitIR) -> BaselineCost:
    """Fixed-width 32-bit baseline: for every layer and gate kind, each 32-qubit
    group costs three addressing/operation instructions plus one timing
    instruction.  Two-qubit gates are priced over the qubits they touch."""
    return _window_model(circuit, QUASAR_ADDRESSING)


def compile_qv_model(circuit: CircuitIR) -> BaselineCost:
    """Coarse model of the second baseline: four instructions per 32-qubit group plus timing."""
    return _window_model(circuit, QV_ADDRESSING)
