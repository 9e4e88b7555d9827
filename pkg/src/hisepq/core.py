"""Cycle-level model of the hybrid processing core.

One instruction (short or long) is fetched and executed per cycle.  Quantum
timing uses a scheduling cursor: QWAIT/QWAITR and the bundle pre-interval
advance it, and each QBUNDLE is stamped with the cursor value.  The cursor
starts ``start_delay`` cycles ahead of the fetch clock; programs must keep it
ahead, otherwise a FIFO head falls into the past and the run stops with
``MissedDeadline``.

Per cycle, in order: fetch/execute, dispatch of the two op buffers into the
per-qubit timed FIFOs, then the time controls issue every FIFO head stamped
with the current cycle.  Measurement results land in the Q-measure register
at the end of the issuing cycle (plus ``measure_latency``), so FMR sees them
from the next cycle on.
"""

from __future__ import annotations

import csv
import io
import random
from array import array
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, NamedTuple, Protocol, Sequence

from . import _kernels, isa
from .errors import AccumulatorFull, DecodeError, FieldOverflow, HisepqError, MemOutOfRange
from .histogram import Histogram, fhr_write
from .isa import WINDOW, Bank, Flag, Pair, ProgramImage

MASK32 = 0xFFFF_FFFF
MEASURE_MICRO = 0xFF


class ErrorKind(Enum):
    SAME_QUBIT_CONFLICT = "SameQubitConflict"
    MISSED_DEADLINE = "MissedDeadline"
    QUEUE_OVERFLOW = "QueueOverflow"
    INVALID_REGISTER_BANK = "InvalidRegisterBank"
    QUBIT_OUT_OF_RANGE = "QubitOutOfRange"
    FIELD_OVERFLOW = "FieldOverflow"
    ILLEGAL_OPCODE = "IllegalOpcode"
    MEM_OUT_OF_RANGE = "MemOutOfRange"
    UNKNOWN_GATE = "UnknownGate"
    ACCUMULATOR_FULL = "AccumulatorFull"
    PC_OUT_OF_RANGE = "PcOutOfRange"
    CYCLE_LIMIT = "CycleLimit"


class RunStatus(Enum):
    RUNNING = "running"
    ENDED = "ended"
    ERROR = "error"


class SimError(HisepqError):
    def __init__(self, kind: ErrorKind, message: str = ""):
        super().__init__(f"{kind.value}: {message}" if message else kind.value)
        self.kind = kind


class Role(Enum):
    SINGLE = "single"
    SOURCE = "source"
    TARGET = "target"


NO_OP, SOURCE, TARGET, SINGLE = 0b00, 0b01, 0b10, 0b11
_ROLE_OF_CODE = {SINGLE: Role.SINGLE, SOURCE: Role.SOURCE, TARGET: Role.TARGET}


class OpVector:
    """Two-bit indicator per qubit: 00 none, 01 source, 10 target, 11 single."""

    __slots__ = ("codes",)

    def __init__(self, n_qubits: int):
        self.codes = bytearray(n_qubits)

    def __len__(self) -> int:
        return len(self.codes)

    def __eq__(self, other) -> bool:
        return isinstance(other, OpVector) and self.codes == other.codes

    def to_int(self) -> int:
        """Pack into a 2N-bit integer, qubit i at bits [2i+1:2i]."""
        value = 0
        for q in range(len(self.codes) - 1, -1, -1):
            value = value << 2 | self.codes[q]
        return value

    def active(self) -> list[tuple[int, int]]:
        return [(q, c) for q, c in enumerate(self.codes) if c]

    def __repr__(self) -> str:
        return f"OpVector({self.active()})"


@dataclass
class QTargetRegister:
    """Payload plus window offset.  S banks hold a window mask (bit k = position k);
    T banks hold packed 15-bit pair slots (tgt[6:0], src[13:7], valid[14])."""

    bank: Bank
    payload: int = 0
    offset: int = 0

    @property
    def width(self) -> int:
        return {Bank.S: 128, Bank.SL: 128, Bank.T: isa.PAIR_BITS, Bank.TL: isa.PAIR_BITS * isa.MAX_PAIRS}[self.bank]

    def pairs(self) -> list[Pair]:
        slots = 1 if self.bank is Bank.T else isa.MAX_PAIRS
        out = []
        for k in range(slots):
            s = self.payload >> (isa.PAIR_BITS * k)
            out.append(Pair(bool(s >> 14 & 1), s >> 7 & 0x7F, s & 0x7F))
        return out


def pack_pairs(pairs: Iterable[Pair]) -> int:
    payload = 0
    for k, (valid, src, tgt) in enumerate(pairs):
        payload |= (int(valid) << 14 | src << 7 | tgt) << (isa.PAIR_BITS * k)
    return payload


def decode_target_register(reg: QTargetRegister, n_qubits: int, window: int = WINDOW, kernels=None) -> OpVector:
    """Expand a target register into its OpVector.

    Raises SimError(FieldOverflow) for window positions >= ``window`` and
    SimError(QubitOutOfRange) when ``offset * window + position`` >= N.
    """
    k = kernels or _kernels
    vec = OpVector(n_qubits)
    base = reg.offset * window
    if not reg.bank.two_qubit:
        mask = reg.payload
        if mask >> window:
            raise SimError(ErrorKind.FIELD_OVERFLOW, f"mask position {mask.bit_length() - 1} >= window {window}")
        if not mask:
            return vec
        status = k.scatter_mask(vec.codes, mask.to_bytes((mask.bit_length() + 7) // 8, "little"), base, SINGLE)
        if status == 1:
            raise SimError(ErrorKind.QUBIT_OUT_OF_RANGE, f"mask at offset {reg.offset} exceeds {n_qubits} qubits")
        return vec
    for valid, src, tgt in reg.pairs():
        if not valid:
            continue
        if src >= window or tgt >= window:
            raise SimError(ErrorKind.FIELD_OVERFLOW, f"pair ({src}->{tgt}) outside window {window}")
        for pos, code in ((src, SOURCE), (tgt, TARGET)):
            q = base + pos
            if q >= n_qubits:
                raise SimError(ErrorKind.QUBIT_OUT_OF_RANGE, f"qubit {q} >= {n_qubits}")
            if vec.codes[q]:
                raise SimError(ErrorKind.SAME_QUBIT_CONFLICT, f"qubit {q} named twice in one register")
            vec.codes[q] = code
    return vec


class GateEntry(NamedTuple):
    name: str
    micro: int
    arity: int
    is_measure: bool = False


class GateOpLUT:
    """gate_id -> micro-code, arity and measure flag."""

    def __init__(self, entries: dict[int, GateEntry]):
        for gid, e in entries.items():
            if not 0 <= gid < 128 or not 0 <= e.micro < 256 or e.arity not in (1, 2):
                raise ValueError(f"bad LUT entry {gid}: {e}")
            if e.micro == MEASURE_MICRO and not e.is_measure:
                raise ValueError(f"micro-code {MEASURE_MICRO:#x} is reserved for measurement")
        self.entries = dict(entries)
        self.measure_micros = {e.micro for e in entries.values() if e.is_measure}

    @classmethod
    def default(cls) -> "GateOpLUT":
        entries = {}
        for g in isa.DEFAULT_GATES:
            measure = g.name == "MEASURE"
            entries[g.gate_id] = GateEntry(g.name, MEASURE_MICRO if measure else g.gate_id, g.arity, measure)
        return cls(entries)

    @classmethod
    def from_config(cls, table: dict) -> "GateOpLUT":
        """``{"X": {"id": 1, "micro": "0x01", "arity": 1}, "MEASURE": {...,"measure": true}}``"""
        entries = {}
        for name, entry in table.items():
            micro = entry["micro"]
            micro = int(micro, 0) if isinstance(micro, str) else micro
            entries[int(entry["id"])] = GateEntry(name, micro, int(entry.get("arity", 1)), bool(entry.get("measure", False)))
        return cls(entries)

    def __getitem__(self, gate_id: int) -> GateEntry:
        try:
            return self.entries[gate_id]
        except KeyError:
            raise SimError(ErrorKind.UNKNOWN_GATE, f"gate id {gate_id} not in LUT") from None

    def gates(self) -> tuple[isa.GateInfo, ...]:
        return tuple(isa.GateInfo(e.name, gid, e.arity) for gid, e in sorted(self.entries.items()))


class TimedOp(NamedTuple):
    at: int
    qubit: int
    micro: int
    role: Role


class PulseEvent(NamedTuple):
    cycle: int
    qubit: int
    micro: int
    role: Role


class MeasurementSource(Protocol):
    def begin_shot(self, shot_index: int) -> None: ...

    def measure(self, qubit: int, cycle: int) -> int: ...


class BernoulliSource:
    """Each qubit reads 1 with its own probability; reseeded per shot."""

    def __init__(self, p: float | Sequence[float], seed: int = 0):
        self.p = p
        self.seed = seed
        self.begin_shot(0)

    def begin_shot(self, shot_index: int) -> None:
        self._rng = random.Random(self.seed + shot_index)

    def measure(self, qubit: int, cycle: int) -> int:
        p = self.p if isinstance(self.p, (int, float)) else self.p[qubit]
        return int(self._rng.random() < p)


class DistributionSource:
    """Draws one whole N-bit state per shot from a table; qubit q reads bit q."""

    def __init__(self, table: dict[int, float], seed: int = 0):
        self.states = list(table)
        self.weights = [table[s] for s in self.states]
        self.seed = seed
        self.begin_shot(0)

    def begin_shot(self, shot_index: int) -> None:
        rng = random.Random(self.seed + shot_index)
        self.current = rng.choices(self.states, weights=self.weights)[0]

    def measure(self, qubit: int, cycle: int) -> int:
        return self.current >> qubit & 1


@dataclass
class SimConfig:
    n_qubits: int = WINDOW
    shots: int = 100
    top_m: int = 4
    seed: int = 0
    fifo_depth: int = 64
    timing_depth: int = 64
    start_delay: int = 16
    measure_latency: int = 0
    memory_size: int = 4096
    memory_init: dict[int, int] = field(default_factory=dict)  # byte address -> u32 word
    max_cycles: int = 10_000_000

    def __post_init__(self):
        if not 1 <= self.n_qubits <= isa.MAX_QUBITS:
            raise ValueError(f"n_qubits must be in [1, {isa.MAX_QUBITS}], got {self.n_qubits}")
        if not 0 <= self.top_m <= self.shots:
            raise ValueError(f"top_m={self.top_m} must not exceed shots={self.shots}")


@dataclass
class _BufferedOp:
    at: int
    vector: OpVector
    entry: GateEntry


class Simulator:
    def __init__(self, program: ProgramImage | Sequence[int], config: SimConfig | None = None,
                 measurement: MeasurementSource | None = None, lut: GateOpLUT | None = None,
                 sinks: Iterable[Callable[[PulseEvent], None]] = (), kernels=None):
        self.words = tuple(program.words if isinstance(program, ProgramImage) else program)
        self.config = cfg = config or SimConfig()
        self.n = cfg.n_qubits
        self.lut = lut or GateOpLUT.default()
        self.measurement = measurement or BernoulliSource(0.0, cfg.seed)
        self.sinks = list(sinks)
        self._k = kernels or _kernels

        self.pc = 0
        self.cregs = [0] * 32
        self.flags = {f: 0 for f in Flag}
        self.qregs = {bank: [QTargetRegister(bank) for _ in range(8)] for bank in Bank}
        self.qmeas = 0
        self.clock = 0
        self.time_cursor = cfg.start_delay
        self.timing_queue: deque[int] = deque()
        self.op_buffers: list[_BufferedOp | None] = [None, None]
        self.fifos: list[deque[TimedOp]] = [deque() for _ in range(self.n)]
        self.heads = array("q", [self._k.EMPTY] * self.n)
        self._last_stamp = array("q", [-1] * self.n)
        self._pending_meas: deque[tuple[int, int, int]] = deque()
        self.memory = bytearray(cfg.memory_size)
        for addr, value in cfg.memory_init.items():
            self._store_word(addr, value)
        self.histogram = Histogram(cfg.shots, cfg.top_m, self.n, kernels=self._k)
        self.shot_index = 0
        self.measurement.begin_shot(0)
        self.status = RunStatus.RUNNING
        self.error: SimError | None = None
        self.trace: list[PulseEvent] = []
        self.instructions_retired = 0
        self.stall_cycles = 0
        self.last_fhr: tuple[int, int] | None = None  # (address, bytes)
        self._decoded: dict[int, isa.Instruction] = {}

    # -- classical helpers -------------------------------------------------

    def reg_signed(self, i: int) -> int:
        v = self.cregs[i]
        return v - (1 << 32) if v >> 31 else v

    def _write_reg(self, i: int, value: int) -> None:
        if i:  # R0 is hardwired to zero
            self.cregs[i] = value & MASK32

    def _check_mem(self, addr: int, size: int) -> None:
        if addr < 0 or addr + size > len(self.memory):
            raise SimError(ErrorKind.MEM_OUT_OF_RANGE, f"{size} bytes at {addr} outside {len(self.memory)}-byte memory")

    def _store_word(self, addr: int, value: int) -> None:
        self._check_mem(addr, 4)
        self.memory[addr : addr + 4] = (value & MASK32).to_bytes(4, "little")

    def _load_word(self, addr: int) -> int:
        self._check_mem(addr, 4)
        return int.from_bytes(self.memory[addr : addr + 4], "little")

    # -- main loop ---------------------------------------------------------

    @property
    def drained(self) -> bool:
        return self._k.min_head(self.heads) == self._k.EMPTY and not self._pending_meas

    def _fetch(self) -> isa.Instruction:
        instr = self._decoded.get(self.pc)
        if instr is None:
            if not 0 <= self.pc < len(self.words):
                raise SimError(ErrorKind.PC_OUT_OF_RANGE, f"pc {self.pc} outside program of {len(self.words)} words")
            try:
                instr = isa.decode(self.words, self.pc)
            except DecodeError as exc:
                raise SimError(ErrorKind.ILLEGAL_OPCODE, str(exc)) from exc
            self._decoded[self.pc] = instr
        return instr

    def step(self) -> list[PulseEvent]:
        """Advance one cycle; return the pulse events issued in it."""
        if self.status is RunStatus.ERROR:
            return []
        events: list[PulseEvent] = []
        try:
            if self.status is RunStatus.RUNNING:
                instr = self._fetch()
                if instr.is_quantum:
                    self.exec_quantum(instr)
                else:
                    self.exec_classical(instr)
            if self.op_buffers[0] is not None or self.op_buffers[1] is not None:
                self.dispatch()
            events = self.tick_timed_fifos()
        except SimError as exc:
            self.status = RunStatus.ERROR
            self.error = exc
            events = []
        self.clock += 1
        return events

    def run(self, max_cycles: int | None = None) -> RunStatus:
        """Execute until END has retired and every FIFO has drained, or an error."""
        limit = self.config.max_cycles if max_cycles is None else max_cycles
        stop = self.clock + limit
        while self.status is RunStatus.RUNNING or (self.status is RunStatus.ENDED and not self.drained):
            if self.status is RunStatus.ENDED:
                nxt = min([self._k.min_head(self.heads)] + [m[0] for m in self._pending_meas])
                if nxt > self.clock:
                    self.clock = nxt  # nothing can happen before the next stamp
            if self.clock >= stop:
                self.status = RunStatus.ERROR
                self.error = SimError(ErrorKind.CYCLE_LIMIT, f"no END within {limit} cycles")
                break
            self.step()
        return self.status

    # -- execution ---------------------------------------------------------

    def exec_classical(self, instr: isa.Instruction) -> None:
        next_pc = self.pc + instr.length
        match instr:
            case isa.Cmp(rs, rt):
                a, b = self.cregs[rs], self.cregs[rt]
                sa, sb = self.reg_signed(rs), self.reg_signed(rt)
                self.flags = {
                    Flag.EQ: int(a == b), Flag.NE: int(a != b),
                    Flag.LT: int(sa < sb), Flag.GE: int(sa >= sb),
                    Flag.LTU: int(a < b), Flag.GEU: int(a >= b),
                }
            case isa.Br(flag, offset):
                if self.flags[Flag(flag)]:
                    next_pc = self.pc + offset
            case isa.J(offset):
                next_pc = self.pc + offset
            case isa.Fbr(flag, rd):
                self._write_reg(rd, self.flags[Flag(flag)])
            case isa.Load(rd, base, imm):
                self._write_reg(rd, self._load_word(self.reg_signed(base) + imm))
            case isa.Store(rs, base, imm):
                self._store_word(self.reg_signed(base) + imm, self.cregs[rs])
            case isa.Fmr(rd, qubit):
                if qubit >= self.n:
                    raise SimError(ErrorKind.QUBIT_OUT_OF_RANGE, f"FMR of qubit {qubit} >= {self.n}")
                self._write_reg(rd, self.qmeas >> qubit & 1)
            case isa.Alu(op, rd, rs, rt):
                a, b = self.cregs[rs], self.cregs[rt]
                result = {
                    isa.AluOp.AND: a & b, isa.AluOp.OR: a | b, isa.AluOp.XOR: a ^ b,
                    isa.AluOp.ADD: a + b, isa.AluOp.SUB: a - b,
                }[isa.AluOp(op)]
                self._write_reg(rd, result)
            case isa.End():
                self.status = RunStatus.ENDED
            case isa.Sra():
                if self.histogram.busy(self.clock):
                    self.stall_cycles += 1
                    return  # sorter still busy with the previous shot
                try:
                    self.histogram.accumulate(self.qmeas, now=self.clock)
                except AccumulatorFull as exc:
                    raise SimError(ErrorKind.ACCUMULATOR_FULL, str(exc)) from exc
                self.shot_index += 1
                self.measurement.begin_shot(self.shot_index)
            case isa.Fhr(rt):
                if self.histogram.busy(self.clock):
                    self.stall_cycles += 1
                    return  # stall: retry next cycle
                addr = self.reg_signed(rt)
                try:
                    size = fhr_write(self.memory, addr, self.histogram.top_m_entries(self.clock), self.n)
                except MemOutOfRange as exc:
                    raise SimError(ErrorKind.MEM_OUT_OF_RANGE, str(exc)) from exc
                self.last_fhr = (addr, size)
            case _:
                raise TypeError(f"not a classical instruction: {instr!r}")
        self.pc = next_pc
        self.instructions_retired += 1

    def exec_quantum(self, instr: isa.Instruction) -> None:
        match instr:
            case isa.Qwait(imm):
                self.time_cursor += imm
            case isa.Qwaitr(rs):
                self.time_cursor += self.cregs[rs]
            case isa.Smso(sd, offset, mask, base):
                self.qregs[Bank.S][sd] = QTargetRegister(Bank.S, mask << base, offset)
            case isa.Smsol(sdl, offset, mask):
                self.qregs[Bank.SL][sdl] = QTargetRegister(Bank.SL, mask, offset)
            case isa.Sito(td, offset, src, tgt):
                self.qregs[Bank.T][td] = QTargetRegister(Bank.T, pack_pairs([Pair(True, src, tgt)]), offset)
            case isa.Sitol(tdl, offset, pairs):
                self.qregs[Bank.TL][tdl] = QTargetRegister(Bank.TL, pack_pairs(pairs), offset)
            case isa.Qset(reg, bit, value):
                target = self.qregs[Bank(reg.bank)][reg.index]
                if bit >= target.width:
                    raise SimError(ErrorKind.FIELD_OVERFLOW, f"QSET bit {bit} beyond {target.width}-bit {reg}")
                if value:
                    target.payload |= 1 << bit
                else:
                    target.payload &= ~(1 << bit)
            case isa.QBundle(pi, ops):
                self.time_cursor += pi
                if len(self.timing_queue) >= self.config.timing_depth:
                    raise SimError(ErrorKind.QUEUE_OVERFLOW, "timing queue full")
                self.timing_queue.append(self.time_cursor)
                at = self.timing_queue[0]
                for path, (gate_id, (bank, index)) in enumerate(ops):
                    entry = self.lut[gate_id]
                    bank = Bank(bank)
                    if bank.two_qubit != (entry.arity == 2):
                        raise SimError(ErrorKind.INVALID_REGISTER_BANK, f"{entry.name} cannot target {bank.name}{index}")
                    vector = decode_target_register(self.qregs[bank][index], self.n, kernels=self._k)
                    self.op_buffers[path] = _BufferedOp(at, vector, entry)
                self.timing_queue.popleft()
            case _:
                raise TypeError(f"not a quantum instruction: {instr!r}")
        self.pc += instr.length
        self.instructions_retired += 1

    def dispatch(self) -> list[TimedOp]:
        """Merge both pathways and push one TimedOp per addressed qubit."""
        buffered = [b for b in self.op_buffers if b is not None]
        self.op_buffers = [None, None]
        merged = bytearray(self.n)
        micro_of = [0] * len(buffered)
        owner = bytearray(self.n)
        for path, b in enumerate(buffered):
            clash = self._k.merge_codes(merged, b.vector.codes)
            if clash >= 0:
                raise SimError(ErrorKind.SAME_QUBIT_CONFLICT, f"both pathways target qubit {clash} at {b.at}")
            micro_of[path] = b.entry.micro
            for q, _ in b.vector.active():
                owner[q] = path
        at = buffered[0].at if buffered else 0
        targets = [(q, c) for q, c in enumerate(merged) if c]
        for q, _ in targets:
            if self._last_stamp[q] == at:
                raise SimError(ErrorKind.SAME_QUBIT_CONFLICT, f"qubit {q} already has an operation at {at}")
            if len(self.fifos[q]) >= self.config.fifo_depth:
                raise SimError(ErrorKind.QUEUE_OVERFLOW, f"FIFO of qubit {q} full")
        pushed = []
        for q, code in targets:
            op = TimedOp(at, q, micro_of[owner[q]], _ROLE_OF_CODE[code])
            fifo = self.fifos[q]
            if not fifo:
                self.heads[q] = at
            fifo.append(op)
            self._last_stamp[q] = at
            pushed.append(op)
        return pushed

    def tick_timed_fifos(self) -> list[PulseEvent]:
        due, missed = self._k.scan_heads(self.heads, self.clock)
        if missed >= 0:
            raise SimError(ErrorKind.MISSED_DEADLINE,
                           f"qubit {missed} head stamped {self.heads[missed]} but clock is {self.clock}")
        events = []
        for q in due:
            fifo = self.fifos[q]
            op = fifo.popleft()
            self.heads[q] = fifo[0].at if fifo else self._k.EMPTY
            ev = PulseEvent(self.clock, q, op.micro, op.role)
            events.append(ev)
            if op.micro in self.lut.measure_micros:
                value = self.measurement.measure(q, self.clock)
                self._pending_meas.append((self.clock + self.config.measure_latency, q, value))
        for ev in events:
            self.trace.append(ev)
            for sink in self.sinks:
                sink(ev)
        while self._pending_meas and self._pending_meas[0][0] <= self.clock:
            _, q, value = self._pending_meas.popleft()
            self.apply_measurement(q, value)
        return events

    def apply_measurement(self, qubit: int, value: int) -> None:
        """Q-measure register keeps only the latest result per qubit."""
        if value:
            self.qmeas |= 1 << qubit
        else:
            self.qmeas &= ~(1 << qubit)


def trace_to_csv(events: Iterable[PulseEvent]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["cycle", "qubit", "micro_hex", "role"])
    for ev in events:
        writer.writerow([ev.cycle, ev.qubit, f"0x{ev.micro:02x}", ev.role.value])
    return buf.getvalue()


def trace_from_csv(text: str) -> list[PulseEvent]:
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    rows = csv.DictReader(lines)
    return [PulseEvent(int(r["cycle"]), int(r["qubit"]), int(r["micro_hex"], 16), Role(r["role"])) for r in rows]
