"""Two-pass assembler and canonical disassembler.

Source syntax, one instruction per line, ``#`` starts a comment::

    .qubits 100
    .shots 100
    .topm 4
    start:  SMSOL SL0, 0, {0..99}
            QBUNDLE 1, X SL0 | CZ T0
            BR eq, start

Qubit lists are window positions ``{a, b, c..d}``.  SMSO takes an optional
``@ base`` suffix; without it the base is the lowest listed position.  Pairs
are written ``(src->tgt)``; a ``~`` prefix marks a SITOL slot as invalid.
Branch and jump targets are labels or signed word offsets relative to the
branch itself.

SMSOL and SITOL also accept the short names ``S<i>``/``T<i>`` for their long
registers.  After such a write, bundle operands spelled ``S<i>``/``T<i>`` refer
to the long register until an SMSO/SITO writes the short one (in text order).
The disassembler always prints ``SL``/``TL``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from . import isa
from .errors import DuplicateLabel, FieldOverflow, ParseError, UnknownLabel
from .isa import (
    Alu,
    AluOp,
    Bank,
    BundleOp,
    Flag,
    GateInfo,
    Pair,
    ProgramImage,
    QReg,
)

_LABEL_RE = re.compile(r"^([A-Za-z_][\w.]*)\s*:")
_IDENT_RE = re.compile(r"^[A-Za-z_][\w.]*$")
_CREG_RE = re.compile(r"^R(\d+)$", re.I)
_QREG_RE = re.compile(r"^(SL|TL|S|T)(\d+)$", re.I)
_MEM_RE = re.compile(r"^(-?\w+)\s*\(\s*(R\d+)\s*\)$", re.I)
_PAIR_RE = re.compile(r"^(~?)\(\s*(\w+)\s*->\s*(\w+)\s*\)$")

_DEFAULT_META = {"n_qubits": ProgramImage.n_qubits, "shots": ProgramImage.shots, "top_m": ProgramImage.top_m}
_DIRECTIVES = {".qubits": "n_qubits", ".shots": "shots", ".topm": "top_m"}


def _split_operands(text: str) -> list[str]:
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch in "{(":
            depth += 1
        elif ch in "})":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    tail = "".join(cur).strip()
    if tail or parts:
        parts.append(tail)
    return parts


@dataclass
class _Line:
    lineno: int
    mnemonic: str
    operands: list[str]
    addr: int


class _Parser:
    def __init__(self, gates):
        self.gates_by_name = {g.name: g for g in gates}
        self.labels: dict[str, int] = {}
        # short names last written by a long instruction; bundles follow them to the long bank
        self.aliased: set[QReg] = set()

    def fail(self, line: _Line, reason: str):
        raise ParseError(line.lineno, reason)

    def int_(self, line, text: str) -> int:
        try:
            return int(text, 0)
        except ValueError:
            self.fail(line, f"expected integer, got {text!r}")

    def creg(self, line, text: str) -> int:
        m = _CREG_RE.match(text)
        if not m:
            self.fail(line, f"expected classical register, got {text!r}")
        return int(m.group(1))

    def qreg(self, line, text: str, allowed=tuple(Bank), long_alias: Bank | None = None) -> QReg:
        m = _QREG_RE.match(text)
        if not m:
            self.fail(line, f"expected quantum register, got {text!r}")
        bank = Bank[m.group(1).upper()]
        index = int(m.group(2))
        if long_alias is not None and bank is Bank(long_alias - 1):
            self.aliased.add(QReg(bank, index))
            bank = long_alias  # SMSOL S0 means SL0, SITOL T0 means TL0
        elif line.mnemonic in ("SMSO", "SITO"):
            self.aliased.discard(QReg(bank, index))
        elif line.mnemonic == "QBUNDLE" and QReg(bank, index) in self.aliased:
            bank = Bank(bank + 1)
        if bank not in allowed:
            self.fail(line, f"register {text} not allowed for {line.mnemonic}")
        return QReg(bank, index)

    def flag(self, line, text: str) -> Flag:
        try:
            return Flag[text.upper()]
        except KeyError:
            self.fail(line, f"unknown comparison flag {text!r}")

    def target(self, line, text: str) -> int:
        if _IDENT_RE.match(text) and not text[0].isdigit():
            if text not in self.labels:
                raise UnknownLabel(f"line {line.lineno}: unknown label {text!r}")
            return self.labels[text] - line.addr
        return self.int_(line, text)

    def qubit_list(self, line, text: str) -> list[int]:
        text = text.strip()
        if not (text.startswith("{") and text.endswith("}")):
            self.fail(line, f"expected qubit list in braces, got {text!r}")
        out: list[int] = []
        for item in text[1:-1].split(","):
            item = item.strip()
            if not item:
                continue
            if ".." in item:
                lo, hi = (self.int_(line, x.strip()) for x in item.split("..", 1))
                if hi < lo:
                    self.fail(line, f"empty range {item}")
                out.extend(range(lo, hi + 1))
            else:
                out.append(self.int_(line, item))
        return sorted(set(out))

    def pair(self, line, text: str) -> Pair:
        m = _PAIR_RE.match(text.strip())
        if not m:
            self.fail(line, f"expected (src->tgt), got {text!r}")
        return Pair(not m.group(1), self.int_(line, m.group(2)), self.int_(line, m.group(3)))

    def gate(self, line, text: str) -> int:
        name = text.upper()
        if name in self.gates_by_name:
            return self.gates_by_name[name].gate_id
        if re.fullmatch(r"G\d+", name):
            return int(name[1:])
        self.fail(line, f"unknown gate {text!r}")

    def nargs(self, line, n: int):
        if len(line.operands) != n:
            self.fail(line, f"{line.mnemonic} takes {n} operand(s), got {len(line.operands)}")

    def build(self, line: _Line) -> isa.Instruction:
        m, ops = line.mnemonic, line.operands
        if m in ("END", "SRA"):
            self.nargs(line, 0)
            return isa.End() if m == "END" else isa.Sra()
        if m == "CMP":
            self.nargs(line, 2)
            return isa.Cmp(self.creg(line, ops[0]), self.creg(line, ops[1]))
        if m == "BR":
            self.nargs(line, 2)
            return isa.Br(self.flag(line, ops[0]), self.target(line, ops[1]))
        if m == "J":
            self.nargs(line, 1)
            return isa.J(self.target(line, ops[0]))
        if m == "FBR":
            self.nargs(line, 2)
            return isa.Fbr(self.flag(line, ops[0]), self.creg(line, ops[1]))
        if m in ("LOAD", "STORE"):
            self.nargs(line, 2)
            mem = _MEM_RE.match(ops[1])
            if not mem:
                self.fail(line, f"expected imm(Rn), got {ops[1]!r}")
            cls = isa.Load if m == "LOAD" else isa.Store
            return cls(self.creg(line, ops[0]), self.creg(line, mem.group(2)), self.int_(line, mem.group(1)))
        if m == "FMR":
            self.nargs(line, 2)
            if not re.fullmatch(r"Q\d+", ops[1], re.I):
                self.fail(line, f"expected qubit Qn, got {ops[1]!r}")
            return isa.Fmr(self.creg(line, ops[0]), int(ops[1][1:]))
        if m in AluOp.__members__:
            self.nargs(line, 3)
            rd, rs, rt = (self.creg(line, x) for x in ops)
            return Alu(AluOp[m], rd, rs, rt)
        if m == "QWAIT":
            self.nargs(line, 1)
            return isa.Qwait(self.int_(line, ops[0]))
        if m == "QWAITR":
            self.nargs(line, 1)
            return isa.Qwaitr(self.creg(line, ops[0]))
        if m == "FHR":
            self.nargs(line, 1)
            return isa.Fhr(self.creg(line, ops[0]))
        if m == "SMSO":
            self.nargs(line, 3)
            reg = self.qreg(line, ops[0], (Bank.S,))
            list_text, _, base_text = ops[2].partition("@")
            positions = self.qubit_list(line, list_text)
            if base_text.strip():
                base = self.int_(line, base_text.strip())
            else:
                base = positions[0] if positions else 0
            mask = 0
            for p in positions:
                if not 0 <= p - base < 8:
                    raise FieldOverflow(f"line {line.lineno}: position {p} outside [{base}, {base + 8})")
                mask |= 1 << (p - base)
            return isa.Smso(reg.index, self.int_(line, ops[1]), mask, base)
        if m == "SMSOL":
            self.nargs(line, 3)
            reg = self.qreg(line, ops[0], (Bank.SL,), long_alias=Bank.SL)
            mask = 0
            for p in self.qubit_list(line, ops[2]):
                if p < 0:
                    raise FieldOverflow(f"line {line.lineno}: negative position {p}")
                mask |= 1 << p
            return isa.Smsol(reg.index, self.int_(line, ops[1]), mask)
        if m == "SITO":
            self.nargs(line, 3)
            reg = self.qreg(line, ops[0], (Bank.T,))
            pair = self.pair(line, ops[2])
            if not pair.valid:
                self.fail(line, "SITO pairs are always valid")
            return isa.Sito(reg.index, self.int_(line, ops[1]), pair.src, pair.tgt)
        if m == "SITOL":
            if len(ops) < 2:
                self.fail(line, "SITOL needs a register and an offset")
            reg = self.qreg(line, ops[0], (Bank.TL,), long_alias=Bank.TL)
            pairs = tuple(self.pair(line, p) for p in ops[2:])
            return isa.Sitol(reg.index, self.int_(line, ops[1]), pairs)
        if m == "QSET":
            self.nargs(line, 3)
            return isa.Qset(self.qreg(line, ops[0]), self.int_(line, ops[1]), self.int_(line, ops[2]))
        if m == "QBUNDLE":
            if len(ops) != 2:
                self.fail(line, "QBUNDLE takes '<pi>, <gate> <reg> [| <gate> <reg>]'")
            bops = []
            for part in ops[1].split("|"):
                words = part.split()
                if len(words) != 2:
                    self.fail(line, f"bad bundle operation {part.strip()!r}")
                bops.append(BundleOp(self.gate(line, words[0]), self.qreg(line, words[1])))
            return isa.QBundle(self.int_(line, ops[0]), tuple(bops))
        self.fail(line, f"unknown mnemonic {m!r}")


def parse(text: str, gates: tuple[GateInfo, ...] = isa.DEFAULT_GATES) -> tuple[list[isa.Instruction], dict]:
    """Parse source into instructions plus image metadata."""
    parser = _Parser(gates)
    meta = dict(_DEFAULT_META)
    lines: list[_Line] = []
    addr = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        code = raw.split("#", 1)[0].strip()
        while True:
            m = _LABEL_RE.match(code)
            if not m:
                break
            label = m.group(1)
            if label in parser.labels:
                raise DuplicateLabel(f"line {lineno}: duplicate label {label!r}")
            parser.labels[label] = addr
            code = code[m.end():].strip()
        if not code:
            continue
        head, *tail = code.split(None, 1)
        rest = tail[0] if tail else ""
        if head.startswith("."):
            if head not in _DIRECTIVES:
                raise ParseError(lineno, f"unknown directive {head}")
            try:
                meta[_DIRECTIVES[head]] = int(rest.strip(), 0)
            except ValueError:
                raise ParseError(lineno, f"{head} needs an integer") from None
            continue
        mnemonic = head.upper()
        line = _Line(lineno, mnemonic, _split_operands(rest), addr)
        lines.append(line)
        addr += isa.LONG_WORDS if mnemonic in ("SMSOL", "SITOL") else 1

    program = []
    for line in lines:
        instr = parser.build(line)
        try:
            instr.encode()
        except FieldOverflow as exc:
            raise FieldOverflow(f"line {line.lineno}: {exc}") from exc
        program.append(instr)
    return program, meta


def assemble(text: str, gates: tuple[GateInfo, ...] = isa.DEFAULT_GATES) -> ProgramImage:
    program, meta = parse(text, gates)
    return ProgramImage.from_instructions(program, **meta)


def format_positions(positions) -> str:
    """``[0, 1, 2, 5]`` -> ``{0..2, 5}``."""
    positions = sorted(positions)
    items, i = [], 0
    while i < len(positions):
        j = i
        while j + 1 < len(positions) and positions[j + 1] == positions[j] + 1:
            j += 1
        if j - i >= 2:
            items.append(f"{positions[i]}..{positions[j]}")
            i = j + 1
        else:
            items.append(str(positions[i]))
            i += 1
    return "{" + ", ".join(items) + "}"


def _bits(mask: int) -> list[int]:
    return [i for i in range(mask.bit_length()) if mask >> i & 1]


def format_instruction(instr: isa.Instruction, gates: tuple[GateInfo, ...] = isa.DEFAULT_GATES) -> str:
    names = {g.gate_id: g.name for g in gates}
    match instr:
        case isa.End() | isa.Sra():
            return instr.mnemonic
        case isa.Cmp(rs, rt):
            return f"CMP R{rs}, R{rt}"
        case isa.Br(flag, offset):
            return f"BR {Flag(flag).name.lower()}, {offset}"
        case isa.J(offset):
            return f"J {offset}"
        case isa.Fbr(flag, rd):
            return f"FBR {Flag(flag).name.lower()}, R{rd}"
        case isa.Load(rd, base, imm):
            return f"LOAD R{rd}, {imm}(R{base})"
        case isa.Store(rs, base, imm):
            return f"STORE R{rs}, {imm}(R{base})"
        case isa.Fmr(rd, qubit):
            return f"FMR R{rd}, Q{qubit}"
        case Alu(op, rd, rs, rt):
            return f"{AluOp(op).name} R{rd}, R{rs}, R{rt}"
        case isa.Qwait(imm):
            return f"QWAIT {imm}"
        case isa.Qwaitr(rs):
            return f"QWAITR R{rs}"
        case isa.Fhr(rt):
            return f"FHR R{rt}"
        case isa.Smso(sd, offset, mask, base):
            positions = [base + b for b in _bits(mask)]
            text = f"SMSO S{sd}, {offset}, {format_positions(positions)}"
            if base != (positions[0] if positions else 0):
                text += f" @ {base}"
            return text
        case isa.Smsol(sdl, offset, mask):
            return f"SMSOL SL{sdl}, {offset}, {format_positions(_bits(mask))}"
        case isa.Sito(td, offset, src, tgt):
            return f"SITO T{td}, {offset}, ({src}->{tgt})"
        case isa.Sitol(tdl, offset, pairs):
            used = list(pairs)
            while used and used[-1] == Pair(False, 0, 0):
                used.pop()
            text = f"SITOL TL{tdl}, {offset}"
            for valid, src, tgt in used:
                text += f", {'' if valid else '~'}({src}->{tgt})"
            return text
        case isa.Qset(reg, bit, value):
            return f"QSET {QReg(*reg)}, {bit}, {value}"
        case isa.QBundle(pi, ops):
            body = " | ".join(f"{names.get(op.gate_id, f'G{op.gate_id}')} {QReg(*op.reg)}" for op in ops)
            return f"QBUNDLE {pi}, {body}"
    raise TypeError(f"cannot format {instr!r}")


def disassemble(image: ProgramImage, gates: tuple[GateInfo, ...] = isa.DEFAULT_GATES) -> str:
    """Canonical text; ``assemble(disassemble(img))`` reproduces ``img``."""
    lines = []
    for directive, key in _DIRECTIVES.items():
        value = getattr(image, key)
        if value != _DEFAULT_META[key]:
            lines.append(f"{directive} {value}")
    lines.extend(format_instruction(instr, gates) for instr in image.instructions())
    return "\n".join(lines) + ("\n" if lines else "")
