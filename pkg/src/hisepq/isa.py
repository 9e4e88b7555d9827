"""Binary instruction set: variant records, word encoding and program images.

Every instruction is one 32-bit word except SMSOL and SITOL, which occupy
four.  Word 0 always starts with the major opcode: bit 31 set marks a
QBUNDLE, otherwise bits [31:26] hold a 6-bit opcode.  Long instructions keep
their register and offset fields in word 0 and spread a 115-bit payload over
the low 19 bits of word 0 and all of words 1..3.

Field layouts (short formats, bit ranges inclusive)::

    CMP     rs[25:21] rt[20:16]
    BR      flag[25:23] offset[20:0] (signed)
    FBR     flag[25:23] rd[22:18]
    LOAD    rd[25:21] base[20:16] imm[15:0] (signed)
    STORE   rs[25:21] base[20:16] imm[15:0] (signed)
    FMR     rd[25:21] qubit[10:0]
    ALU     rd[25:21] rs[20:16] rt[15:11]
    QWAIT   imm[25:0]
    QWAITR  rs[25:21]
    J       offset[25:0] (signed)
    FHR     rt[25:21]
    SMSO    sd[25:23] offset[22:19] base[18:12] mask[11:4]
    SITO    td[25:23] offset[22:19] src[18:12] tgt[11:5]
    QSET    bank[25:24] index[23:21] bit[20:14] value[13]
    QBUNDLE 1[31] pi[30:28] two[27] op0[26:15] op1[14:3]
            where op = gate[11:5] bank[4:3] index[2:0]

All bits not named above must be zero; decoding rejects anything else so that
the encoding stays injective.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import ClassVar, Iterable, Iterator, NamedTuple, Sequence

from .errors import (
    FieldOverflow,
    IllegalEncoding,
    IllegalOpcode,
    ImageFormatError,
    TruncatedLongInstruction,
)

WORD_BITS = 32
WORD_MASK = (1 << WORD_BITS) - 1
LONG_WORDS = 4
WINDOW = 100  # qubits addressed per offset step
MAX_QUBITS = 16 * WINDOW
MASK_LONG_BITS = 100
MAX_PAIRS = 7
PAIR_BITS = 15
LONG_PAYLOAD_BITS = 19 + 3 * WORD_BITS

_OPCODE_SHIFT = 26
_PAYLOAD_MASK = (1 << _OPCODE_SHIFT) - 1
_BUNDLE_BIT = 1 << 31


class Flag(IntEnum):
    EQ = 0
    NE = 1
    LT = 2
    GE = 3
    LTU = 4
    GEU = 5


class AluOp(IntEnum):
    AND = 0
    OR = 1
    XOR = 2
    ADD = 3
    SUB = 4


class Bank(IntEnum):
    """Quantum target register banks."""

    S = 0  # single-qubit, short mask
    SL = 1  # single-qubit, 100-bit mask
    T = 2  # two-qubit, one pair
    TL = 3  # two-qubit, up to seven pairs

    @property
    def two_qubit(self) -> bool:
        return self >= Bank.T


class QReg(NamedTuple):
    bank: Bank
    index: int

    def __str__(self) -> str:
        return f"{Bank(self.bank).name}{self.index}"


class BundleOp(NamedTuple):
    gate_id: int
    reg: QReg


class Pair(NamedTuple):
    valid: bool
    src: int
    tgt: int


class GateInfo(NamedTuple):
    name: str
    gate_id: int
    arity: int


# Default gate-id table shared by the assembler, compiler and simulator LUT.
DEFAULT_GATES: tuple[GateInfo, ...] = (
    GateInfo("I", 0, 1),
    GateInfo("X", 1, 1),
    GateInfo("Y", 2, 1),
    GateInfo("Z", 3, 1),
    GateInfo("H", 4, 1),
    GateInfo("S", 5, 1),
    GateInfo("SDG", 6, 1),
    GateInfo("T", 7, 1),
    GateInfo("TDG", 8, 1),
    GateInfo("X90", 9, 1),
    GateInfo("Y90", 10, 1),
    GateInfo("MX90", 11, 1),
    GateInfo("MY90", 12, 1),
    GateInfo("CZ", 32, 2),
    GateInfo("CNOT", 33, 2),
    GateInfo("SWAP", 34, 2),
    GateInfo("MEASURE", 127, 1),
)
GATES_BY_NAME = {g.name: g for g in DEFAULT_GATES}
GATES_BY_ID = {g.gate_id: g for g in DEFAULT_GATES}


def _check(value, width: int, name: str, signed: bool = False) -> int:
    if signed:
        lo, hi = -(1 << (width - 1)), (1 << (width - 1)) - 1
    else:
        lo, hi = 0, (1 << width) - 1
    if not isinstance(value, int) or not lo <= value <= hi:
        raise FieldOverflow(f"{name}={value!r} does not fit in {width} bits")
    return value & ((1 << width) - 1)


def _field(word: int, lsb: int, width: int, signed: bool = False) -> int:
    value = (word >> lsb) & ((1 << width) - 1)
    if signed and value >> (width - 1):
        value -= 1 << width
    return value


def _check_enum(value, enum: type[IntEnum], name: str) -> None:
    if not isinstance(value, int) or value not in set(enum):
        raise FieldOverflow(f"{name}={value!r} is not a valid {enum.__name__}")


class Instruction:
    """Base class of all instruction variants."""

    __slots__ = ()

    mnemonic: ClassVar[str]
    opcode: ClassVar[int]
    length: ClassVar[int] = 1
    # (field, lsb, width, signed) for the simple short formats
    _layout: ClassVar[tuple[tuple[str, int, int, bool], ...]] = ()
    _enums: ClassVar[dict[str, type[IntEnum]]] = {}

    @property
    def is_quantum(self) -> bool:
        return False

    def encode(self) -> list[int]:
        return [(self.opcode << _OPCODE_SHIFT) | self._pack()]

    def _pack(self) -> int:
        payload = 0
        for name, lsb, width, signed in self._layout:
            value = getattr(self, name)
            if name in self._enums:
                _check_enum(value, self._enums[name], name)
            payload |= _check(value, width, name, signed) << lsb
        return payload

    @classmethod
    def _unpack(cls, payload: int) -> "Instruction":
        kwargs = {}
        used = 0
        for name, lsb, width, signed in cls._layout:
            value = _field(payload, lsb, width, signed)
            if name in cls._enums:
                try:
                    value = cls._enums[name](value)
                except ValueError:
                    raise IllegalEncoding(f"{cls.mnemonic}: bad {name} {value}") from None
            kwargs[name] = value
            used |= ((1 << width) - 1) << lsb
        if payload & ~used:
            raise IllegalEncoding(f"{cls.mnemonic}: reserved bits set")
        return cls(**kwargs)


class QuantumInstruction(Instruction):
    __slots__ = ()

    @property
    def is_quantum(self) -> bool:
        return True


@dataclass(frozen=True, slots=True)
class Cmp(Instruction):
    rs: int
    rt: int
    mnemonic: ClassVar[str] = "CMP"
    opcode: ClassVar[int] = 0x05
    _layout: ClassVar = (("rs", 21, 5, False), ("rt", 16, 5, False))


@dataclass(frozen=True, slots=True)
class Br(Instruction):
    flag: Flag
    offset: int
    mnemonic: ClassVar[str] = "BR"
    opcode: ClassVar[int] = 0x06
    _layout: ClassVar = (("flag", 23, 3, False), ("offset", 0, 21, True))
    _enums: ClassVar = {"flag": Flag}


@dataclass(frozen=True, slots=True)
class Fbr(Instruction):
    flag: Flag
    rd: int
    mnemonic: ClassVar[str] = "FBR"
    opcode: ClassVar[int] = 0x07
    _layout: ClassVar = (("flag", 23, 3, False), ("rd", 18, 5, False))
    _enums: ClassVar = {"flag": Flag}


@dataclass(frozen=True, slots=True)
class Load(Instruction):
    rd: int
    base: int
    imm: int
    mnemonic: ClassVar[str] = "LOAD"
    opcode: ClassVar[int] = 0x08
    _layout: ClassVar = (("rd", 21, 5, False), ("base", 16, 5, False), ("imm", 0, 16, True))


@dataclass(frozen=True, slots=True)
class Store(Instruction):
    rs: int
    base: int
    imm: int
    mnemonic: ClassVar[str] = "STORE"
    opcode: ClassVar[int] = 0x09
    _layout: ClassVar = (("rs", 21, 5, False), ("base", 16, 5, False), ("imm", 0, 16, True))


@dataclass(frozen=True, slots=True)
class Fmr(Instruction):
    rd: int
    qubit: int
    mnemonic: ClassVar[str] = "FMR"
    opcode: ClassVar[int] = 0x0A
    _layout: ClassVar = (("rd", 21, 5, False), ("qubit", 0, 11, False))


_ALU_BASE = 0x0B


@dataclass(frozen=True, slots=True)
class Alu(Instruction):
    op: AluOp
    rd: int
    rs: int
    rt: int
    _layout: ClassVar = (("rd", 21, 5, False), ("rs", 16, 5, False), ("rt", 11, 5, False))

    @property
    def mnemonic(self) -> str:  # type: ignore[override]
        return AluOp(self.op).name

    def encode(self) -> list[int]:
        _check_enum(self.op, AluOp, "op")
        return [((_ALU_BASE + self.op) << _OPCODE_SHIFT) | self._pack()]


@dataclass(frozen=True, slots=True)
class Qwait(QuantumInstruction):
    imm: int
    mnemonic: ClassVar[str] = "QWAIT"
    opcode: ClassVar[int] = 0x10
    _layout: ClassVar = (("imm", 0, 26, False),)


@dataclass(frozen=True, slots=True)
class Qwaitr(QuantumInstruction):
    rs: int
    mnemonic: ClassVar[str] = "QWAITR"
    opcode: ClassVar[int] = 0x11
    _layout: ClassVar = (("rs", 21, 5, False),)


@dataclass(frozen=True, slots=True)
class J(Instruction):
    offset: int
    mnemonic: ClassVar[str] = "J"
    opcode: ClassVar[int] = 0x04
    _layout: ClassVar = (("offset", 0, 26, True),)


@dataclass(frozen=True, slots=True)
class End(Instruction):
    mnemonic: ClassVar[str] = "END"
    opcode: ClassVar[int] = 0x01


@dataclass(frozen=True, slots=True)
class Sra(Instruction):
    mnemonic: ClassVar[str] = "SRA"
    opcode: ClassVar[int] = 0x02


@dataclass(frozen=True, slots=True)
class Fhr(Instruction):
    rt: int
    mnemonic: ClassVar[str] = "FHR"
    opcode: ClassVar[int] = 0x03
    _layout: ClassVar = (("rt", 21, 5, False),)


@dataclass(frozen=True, slots=True)
class Smso(QuantumInstruction):
    """Short mask: ``mask`` bit k selects window position ``base + k``."""

    sd: int
    offset: int
    mask: int
    base: int = 0
    mnemonic: ClassVar[str] = "SMSO"
    opcode: ClassVar[int] = 0x12
    _layout: ClassVar = (
        ("sd", 23, 3, False),
        ("offset", 19, 4, False),
        ("base", 12, 7, False),
        ("mask", 4, 8, False),
    )


@dataclass(frozen=True, slots=True)
class Sito(QuantumInstruction):
    td: int
    offset: int
    src: int
    tgt: int
    mnemonic: ClassVar[str] = "SITO"
    opcode: ClassVar[int] = 0x13
    _layout: ClassVar = (
        ("td", 23, 3, False),
        ("offset", 19, 4, False),
        ("src", 12, 7, False),
        ("tgt", 5, 7, False),
    )


@dataclass(frozen=True, slots=True)
class Qset(QuantumInstruction):
    reg: QReg
    bit: int
    value: int
    mnemonic: ClassVar[str] = "QSET"
    opcode: ClassVar[int] = 0x14

    def __post_init__(self):
        if not isinstance(self.reg, QReg):
            object.__setattr__(self, "reg", QReg(*self.reg))

    def _pack(self) -> int:
        bank, index = self.reg
        return (
            _check(bank, 2, "bank") << 24
            | _check(index, 3, "index") << 21
            | _check(self.bit, 7, "bit") << 14
            | _check(self.value, 1, "value") << 13
        )

    @classmethod
    def _unpack(cls, payload: int) -> "Qset":
        if payload & ((1 << 13) - 1):
            raise IllegalEncoding("QSET: reserved bits set")
        reg = QReg(Bank(_field(payload, 24, 2)), _field(payload, 21, 3))
        return cls(reg, _field(payload, 14, 7), _field(payload, 13, 1))


class _LongInstruction(QuantumInstruction):
    __slots__ = ()
    length: ClassVar[int] = LONG_WORDS

    def _long_fields(self) -> tuple[int, int, int]:
        """Return (register index, offset, 115-bit payload)."""
        raise NotImplementedError

    def encode(self) -> list[int]:
        reg, offset, payload = self._long_fields()
        word0 = (
            self.opcode << _OPCODE_SHIFT
            | _check(reg, 3, "register") << 23
            | _check(offset, 4, "offset") << 19
            | (payload & ((1 << 19) - 1))
        )
        rest = payload >> 19
        return [word0] + [(rest >> (WORD_BITS * i)) & WORD_MASK for i in range(3)]

    @classmethod
    def _from_words(cls, words: Sequence[int]) -> "_LongInstruction":
        word0 = words[0]
        payload = word0 & ((1 << 19) - 1)
        for i, w in enumerate(words[1:4]):
            payload |= (w & WORD_MASK) << (19 + WORD_BITS * i)
        return cls._from_long_fields(_field(word0, 23, 3), _field(word0, 19, 4), payload)

    @classmethod
    def _from_long_fields(cls, reg: int, offset: int, payload: int):
        raise NotImplementedError


@dataclass(frozen=True, slots=True)
class Smsol(_LongInstruction):
    """Long mask: bit k of ``mask`` selects window position k (k < 100)."""

    sdl: int
    offset: int
    mask: int
    mnemonic: ClassVar[str] = "SMSOL"
    opcode: ClassVar[int] = 0x1E

    def _long_fields(self):
        return self.sdl, self.offset, _check(self.mask, MASK_LONG_BITS, "mask")

    @classmethod
    def _from_long_fields(cls, reg, offset, payload):
        if payload >> MASK_LONG_BITS:
            raise IllegalEncoding("SMSOL: mask bits beyond 100 set")
        return cls(reg, offset, payload)


def _as_pair(p) -> Pair:
    return p if isinstance(p, Pair) else Pair(*p)


@dataclass(frozen=True, slots=True)
class Sitol(_LongInstruction):
    """Up to seven (valid, src, tgt) pairs; always normalised to seven slots."""

    tdl: int
    offset: int
    pairs: tuple[Pair, ...] = field(default=())
    mnemonic: ClassVar[str] = "SITOL"
    opcode: ClassVar[int] = 0x1F

    def __post_init__(self):
        pairs = tuple(_as_pair(p) for p in self.pairs)
        if len(pairs) < MAX_PAIRS:
            pairs += (Pair(False, 0, 0),) * (MAX_PAIRS - len(pairs))
        object.__setattr__(self, "pairs", pairs)

    @property
    def valid_pairs(self) -> list[Pair]:
        return [p for p in self.pairs if p.valid]

    def _long_fields(self):
        if len(self.pairs) > MAX_PAIRS:
            raise FieldOverflow(f"SITOL holds at most {MAX_PAIRS} pairs, got {len(self.pairs)}")
        payload = 0
        for k, (valid, src, tgt) in enumerate(self.pairs):
            slot = _check(valid, 1, "valid") << 14 | _check(src, 7, "src") << 7 | _check(tgt, 7, "tgt")
            payload |= slot << (PAIR_BITS * k)
        return self.tdl, self.offset, payload

    @classmethod
    def _from_long_fields(cls, reg, offset, payload):
        if payload >> (PAIR_BITS * MAX_PAIRS):
            raise IllegalEncoding("SITOL: reserved bits set")
        pairs = []
        for k in range(MAX_PAIRS):
            slot = payload >> (PAIR_BITS * k)
            pairs.append(Pair(bool(_field(slot, 14, 1)), _field(slot, 7, 7), _field(slot, 0, 7)))
        return cls(reg, offset, tuple(pairs))


@dataclass(frozen=True, slots=True)
class QBundle(QuantumInstruction):
    """One or two gate operations issued ``pi`` cycles after the last time point."""

    pi: int
    ops: tuple[BundleOp, ...]
    mnemonic: ClassVar[str] = "QBUNDLE"
    opcode: ClassVar[int] = 0x20  # nominal; any word with bit 31 set is a bundle

    def __post_init__(self):
        ops = tuple(
            op if isinstance(op, BundleOp) else BundleOp(op[0], QReg(*op[1])) for op in self.ops
        )
        object.__setattr__(self, "ops", ops)

    def encode(self) -> list[int]:
        if not 1 <= len(self.ops) <= 2:
            raise FieldOverflow(f"QBUNDLE carries 1 or 2 operations, got {len(self.ops)}")
        word = _BUNDLE_BIT | _check(self.pi, 3, "pi") << 28 | (len(self.ops) == 2) << 27
        for op, lsb in zip(self.ops, (15, 3)):
            bank, index = op.reg
            slot = _check(op.gate_id, 7, "gate") << 5 | _check(bank, 2, "bank") << 3 | _check(index, 3, "index")
            word |= slot << lsb
        return [word]

    @classmethod
    def _from_word(cls, word: int) -> "QBundle":
        if word & 0b111:
            raise IllegalEncoding("QBUNDLE: reserved bits set")
        two = _field(word, 27, 1)
        slots = [_field(word, 15, 12)]
        if two:
            slots.append(_field(word, 3, 12))
        elif _field(word, 3, 12):
            raise IllegalEncoding("QBUNDLE: second slot used without flag")
        ops = tuple(BundleOp(s >> 5, QReg(Bank((s >> 3) & 3), s & 7)) for s in slots)
        return cls(_field(word, 28, 3), ops)


_SHORT_BY_OPCODE: dict[int, type[Instruction]] = {
    cls.opcode: cls
    for cls in (Cmp, Br, Fbr, Load, Store, Fmr, Qwait, Qwaitr, J, End, Sra, Fhr, Smso, Sito, Qset)
}
_LONG_BY_OPCODE: dict[int, type[_LongInstruction]] = {Smsol.opcode: Smsol, Sitol.opcode: Sitol}
MNEMONICS: dict[str, type[Instruction]] = {
    cls.mnemonic: cls for cls in (*_SHORT_BY_OPCODE.values(), *_LONG_BY_OPCODE.values(), QBundle)
}


def encode(instr: Instruction) -> list[int]:
    """Encode one instruction into 1 or 4 words."""
    return instr.encode()


def word_length(word0: int) -> int:
    """Length in words of the instruction starting with ``word0``."""
    if word0 & _BUNDLE_BIT:
        return 1
    return LONG_WORDS if (word0 >> _OPCODE_SHIFT) in _LONG_BY_OPCODE else 1


def decode(words: Sequence[int], pos: int = 0) -> Instruction:
    """Decode the instruction starting at ``words[pos]``."""
    if pos >= len(words):
        raise TruncatedLongInstruction(f"no word at position {pos}")
    word0 = words[pos]
    if word0 & _BUNDLE_BIT:
        return QBundle._from_word(word0)
    opcode = word0 >> _OPCODE_SHIFT
    payload = word0 & _PAYLOAD_MASK
    if opcode in _LONG_BY_OPCODE:
        if pos + LONG_WORDS > len(words):
            raise TruncatedLongInstruction(
                f"long instruction at {pos} needs {LONG_WORDS} words, {len(words) - pos} remain"
            )
        return _LONG_BY_OPCODE[opcode]._from_words(words[pos : pos + LONG_WORDS])
    if _ALU_BASE <= opcode < _ALU_BASE + len(AluOp):
        if payload & ((1 << 11) - 1):
            raise IllegalEncoding("ALU: reserved bits set")
        return Alu(AluOp(opcode - _ALU_BASE), _field(payload, 21, 5), _field(payload, 16, 5), _field(payload, 11, 5))
    cls = _SHORT_BY_OPCODE.get(opcode)
    if cls is None:
        raise IllegalOpcode(f"illegal opcode {opcode:#04x} in word {word0:#010x}")
    return cls._unpack(payload)


def iter_decode(words: Sequence[int]) -> Iterator[tuple[int, Instruction]]:
    """Yield ``(word address, instruction)`` over a whole word stream."""
    pos = 0
    while pos < len(words):
        instr = decode(words, pos)
        yield pos, instr
        pos += instr.length


def encode_program(program: Iterable[Instruction]) -> list[int]:
    words: list[int] = []
    for instr in program:
        words.extend(instr.encode())
    return words


def program_size_bits(program: Iterable[Instruction]) -> int:
    return sum(WORD_BITS * instr.length for instr in program)


_HEADER = struct.Struct("<4sHHIHI")
MAGIC = b"HSPQ"
IMAGE_VERSION = 1


@dataclass(frozen=True)
class ProgramImage:
    words: tuple[int, ...]
    n_qubits: int = WINDOW
    shots: int = 100
    top_m: int = 4
    entry_pc: int = 0

    @classmethod
    def from_instructions(cls, program: Iterable[Instruction], **meta) -> "ProgramImage":
        return cls(tuple(encode_program(program)), **meta)

    @property
    def size_bits(self) -> int:
        return WORD_BITS * len(self.words)

    def instructions(self) -> list[Instruction]:
        return [instr for _, instr in iter_decode(self.words)]

    def to_bytes(self) -> bytes:
        header = _HEADER.pack(MAGIC, IMAGE_VERSION, self.n_qubits, self.shots, self.top_m, len(self.words))
        return header + struct.pack(f"<{len(self.words)}I", *self.words)

    @classmethod
    def from_bytes(cls, data: bytes) -> "ProgramImage":
        if len(data) < _HEADER.size:
            raise ImageFormatError("image shorter than header")
        magic, version, n, t, m, count = _HEADER.unpack_from(data)
        if magic != MAGIC:
            raise ImageFormatError(f"bad magic {magic!r}")
        if version != IMAGE_VERSION:
            raise ImageFormatError(f"unsupported image version {version}")
        body = data[_HEADER.size :]
        if len(body) != 4 * count:
            raise ImageFormatError(f"header says {count} words, file holds {len(body) / 4:g}")
        return cls(struct.unpack(f"<{count}I", body), n_qubits=n, shots=t, top_m=m)

    def save(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path) -> "ProgramImage":
        return cls.from_bytes(Path(path).read_bytes())
