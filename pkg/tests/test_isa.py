import random

import pytest
from hypothesis import given, settings

from hisepq import isa
from hisepq.errors import FieldOverflow, IllegalEncoding, IllegalOpcode, ImageFormatError, TruncatedLongInstruction
from hisepq.isa import Bank, BundleOp, Pair, QReg

from instrgen import instructions, random_instruction, random_program

ALL_ONES_100 = (1 << 100) - 1


def test_long_mask_plus_bundle_is_five_words():
    prog = [isa.Smsol(0, 0, ALL_ONES_100), isa.QBundle(0, (BundleOp(1, QReg(Bank.SL, 0)),))]
    assert [len(isa.encode(i)) for i in prog] == [4, 1]
    assert isa.program_size_bits(prog) == 160


def test_size_of_trivial_programs():
    assert isa.program_size_bits([]) == 0
    assert isa.program_size_bits([isa.End()]) == 32


def test_end_round_trip():
    words = isa.encode(isa.End())
    assert len(words) == 1
    assert isa.decode(words) == isa.End()


def test_sito_round_trip_keeps_pair_and_offset():
    words = isa.encode(isa.Sito(td=2, offset=1, src=3, tgt=5))
    assert len(words) == 1
    got = isa.decode(words)
    assert (got.td, got.offset, got.src, got.tgt) == (2, 1, 3, 5)


def test_qwait_round_trip():
    assert isa.decode(isa.encode(isa.Qwait(10))) == isa.Qwait(10)


def test_sitol_seven_pairs_keep_order():
    pairs = tuple(Pair(True, 2 * k, 2 * k + 1) for k in range(7))
    got = isa.decode(isa.encode(isa.Sitol(3, 2, pairs)))
    assert got.pairs == pairs


def test_sitol_pads_to_seven_slots():
    instr = isa.Sitol(0, 0, ((True, 1, 2),))
    assert len(instr.pairs) == 7
    assert instr.valid_pairs == [Pair(True, 1, 2)]


@pytest.mark.parametrize(
    "instr",
    [
        isa.Sito(0, 0, 128, 0),
        isa.Smso(0, 16, 1, 0),
        isa.Smsol(0, 0, 1 << 100),
        isa.Qwait(1 << 26),
        isa.QBundle(8, (BundleOp(1, QReg(Bank.S, 0)),)),
        isa.QBundle(0, ()),
        isa.Br(0, 1 << 20),
        isa.Cmp(32, 0),
        isa.Sitol(0, 0, tuple(Pair(True, 0, 1) for _ in range(8))),
    ],
)
def test_field_overflow(instr):
    with pytest.raises(FieldOverflow):
        isa.encode(instr)


def test_decode_errors():
    with pytest.raises(IllegalOpcode):
        isa.decode([0x1D << 26])
    with pytest.raises(TruncatedLongInstruction):
        isa.decode(isa.encode(isa.Smsol(0, 0, 1))[:3])
    with pytest.raises(IllegalEncoding):
        isa.decode([isa.encode(isa.End())[0] | 1])


def test_length_law():
    rng = random.Random(7)
    for _ in range(2000):
        instr = random_instruction(rng)
        words = isa.encode(instr)
        assert len(words) == instr.length
        assert (len(words) == 4) == isinstance(instr, (isa.Smsol, isa.Sitol))
        assert isa.word_length(words[0]) == len(words)


def test_round_trip_ten_thousand():
    rng = random.Random(2024)
    for _ in range(10_000):
        instr = random_instruction(rng)
        assert isa.decode(isa.encode(instr)) == instr


@settings(max_examples=300, deadline=None)
@given(instructions())
def test_round_trip_property(instr):
    words = isa.encode(instr)
    assert all(0 <= w < 1 << 32 for w in words)
    assert isa.decode(words) == instr


def test_encoding_is_injective():
    rng = random.Random(99)
    seen: dict[tuple[int, ...], isa.Instruction] = {}
    for _ in range(10_000):
        instr = random_instruction(rng)
        key = tuple(isa.encode(instr))
        assert seen.setdefault(key, instr) == instr


def test_iter_decode_walks_mixed_lengths():
    prog = random_program(random.Random(3), 50)
    words = isa.encode_program(prog)
    positions = [pc for pc, _ in isa.iter_decode(words)]
    expected = []
    pc = 0
    for instr in prog:
        expected.append(pc)
        pc += instr.length
    assert positions == expected
    assert [i for _, i in isa.iter_decode(words)] == prog


def test_image_bytes_round_trip(tmp_path):
    prog = random_program(random.Random(5), 40)
    img = isa.ProgramImage.from_instructions(prog, n_qubits=1600, shots=200, top_m=8)
    path = tmp_path / "p.bin"
    img.save(path)
    back = isa.ProgramImage.load(path)
    assert back == img
    assert back.instructions() == prog
    raw = path.read_bytes()
    assert raw[:4] == b"HSPQ"
    assert img.size_bits == 32 * len(img.words)


def test_image_header_checks():
    data = isa.ProgramImage.from_instructions([isa.End()]).to_bytes()
    with pytest.raises(ImageFormatError):
        isa.ProgramImage.from_bytes(b"XXXX" + data[4:])
    with pytest.raises(ImageFormatError):
        isa.ProgramImage.from_bytes(data[:-1])
    with pytest.raises(ImageFormatError):
        isa.ProgramImage.from_bytes(data[:5])


def test_bundle_prefix_bit():
    word = isa.encode(isa.QBundle(3, (BundleOp(4, QReg(Bank.S, 1)), BundleOp(32, QReg(Bank.T, 2)))))[0]
    assert word >> 31 == 1
    assert isa.decode([word]).pi == 3
