import math
import statistics
from dataclasses import astuple
from collections import Counter
from pathlib import Path

import pytest

from hisepq import isa
from hisepq.bench import (
    CircuitIR,
    Gate,
    compile_hisepq,
    compile_quasar_model,
    compile_qv_model,
    gen_grover_operator,
    gen_synthetic,
    grover_depth,
    read_report_csv,
    report,
)
from hisepq.bench.report import HISEPQ, QUASAR, measure_point
from hisepq.core import DistributionSource, ErrorKind, GateOpLUT, RunStatus, SimConfig, Simulator
from hisepq.errors import CompileError, UnsupportedGate

GOLDEN = Path(__file__).parent / "golden"


def full_layer(kind, n):
    return CircuitIR(n, [[Gate(kind, (q,)) for q in range(n)]])


def test_synthetic_full_density_touches_every_qubit():
    circ = gen_synthetic(4, 12, 1.0, seed=1)
    for layer in circ.layers:
        assert sorted(q for g in layer for q in g.qubits) == [0, 1, 2, 3]


def test_synthetic_ten_percent_of_hundred():
    circ = gen_synthetic(100, 20, 0.1, seed=2)
    assert all(sum(g.arity for g in layer) == 10 for layer in circ.layers)
    kinds = Counter(g.kind for layer in circ.layers for g in layer)
    assert set(kinds) <= {"X", "Y", "Z", "H", "CZ"}


def test_synthetic_is_seeded():
    assert gen_synthetic(32, 10, 0.5, 7).to_dict() == gen_synthetic(32, 10, 0.5, 7).to_dict()
    assert gen_synthetic(32, 10, 0.5, 7).to_dict() != gen_synthetic(32, 10, 0.5, 8).to_dict()


def test_synthetic_pairs_are_adjacent_selected_qubits():
    circ = gen_synthetic(50, 30, 0.5, 3)
    for layer in circ.layers:
        chosen = sorted(q for g in layer for q in g.qubits)
        for g in layer:
            if g.kind == "CZ":
                a, b = g.qubits
                assert chosen.index(b) == chosen.index(a) + 1


def test_synthetic_rejects_empty_layers():
    with pytest.raises(ValueError):
        gen_synthetic(8, 5, 0.1, 0)


def test_grover_two_qubits():
    circ = gen_grover_operator(2)
    shape = [[(g.kind, g.qubits) for g in layer] for layer in circ.layers]
    assert shape == [
        [("H", (0,)), ("H", (1,))],
        [("X", (0,)), ("X", (1,))],
        [("CZ", (0, 1))],
        [("X", (0,)), ("X", (1,))],
        [("H", (0,)), ("H", (1,))],
    ]


@pytest.mark.parametrize("n", [8, 16, 32, 64, 96])
def test_grover_depth_affine(n):
    assert gen_grover_operator(n).depth == grover_depth(n) == 2 * n + 1


def test_grover_golden_n8():
    golden = CircuitIR.load(GOLDEN / "go_8.json")
    assert golden.depth == 17
    assert gen_grover_operator(8).to_dict() == golden.to_dict()


def test_ir_validation_and_json(tmp_path):
    with pytest.raises(ValueError):
        CircuitIR(3, [[Gate("X", (0,)), Gate("CZ", (0, 1))]])
    with pytest.raises(ValueError):
        Gate("CZ", (1, 1))
    with pytest.raises(ValueError):
        Gate("X", (0, 1))
    circ = gen_synthetic(10, 4, 0.5, 1)
    path = tmp_path / "c.json"
    circ.save(path)
    assert CircuitIR.load(path).to_dict() == circ.to_dict()


def test_full_layer_hundred_qubits():
    prog = compile_hisepq(full_layer("X", 100))
    assert [type(i) for i in prog.body] == [isa.Smsol, isa.QBundle]
    assert prog.size_bits == 160
    assert compile_quasar_model(full_layer("X", 100)).instructions == 16
    assert compile_quasar_model(full_layer("X", 100)).bits == 512


def test_quasar_thirty_two_ops():
    assert compile_quasar_model(full_layer("H", 32)).instructions == 4


def test_empty_circuit():
    prog = compile_hisepq(CircuitIR(10))
    assert prog.instructions == [isa.End()]
    assert prog.size_bits == 32
    assert compile_quasar_model(CircuitIR(10)).instructions == 0


@pytest.mark.parametrize("pairs", [1, 2, 7, 8, 14, 15, 49])
def test_pair_packing_formula(pairs):
    circ = CircuitIR(100, [[Gate("CZ", (2 * k, 2 * k + 1)) for k in range(pairs)]])
    body = compile_hisepq(circ).body
    long_count = sum(isinstance(i, isa.Sitol) for i in body)
    short_count = sum(isinstance(i, isa.Sito) for i in body)
    chunks = math.ceil(pairs / 7)
    assert long_count + short_count == chunks
    assert short_count == (1 if pairs % 7 == 1 else 0)
    assert sum(isinstance(i, isa.QBundle) for i in body) == math.ceil(chunks / 2)


def test_fourteen_pairs_example():
    circ = CircuitIR(100, [[Gate("CZ", (2 * k, 2 * k + 1)) for k in range(14)]])
    assert [type(i) for i in compile_hisepq(circ).body] == [isa.Sitol, isa.Sitol, isa.QBundle]


def test_short_mask_for_contiguous_byte():
    circ = CircuitIR(100, [[Gate("X", (q,)) for q in range(40, 48)]])
    body = compile_hisepq(circ).body
    assert body[0] == isa.Smso(0, 0, 0xFF, 40)
    assert compile_hisepq(circ).size_bits == 64


def test_register_reuse_across_layers():
    circ = CircuitIR(100, [[Gate("H", (q,)) for q in range(100)], [Gate("X", (q,)) for q in range(100)]])
    body = compile_hisepq(circ).body
    assert [type(i) for i in body] == [isa.Smsol, isa.QBundle, isa.QBundle]


def test_long_intervals_use_qwait():
    body = compile_hisepq(full_layer("X", 4), layer_interval=20).body
    assert body[1] == isa.Qwait(20)
    assert body[2].pi == 0


def test_unsupported_and_cross_window():
    with pytest.raises(UnsupportedGate):
        compile_hisepq(CircuitIR(4, [[Gate("RZZ", (0,))]]))
    with pytest.raises(CompileError):
        compile_hisepq(CircuitIR(200, [[Gate("CZ", (99, 100))]]))
    with pytest.raises(CompileError):
        compile_hisepq(CircuitIR(1601))


def test_wide_synthetic_may_straddle_windows():
    # pairs join neighbouring selected qubits, which can sit in different windows
    circ = CircuitIR(250, [[Gate("CZ", (95, 120))]])
    with pytest.raises(CompileError):
        compile_hisepq(circ)


def test_qv_model_costs_more_than_quasar():
    circ = gen_grover_operator(32)
    assert compile_qv_model(circ).instructions > compile_quasar_model(circ).instructions


def trace_layers(circ: CircuitIR, interval: int = 1):
    """Compile, simulate and rebuild per-layer (kind, role, qubit) sets from the trace."""
    prog = compile_hisepq(circ, layer_interval=interval)
    lead = len(prog.instructions) + 1
    cfg = SimConfig(n_qubits=circ.n_qubits, start_delay=lead, fifo_depth=circ.depth + 1,
                    timing_depth=4)
    sim = Simulator(prog.image(circ.n_qubits), cfg)
    assert sim.run() is RunStatus.ENDED, sim.error
    name_of = {e.micro: e.name for e in GateOpLUT.default().entries.values()}
    got: dict[int, set] = {}
    for ev in sim.trace:
        layer, rem = divmod(ev.cycle - lead - interval, interval)
        assert rem == 0
        got.setdefault(layer, set()).add((name_of[ev.micro], ev.role.value, ev.qubit))
    return got, len(sim.trace)


def expected_layers(circ: CircuitIR):
    out = {}
    for i, layer in enumerate(circ.layers):
        items = set()
        for g in layer:
            if g.arity == 1:
                items.add((g.kind, "single", g.qubits[0]))
            else:
                items |= {(g.kind, "source", g.qubits[0]), (g.kind, "target", g.qubits[1])}
        if items:
            out[i] = items
    return out


@pytest.mark.parametrize(
    "circ",
    [
        gen_grover_operator(8),
        gen_grover_operator(30),
        gen_synthetic(16, 10, 0.5, 4),
        gen_synthetic(100, 8, 1.0, 5),
        gen_synthetic(100, 6, 0.1, 6),
        CircuitIR(5, [[Gate("X", (0,))], [], [Gate("CNOT", (3, 1))]]),
    ],
    ids=["go8", "go30", "syn50-16", "syn100-100", "syn10-100", "gap"],
)
def test_compiled_program_reproduces_ir(circ):
    got, pulses = trace_layers(circ)
    assert got == expected_layers(circ)
    assert pulses == sum(g.arity for layer in circ.layers for g in layer)


def test_layer_interval_spacing():
    circ = gen_synthetic(12, 5, 0.5, 9)
    got, _ = trace_layers(circ, interval=3)
    assert got == expected_layers(circ)


@pytest.mark.parametrize("shots, top_m, latency, interval", [(5, 1, 0, 1), (60, 8, 3, 2), (30, 30, 0, 9)])
def test_shot_loop_program_runs(shots, top_m, latency, interval):
    circ = gen_grover_operator(6)
    circ.append([Gate("MEASURE", (q,)) for q in range(6)])
    prog = compile_hisepq(circ, shots=shots, top_m=top_m, measure_latency=latency, layer_interval=interval)
    assert isinstance(prog.instructions[-1], isa.End)
    assert prog.size_bits == isa.program_size_bits(prog.body)
    cfg = SimConfig(n_qubits=6, shots=shots, top_m=top_m, measure_latency=latency,
                    memory_init=prog.memory_init, start_delay=prog.start_delay)
    # state 0 never occurs, so a stale read of the measurement register would show up
    source = DistributionSource({0b000001: 0.5, 0b111111: 0.5}, seed=7)
    sim = Simulator(prog.image(6, shots=shots, top_m=top_m), cfg, measurement=source)
    assert sim.run() is RunStatus.ENDED, sim.error
    assert sim.shot_index == shots
    assert sum(e.micro == 0xFF for e in sim.trace) == 6 * shots
    tally = sim.histogram.tally()
    assert set(tally) <= {0b000001, 0b111111} and sum(tally.values()) == shots


@pytest.mark.parametrize("circ", [gen_grover_operator(12), gen_synthetic(100, 6, 1.0, 2)], ids=["go", "syn"])
def test_start_delay_is_tight(circ):
    prog = compile_hisepq(circ)
    assert prog.start_delay > 0
    ok = Simulator(prog.image(circ.n_qubits), SimConfig(n_qubits=circ.n_qubits, start_delay=prog.start_delay,
                                                     fifo_depth=circ.depth + 1))
    assert ok.run() is RunStatus.ENDED, ok.error
    late = Simulator(prog.image(circ.n_qubits), SimConfig(n_qubits=circ.n_qubits, start_delay=prog.start_delay - 1,
                                                        fifo_depth=circ.depth + 1))
    assert late.run() is RunStatus.ERROR
    assert late.error.kind is ErrorKind.MISSED_DEADLINE


@pytest.mark.parametrize("n", [8, 16, 32, 64, 96, 100])
def test_go_dominance(n):
    circ = gen_grover_operator(n)
    assert compile_hisepq(circ).size_bits < compile_quasar_model(circ).bits


@pytest.mark.parametrize("bench", ["Syn_10", "Syn_50", "Syn_100"])
@pytest.mark.parametrize("n", [16, 64, 96, 100])
def test_synthetic_dominance(bench, n):
    for seed in range(5):
        ours, quasar = measure_point(bench, n, seed)
        assert ours.bits < quasar.bits


def test_full_density_crossover_at_thirty_two():
    # With the whole register inside one 32-qubit group the baseline pays four
    # instructions per gate kind, the same as one long mask; bundles tip the balance.
    for seed in range(5):
        ours, quasar = measure_point("Syn_100", 32, seed)
        assert ours.bits >= quasar.bits


def test_go_monotone_in_n():
    bits = [compile_hisepq(gen_grover_operator(n)).size_bits for n in range(2, 101)]
    assert bits == sorted(bits)


@pytest.mark.parametrize("density", [0.1, 0.5, 1.0])
def test_synthetic_monotone_in_depth(density):
    bits = [compile_hisepq(gen_synthetic(64, d, density, 11)).size_bits for d in range(1, 30)]
    assert bits == sorted(bits)


@pytest.mark.parametrize("bench", ["Syn_10", "Syn_50", "Syn_100"])
def test_synthetic_mean_monotone_in_n(bench):
    sizes = []
    for n in (16, 32, 64, 96, 100):
        sizes.append(statistics.mean(measure_point(bench, n, s)[0].bits for s in range(20)))
    assert sizes == sorted(sizes)


def test_single_layer_cost_flat_up_to_window():
    sizes = {compile_hisepq(full_layer("X", n)).size_bits for n in range(9, 101)}
    assert sizes == {160}


def test_report_rows_and_csv():
    rep = report(qubits=(8, 32, 100), root_seed=3)
    assert ("Syn_10", 8) in [(b, n) for b, n, _ in rep.skipped]
    text = rep.to_csv()
    assert text.startswith("# root_seed=3\n")
    rows = read_report_csv(text)
    assert [astuple(r)[:5] for r in rows] == [astuple(r)[:5] for r in rep.rows]
    for r in rows:
        if r.isa == HISEPQ:
            base = rep.lookup(r.benchmark, QUASAR, r.n_qubits)
            assert r.reduction_pct == pytest.approx(100 * (1 - r.bits / base.bits), abs=0.005)
        else:
            assert r.reduction_pct is None
    assert report(qubits=(8, 32, 100), root_seed=3).to_csv() == text
