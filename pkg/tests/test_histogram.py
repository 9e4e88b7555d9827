import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hisepq import _pykernels, histogram
from hisepq._kernels import available_backends
from hisepq.errors import AccumulatorFull, MemOutOfRange, SortBusy
from hisepq.histogram import SENTINEL, Histogram, TopEntry, brute_force_top


def test_first_insertion_and_increment():
    h = Histogram(depth=10, top_m=4, n_qubits=3)
    assert h.accumulate(0b101) == 1
    assert h.tally() == {0b101: 1}
    for _ in range(3):
        h.accumulate(0b101)
    assert h.tally() == {0b101: 4}


def test_replace_last_rank():
    h = Histogram(depth=40, top_m=4, n_qubits=4)
    for state, count in [(1, 9), (2, 7), (3, 5), (4, 3)]:
        for _ in range(count):
            h.accumulate(state)
    for _ in range(3):
        h.accumulate(5)
    assert [e.count for e in h.top_m_entries()] == [9, 7, 5, 3]
    h.accumulate(5)
    assert h.top_m_entries() == [TopEntry(1, 9), TopEntry(2, 7), TopEntry(3, 5), TopEntry(5, 4)]


def test_ties_keep_first_seen_order():
    h = Histogram(depth=10, top_m=3, n_qubits=3)
    for s in [6, 2, 2, 6, 1, 1]:
        h.accumulate(s)
    assert [e.state for e in h.top_m_entries()] == [6, 2, 1]


def test_underfull_sorter_is_padded():
    h = Histogram(depth=100, top_m=4, n_qubits=8)
    for _ in range(100):
        h.accumulate(0xAB)
    assert h.top_m_entries() == [TopEntry(0xAB, 100)] + [SENTINEL] * 3
    assert not SENTINEL.valid


def test_accumulator_full():
    h = Histogram(depth=2, top_m=1, n_qubits=4)
    h.accumulate(1)
    h.accumulate(2)
    h.accumulate(2)
    with pytest.raises(AccumulatorFull):
        h.accumulate(3)
    assert sum(h.tally().values()) == 3


def test_latency_window():
    m = 4
    h = Histogram(depth=20, top_m=m, n_qubits=4)
    for s in (1, 1, 2):
        h.accumulate(s)
    before = h.ranking_at(0)
    h.accumulate(2, now=100)
    h.accumulate(2, now=100 + m + 1)
    for now in range(100, 100 + m + 1):
        assert h.ranking_at(now) == before
    assert h.ranking_at(100 + m + 1)[:2] == [TopEntry(1, 2), TopEntry(2, 2)]
    assert h.ranking_at(100 + 2 * (m + 1) - 1)[1] == TopEntry(2, 2)
    assert h.ranking_at(100 + 2 * (m + 1))[0] == TopEntry(2, 3)


def test_busy_sorter_refuses_reads_and_updates():
    h = Histogram(depth=20, top_m=4, n_qubits=4)
    h.accumulate(3, now=10)
    with pytest.raises(SortBusy):
        h.top_m_entries(now=14)
    with pytest.raises(SortBusy):
        h.accumulate(3, now=12)
    assert h.top_m_entries(now=15)[0] == TopEntry(3, 1)


def _check_stream(stream, m, kernels=None):
    h = Histogram(depth=max(len(stream), m), top_m=m, n_qubits=16, kernels=kernels)
    for s in stream:
        h.accumulate(s)
    tally, top = brute_force_top(stream, m)
    assert h.tally() == tally
    assert h.top_m_entries() == top
    assert sum(h.tally().values()) == len(stream)
    counts = [e.count for e in h.top_m_entries()]
    assert counts == sorted(counts, reverse=True)


def test_oracle_equivalence_seeded_streams():
    rng = random.Random(5)
    for _ in range(300):
        n = rng.randint(1, 16)
        stream = [rng.randrange(min(1 << n, rng.randint(1, 40))) for _ in range(rng.randint(0, 200))]
        _check_stream(stream, rng.choice((1, 4, 8)))


@pytest.mark.parametrize("backend", sorted(available_backends()))
@settings(max_examples=100, deadline=None)
@given(stream=st.lists(st.integers(0, 30), max_size=200), m=st.sampled_from((1, 4, 8)))
def test_oracle_equivalence_property(backend, stream, m):
    _check_stream(stream, m, available_backends()[backend])


def test_gaussian_demo_top4_after_five_cycles():
    res = histogram.run_demo(histogram.gaussian_distribution(), shots=100, top_m=4, seed=0)
    assert res.visible_at - res.last_update == 5
    _, oracle = brute_force_top(res.samples, 4)
    assert res.top == oracle
    assert {e.state for e in res.top} == {2, 3, 4, 5}


def test_record_layout_and_dump():
    entries = [TopEntry(0x81, 40), TopEntry(0x03, 30), TopEntry(0x10, 20), SENTINEL]
    blob = histogram.pack_records(entries, 8)
    assert len(blob) == 4 * (1 + 4)
    assert histogram.unpack_records(blob, 8) == entries
    mem = bytearray(64)
    assert histogram.fhr_write(mem, 8, entries, 8) == 20
    assert histogram.unpack_records(bytes(mem[8:28]), 8) == entries
    with pytest.raises(MemOutOfRange):
        histogram.fhr_write(mem, 50, entries, 8)


def test_record_file_round_trip(tmp_path):
    entries = [TopEntry((1 << 99) | 5, 7), TopEntry(2, 1)]
    path = tmp_path / "top.bin"
    path.write_bytes(histogram.pack_records(entries, 100))
    assert histogram.unpack_records(path.read_bytes(), 100) == entries


def test_csv_dump():
    text = histogram.to_csv([TopEntry(5, 3), SENTINEL], 4)
    assert text.splitlines() == ["rank,state_bits,count", "1,0101,3", "2,0000,0"]


@pytest.mark.parametrize(
    "t, m, n, ratio",
    [(100, 4, 100, 0.96), (100, 100, 100, 0.0), (200, 4, 100, 0.98)],
)
def test_transmission_reduction(t, m, n, ratio):
    rep = histogram.transmission_reduction(t, m, n)
    assert rep.ratio == pytest.approx(ratio, abs=1e-12)
    assert rep.baseline_bits == t * n


def test_transmission_hundred_shot_point():
    rep = histogram.transmission_reduction(100, 4, 100)
    assert (rep.baseline_bytes, rep.ours_bytes) == (1250, 50)


def test_load_distribution(tmp_path):
    p = tmp_path / "d.json"
    p.write_text('{"n_qubits": 3, "distribution": {"0b101": 0.75, "2": 0.25}}')
    assert histogram.load_distribution(p) == (3, {5: 0.75, 2: 0.25})
    p.write_text('{"gaussian": {"states": 8}}')
    n, dist = histogram.load_distribution(p)
    assert n is None and sum(dist.values()) == pytest.approx(1.0)


def test_python_kernels_match_default():
    stream = [random.Random(1).randrange(12) for _ in range(150)]
    _check_stream(stream, 4, _pykernels)
