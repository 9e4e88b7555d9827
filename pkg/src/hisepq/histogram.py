"""Onboard result accumulation with a streaming top-M sorter.

Each accumulated state either bumps its existing counter or opens a new slot
with count 1.  The sorter keeps M (entry, count) slots ranked by count, ties
broken by first appearance.  A ranking produced by an update at cycle ``c``
becomes observable at ``c + M + 1``.  The sorter handles one update at a
time: a timed update that arrives while a sort is still running is refused
with SortBusy, and the core simulator stalls SRA until the sorter is free.
"""

from __future__ import annotations

import csv
import io
import json
import math
import random
import struct
from array import array
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple

from . import _kernels
from .errors import AccumulatorFull, HistogramError, MemOutOfRange, SortBusy


class TopEntry(NamedTuple):
    state: int
    count: int
    valid: bool = True


SENTINEL = TopEntry(0, 0, False)


class Histogram:
    def __init__(self, depth: int, top_m: int, n_qubits: int, kernels=None):
        if depth <= 0:
            raise HistogramError("histogram depth must be positive")
        if not 0 <= top_m <= depth:
            raise HistogramError(f"top_m={top_m} must lie in [0, depth={depth}]")
        self.depth = depth
        self.top_m = top_m
        self.n_qubits = n_qubits
        self._k = kernels or _kernels
        self._index: dict[int, int] = {}
        self.states: list[int] = []
        self.counts = array("q", bytes(8 * depth))
        self.sorter = array("q", bytes(8 * top_m))
        self.sorter_size = 0
        self.total = 0
        self.busy_until = 0
        self._pending: deque[tuple[int, tuple[TopEntry, ...]]] = deque()
        self._visible: tuple[TopEntry, ...] = ()

    def __len__(self) -> int:
        return len(self.states)

    @property
    def latency(self) -> int:
        return self.top_m + 1

    def accumulate(self, state: int, now: int | None = None) -> int:
        """Count one measured state; return its new count.

        With ``now`` the update is timed: it needs an idle sorter and its
        ranking becomes visible at ``now + M + 1``.  Without it the update is
        applied instantly (pure counting, no latency model).
        """
        if now is not None and self.busy(now):
            raise SortBusy(f"sorter busy until cycle {self.busy_until}, update at {now}")
        if state < 0 or state >> self.n_qubits:
            raise HistogramError(f"state {state:#x} wider than {self.n_qubits} qubits")
        entry = self._index.get(state)
        if entry is None:
            if len(self.states) >= self.depth:
                raise AccumulatorFull(f"all {self.depth} accumulator slots used")
            entry = len(self.states)
            self._index[state] = entry
            self.states.append(state)
        self.counts[entry] += 1
        self.total += 1
        self.sorter_size = self._k.sorter_update(self.sorter, self.sorter_size, self.counts, entry)
        if now is None:
            self._pending.clear()
            self._visible = self._snapshot()
        else:
            self.busy_until = now + self.latency
            self._pending.append((self.busy_until, self._snapshot()))
        return self.counts[entry]

    def _snapshot(self) -> tuple[TopEntry, ...]:
        return tuple(TopEntry(self.states[e], self.counts[e]) for e in self.sorter[: self.sorter_size])

    def _pad(self, ranked: Iterable[TopEntry]) -> list[TopEntry]:
        ranked = list(ranked)
        return ranked + [SENTINEL] * (self.top_m - len(ranked))

    def busy(self, now: int) -> bool:
        return now < self.busy_until

    def ranking_at(self, now: int) -> list[TopEntry]:
        """Ranking observable at cycle ``now``, honouring the sort latency."""
        while self._pending and self._pending[0][0] <= now:
            self._visible = self._pending.popleft()[1]
        return self._pad(self._visible)

    def top_m_entries(self, now: int | None = None) -> list[TopEntry]:
        """Final top-M list; raises SortBusy while a sort is still in flight."""
        if now is not None and self.busy(now):
            raise SortBusy(f"sorter busy until cycle {self.busy_until}, queried at {now}")
        return self._pad(self._snapshot())

    def tally(self) -> dict[int, int]:
        return {s: self.counts[i] for i, s in enumerate(self.states)}


def brute_force_top(stream: Iterable[int], m: int) -> tuple[dict[int, int], list[TopEntry]]:
    """Independent oracle: plain tally plus a stable sort by (count desc, first seen)."""
    counts: dict[int, int] = {}
    for s in stream:
        counts[s] = counts.get(s, 0) + 1  # dict preserves first-seen order
    ranked = sorted(counts.items(), key=lambda kv: -kv[1])
    top = [TopEntry(s, c) for s, c in ranked[:m]]
    return counts, top + [SENTINEL] * (m - len(top))


def record_size(n_qubits: int) -> int:
    return math.ceil(n_qubits / 8) + 4


def pack_records(entries: Iterable[TopEntry], n_qubits: int) -> bytes:
    """FHR memory layout: per record, state bytes (little-endian) then a u32 count."""
    width = math.ceil(n_qubits / 8)
    out = bytearray()
    for e in entries:
        out += e.state.to_bytes(width, "little") + struct.pack("<I", e.count)
    return bytes(out)


def unpack_records(data: bytes, n_qubits: int) -> list[TopEntry]:
    size = record_size(n_qubits)
    if len(data) % size:
        raise HistogramError(f"record stream of {len(data)} bytes is not a multiple of {size}")
    out = []
    for off in range(0, len(data), size):
        state = int.from_bytes(data[off : off + size - 4], "little")
        (count,) = struct.unpack_from("<I", data, off + size - 4)
        out.append(TopEntry(state, count, count > 0))
    return out


def fhr_write(memory: bytearray, addr: int, entries: list[TopEntry], n_qubits: int) -> int:
    """Store the records at ``memory[addr:]``; return the number of bytes written."""
    blob = pack_records(entries, n_qubits)
    if addr < 0 or addr + len(blob) > len(memory):
        raise MemOutOfRange(f"FHR of {len(blob)} bytes at {addr} exceeds memory of {len(memory)} bytes")
    memory[addr : addr + len(blob)] = blob
    return len(blob)


def to_csv(entries: Iterable[TopEntry], n_qubits: int) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["rank", "state_bits", "count"])
    for rank, e in enumerate(entries, start=1):
        writer.writerow([rank, format(e.state, f"0{n_qubits}b"), e.count])
    return buf.getvalue()


@dataclass(frozen=True)
class TransmissionReport:
    shots: int
    top_m: int
    n_qubits: int
    baseline_bits: int
    ours_bits: int

    @property
    def saved_bits(self) -> int:
        return self.baseline_bits - self.ours_bits

    @property
    def ratio(self) -> float:
        return self.saved_bits / self.baseline_bits

    @property
    def baseline_bytes(self) -> float:
        return self.baseline_bits / 8

    @property
    def ours_bytes(self) -> float:
        return self.ours_bits / 8


def transmission_reduction(shots: int, top_m: int, n_qubits: int) -> TransmissionReport:
    """Raw per-shot readout (T*N bits) against shipping only the top-M states (M*N)."""
    if shots <= 0 or not 0 <= top_m <= shots:
        raise ValueError(f"need T > 0 and 0 <= M <= T, got T={shots}, M={top_m}")
    return TransmissionReport(shots, top_m, n_qubits, shots * n_qubits, top_m * n_qubits)


def gaussian_distribution(n_states: int = 8, mean: float | None = None, sigma: float = 1.5) -> dict[int, float]:
    """Discretised normal over states ``0..n_states-1``, normalised to 1."""
    if mean is None:
        mean = (n_states - 1) / 2
    weights = [math.exp(-0.5 * ((s - mean) / sigma) ** 2) for s in range(n_states)]
    total = sum(weights)
    return {s: w / total for s, w in enumerate(weights)}


def sample_states(dist: dict[int, float], count: int, seed: int) -> list[int]:
    rng = random.Random(seed)
    states = list(dist)
    return rng.choices(states, weights=[dist[s] for s in states], k=count)


def load_distribution(path) -> tuple[int | None, dict[int, float]]:
    """Read ``{"n_qubits": N, "distribution": {"0b101": 0.2, ...}}`` or
    ``{"gaussian": {"states": 8, "mean": 3.5, "sigma": 1.5}}``."""
    data = json.loads(Path(path).read_text())
    n = data.get("n_qubits")
    if "gaussian" in data:
        g = data["gaussian"]
        return n, gaussian_distribution(g.get("states", 8), g.get("mean"), g.get("sigma", 1.5))
    dist = {int(k, 0): float(v) for k, v in data["distribution"].items()}
    return n, dist


@dataclass
class DemoResult:
    samples: list[int]
    top: list[TopEntry]
    last_update: int
    visible_at: int
    tally: dict[int, int]
    transmission: TransmissionReport


def run_demo(dist: dict[int, float], shots: int, top_m: int, seed: int, n_qubits: int | None = None,
             kernels=None) -> DemoResult:
    """Feed ``shots`` sampled states as fast as the sorter accepts them, then read the top-M."""
    if n_qubits is None:
        n_qubits = max(1, max(dist).bit_length())
    samples = sample_states(dist, shots, seed)
    hist = Histogram(shots, top_m, n_qubits, kernels=kernels)
    cycle = 0
    for s in samples:
        cycle = max(cycle, hist.busy_until)
        hist.accumulate(s, now=cycle)
    last = cycle
    visible = last + hist.latency
    return DemoResult(samples, hist.top_m_entries(visible), last, visible, hist.tally(),
                      transmission_reduction(shots, top_m, n_qubits))
