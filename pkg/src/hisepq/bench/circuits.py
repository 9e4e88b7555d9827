"""Layered circuit IR and the benchmark generators."""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

SYNTHETIC_SINGLE_KINDS = ("X", "Y", "Z", "H")
SYNTHETIC_TWO_KIND = "CZ"
TWO_QUBIT_KINDS = frozenset({"CZ", "CNOT", "SWAP"})


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(self.qubits))
        want = 2 if self.kind in TWO_QUBIT_KINDS else 1
        if len(self.qubits) != want:
            raise ValueError(f"{self.kind} takes {want} qubit(s), got {self.qubits}")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"{self.kind} operands must differ: {self.qubits}")

    @property
    def arity(self) -> int:
        return len(self.qubits)


@dataclass
class CircuitIR:
    """Circuit as an ordered list of layers; layer i runs at time step i."""

    n_qubits: int
    layers: list[list[Gate]] = field(default_factory=list)
    name: str = ""

    def __post_init__(self):
        for i, layer in enumerate(self.layers):
            self.check_layer(layer, i)

    def check_layer(self, layer: Iterable[Gate], index: int = -1) -> None:
        seen: set[int] = set()
        for g in layer:
            for q in g.qubits:
                if not 0 <= q < self.n_qubits:
                    raise ValueError(f"layer {index}: qubit {q} outside 0..{self.n_qubits - 1}")
                if q in seen:
                    raise ValueError(f"layer {index}: qubit {q} used twice")
                seen.add(q)

    def append(self, layer: Iterable[Gate]) -> None:
        layer = list(layer)
        self.check_layer(layer, len(self.layers))
        self.layers.append(layer)

    @property
    def depth(self) -> int:
        return len(self.layers)

    def gate_count(self) -> int:
        return sum(len(layer) for layer in self.layers)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "n_qubits": self.n_qubits,
            "layers": [[{"gate": g.kind, "qubits": list(g.qubits)} for g in layer] for layer in self.layers],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CircuitIR":
        layers = [[Gate(g["gate"], tuple(g["qubits"])) for g in layer] for layer in data["layers"]]
        return cls(int(data["n_qubits"]), layers, data.get("name", ""))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_json(cls, text: str) -> "CircuitIR":
        return cls.from_dict(json.loads(text))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> "CircuitIR":
        return cls.from_json(Path(path).read_text())


def gen_synthetic(n_qubits: int, depth: int, density: float, seed: int) -> CircuitIR:
    """Random layered circuit touching floor(density * n) qubits per layer.

    Each selected qubit draws a kind uniformly from X, Y, Z, H and CZ.  A CZ
    pairs the qubit with the next selected qubit in index order; when that
    partner is missing or already used the qubit falls back to a random
    single-qubit kind.
    """
    if not 0 < density <= 1:
        raise ValueError(f"density must lie in (0, 1], got {density}")
    per_layer = math.floor(density * n_qubits + 1e-9)
    if per_layer < 1:
        raise ValueError(f"density {density} selects no qubit out of {n_qubits}")
    rng = random.Random(seed)
    kinds = SYNTHETIC_SINGLE_KINDS + (SYNTHETIC_TWO_KIND,)
    circ = CircuitIR(n_qubits, name=f"Syn_{round(density * 100)}")
    for _ in range(depth):
        chosen = sorted(rng.sample(range(n_qubits), per_layer))
        layer = []
        i = 0
        while i < len(chosen):
            kind = rng.choice(kinds)
            if kind == SYNTHETIC_TWO_KIND:
                if i + 1 < len(chosen):
                    layer.append(Gate(kind, (chosen[i], chosen[i + 1])))
                    i += 2
                    continue
                kind = rng.choice(SYNTHETIC_SINGLE_KINDS)
            layer.append(Gate(kind, (chosen[i],)))
            i += 1
        circ.append(layer)
    return circ


def _full(kind: str, n: int) -> list[Gate]:
    return [Gate(kind, (q,)) for q in range(n)]


def gen_grover_operator(n_qubits: int) -> CircuitIR:
    """Diffusion operator H X (C^{n-1}Z) X H on ``n_qubits`` qubits.

    The multi-controlled Z is expanded as an ancilla-free CNOT staircase:
    ``n-2`` compute layers CNOT(j -> j+1), a CZ on the last two qubits, and the
    mirrored uncompute layers.  Every staircase layer except the first also
    carries one phase gate (T on the way in, TDG on the way out) on the qubit
    the staircase just left.  This reproduces the gate pattern and the linear
    depth of such decompositions (2n + 1 layers in total); it is a structural
    model for program-size accounting, not a unitary-exact synthesis.
    """
    n = n_qubits
    if n < 2:
        raise ValueError("the diffusion operator needs at least 2 qubits")
    circ = CircuitIR(n, name="GO")
    circ.append(_full("H", n))
    circ.append(_full("X", n))
    for j in range(n - 2):
        layer = [Gate("CNOT", (j, j + 1))]
        if j >= 1:
            layer.append(Gate("T", (j - 1,)))
        circ.append(layer)
    middle = [Gate("CZ", (n - 2, n - 1))]
    if n >= 3:
        middle.append(Gate("T", (n - 3,)))
    circ.append(middle)
    for j in range(n - 3, -1, -1):
        layer = [Gate("CNOT", (j, j + 1))]
        if j >= 1:
            layer.append(Gate("TDG", (j - 1,)))
        circ.append(layer)
    circ.append(_full("X", n))
    circ.append(_full("H", n))
    return circ


def grover_depth(n_qubits: int) -> int:
    return 2 * n_qubits + 1
