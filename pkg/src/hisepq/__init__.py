"""Toolchain for a hybrid quantum control processor ISA: encoding, assembly,
cycle-level simulation, onboard histogram and program-size benchmarks."""

from . import asm, core, histogram, isa
from ._kernels import BACKEND
from .asm import assemble, disassemble
from .core import ErrorKind, RunStatus, SimConfig, Simulator
from .isa import ProgramImage

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ErrorKind",
    "ProgramImage",
    "RunStatus",
    "SimConfig",
    "Simulator",
    "asm",
    "assemble",
    "core",
    "disassemble",
    "histogram",
    "isa",
]
