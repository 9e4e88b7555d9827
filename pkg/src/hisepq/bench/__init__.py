"""Benchmark circuits, their compilation and the program-size comparison."""

from .circuits import CircuitIR, Gate, gen_grover_operator, gen_synthetic, grover_depth
from .compile import BaselineCost, CompiledProgram, compile_hisepq, compile_quasar_model, compile_qv_model
from .report import SUITES, SizeReport, SizeRow, read_report_csv, report, report_to_csv

__all__ = [
    "BaselineCost",
    "CircuitIR",
    "CompiledProgram",
    "Gate",
    "SUITES",
    "SizeReport",
    "SizeRow",
    "compile_hisepq",
    "compile_quasar_model",
    "compile_qv_model",
    "gen_grover_operator",
    "gen_synthetic",
    "grover_depth",
    "read_report_csv",
    "report",
    "report_to_csv",
]
