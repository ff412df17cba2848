"""Compile checking, error classification, and rule-based repair."""

from forge.compilebench.adapters import CompilerAdapter, load_adapter, stub_adapter
from forge.compilebench.core import (
    AccuracyReport,
    CATEGORIES,
    CompileResult,
    REPAIRABLE_CATEGORIES,
    RepairOutcome,
    classify_error,
    compilation_accuracy,
    compile_source,
    repair,
    undeclared_variables,
)

__all__ = [
    "AccuracyReport",
    "CATEGORIES",
    "CompileResult",
    "CompilerAdapter",
    "REPAIRABLE_CATEGORIES",
    "RepairOutcome",
    "classify_error",
    "compilation_accuracy",
    "compile_source",
    "load_adapter",
    "repair",
    "stub_adapter",
    "undeclared_variables",
]
