"""Consistency-based merging of variability models.

A knowledge base is a set of enumerated variables plus propositional
constraints over variable-value atoms. Merging two such bases guards
every source constraint with its origin context, then proves guards
away where possible and deletes constraints the rest already implies,
preserving the union of the two solution spaces throughout.
"""

from .bench import BenchRow, run_benchmark
from .errors import (
    AlignmentError,
    BenchError,
    ConstraintNotFoundError,
    GenerationError,
    InconsistentInputError,
    KbError,
    NotContextualizedError,
    ParseError,
    SpaceTooLargeError,
    UnassignedVariableError,
    ValidationError,
)
from .merge import (
    MergeReport,
    align,
    ckb_merge,
    contextualize,
    intersection_count,
    is_redundant,
)
from .model import (
    And,
    Assignment,
    Atom,
    AtomOp,
    Constraint,
    Formula,
    Implies,
    KnowledgeBase,
    Not,
    Or,
    Variable,
    evaluate,
    free_vars,
    is_context_guarded,
    negate,
    strip_context,
    validate_kb,
)
from .solver import (
    CountResult,
    SolveStats,
    Tri,
    brute_force_solutions,
    count_solutions,
    enumerate_solutions,
    is_consistent,
    partial_eval,
)
from .synth import SynthConfig, synthesize_pair
from .textio import format_formula, parse_formula, parse_kb, serialize_kb, write_bench_csv

__version__ = "0.1.0"

__all__ = [
    "AlignmentError",
    "And",
    "Assignment",
    "Atom",
    "AtomOp",
    "BenchError",
    "BenchRow",
    "Constraint",
    "ConstraintNotFoundError",
    "CountResult",
    "Formula",
    "GenerationError",
    "Implies",
    "InconsistentInputError",
    "KbError",
    "KnowledgeBase",
    "MergeReport",
    "Not",
    "NotContextualizedError",
    "Or",
    "ParseError",
    "SolveStats",
    "SpaceTooLargeError",
    "SynthConfig",
    "Tri",
    "UnassignedVariableError",
    "ValidationError",
    "Variable",
    "align",
    "brute_force_solutions",
    "ckb_merge",
    "contextualize",
    "count_solutions",
    "enumerate_solutions",
    "evaluate",
    "format_formula",
    "free_vars",
    "intersection_count",
    "is_consistent",
    "is_context_guarded",
    "is_redundant",
    "negate",
    "parse_formula",
    "parse_kb",
    "partial_eval",
    "run_benchmark",
    "serialize_kb",
    "strip_context",
    "synthesize_pair",
    "validate_kb",
    "write_bench_csv",
]
