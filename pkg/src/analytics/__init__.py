"""
Analytics Module
Question classification, per-type accuracy, dialogue statistics, attribute probes and reports
"""

from .classifier import QuestionClass, QuestionLexicon, classify_question, default_lexicon, tokenize
from .stats import TYPE_ROWS, dialogue_stats, per_type_accuracy, per_type_table
from .report import compare_reports, grolla, load_report, write_comparison, write_report
from .probe import FAMILIES, attribute_probe, dialogue_states, probe_families, result_dialogues

__all__ = [
    "QuestionClass",
    "QuestionLexicon",
    "classify_question",
    "default_lexicon",
    "tokenize",
    "TYPE_ROWS",
    "dialogue_stats",
    "per_type_accuracy",
    "per_type_table",
    "compare_reports",
    "grolla",
    "load_report",
    "write_comparison",
    "write_report",
    "FAMILIES",
    "attribute_probe",
    "dialogue_states",
    "probe_families",
    "result_dialogues",
]
