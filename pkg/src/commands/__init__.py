"""
Commands Module
Bodies of the generate / train / eval / compare subcommands
"""

from .context import RunContext
from .generate import cmd_generate
from .train import cmd_train
from .evaluate import SUITES, Evaluator, cmd_eval
from .compare import cmd_compare

__all__ = [
    "RunContext",
    "cmd_generate",
    "cmd_train",
    "SUITES",
    "Evaluator",
    "cmd_eval",
    "cmd_compare",
]
