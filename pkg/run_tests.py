#!/usr/bin/env python3
"""
Test Runner

    python run_tests.py                      # fast suite
    python run_tests.py oracle guesser       # only tests/test_oracle.py and tests/test_guesser.py
    python run_tests.py --runslow            # include the full-size statistical tests

Anything that is not a component name is passed through to pytest.
"""

import sys
import subprocess
from pathlib import Path

TESTS = Path(__file__).parent / "tests"


def split_args(args):
    """Component names -> test files; everything else stays a pytest argument"""
    files, passthrough = [], []
    for arg in args:
        path = TESTS / f"test_{arg}.py"
        if not arg.startswith("-") and path.is_file():
            files.append(str(path))
        else:
            passthrough.append(arg)
    return files or [str(TESTS)], passthrough


def run_tests(args=None):
    """
    Run pytest with common options

    Args:
        args: Component names and/or additional pytest arguments
    """
    targets, passthrough = split_args(args or [])
    cmd = [sys.executable, "-m", "pytest", *targets, "-v", "--tb=short", "--color=yes", *passthrough]

    print("=" * 60)
    print(f"Running Imagine Test Suite ({len(targets)} target(s))")
    if "--runslow" not in passthrough:
        print("slow tests skipped; add --runslow")
    print("=" * 60)
    print()

    return subprocess.run(cmd).returncode


if __name__ == "__main__":
    sys.exit(run_tests(sys.argv[1:]))
