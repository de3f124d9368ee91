"""
Imagine
Imagination-regularized Oracle and Guesser agents for a synthetic guessing game
"""

__version__ = "1.0.0"
__author__ = "Imagine Team"
