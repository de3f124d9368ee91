"""
Tests Module
Test suite for the imagination, oracle, guesser and gameplay pipeline
"""
