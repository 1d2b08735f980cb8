"""
Test suite for mlrank

Unit tests for the numerical layers and end-to-end tests of the solver and
command line.
"""
