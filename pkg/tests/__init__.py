"""
Test package for the Dirichlet symbol laboratory.
"""
