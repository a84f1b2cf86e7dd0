"""
Dirichlet Symbol Lab

Structural invariants, compactness classification and numerical evidence for
composition operators with Dirichlet polynomial symbols on the Hardy space of
Dirichlet series.
"""

__version__ = "1.0.0"
__description__ = "Composition operators with Dirichlet polynomial symbols"
