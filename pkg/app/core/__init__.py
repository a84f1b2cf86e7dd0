"""
Core numerics: symbols, Bohr lifts, classification, Carleson boxes, the
factorization laboratory, flat constructions and approximation numbers.
"""

from .errors import AnalysisError, ClassMembershipError

__all__ = ["AnalysisError", "ClassMembershipError"]
