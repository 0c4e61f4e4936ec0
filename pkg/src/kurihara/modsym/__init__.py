"""Exact plus/minus modular symbols for Gamma_0(N).

Builds the Manin-symbol presentation on P^1(Z/N), cuts out the Hecke
eigenline of a rational newform, normalizes it p-adically, and evaluates
[a/m] as exact rationals.  Large levels are reached either natively
(sparse relation collapse + blocked dense eliminations over word-size
prime fields) or through quadratic twist synthesis from a partner curve
of smaller conductor.
"""

from .p1 import P1Index
from .space import SymbolSpace, build_space
from .eigen import EigenSymbol, TwistedEigenSymbol, eigensymbol_for, twisted_eigensymbol
from .store import export_eigensymbol, import_eigensymbol

__all__ = [
    "P1Index",
    "SymbolSpace",
    "build_space",
    "EigenSymbol",
    "TwistedEigenSymbol",
    "eigensymbol_for",
    "twisted_eigensymbol",
    "export_eigensymbol",
    "import_eigensymbol",
]
