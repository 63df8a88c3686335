"""gasketcalc: exact calculus on fully symmetric p.c.f. fractals.

Everything numerical in this package is exact rational arithmetic
(fractions.Fraction); decimals appear only when rendering output.
"""
from .errors import ConfigurationError, DomainError, GasketError, VerificationError
from .fractal import (
    BUILTIN_NAMES,
    FractalDescriptor,
    LevelGraph,
    VertexAddress,
    builtin,
    canonical_vertex,
    laplacian_domain,
    level_graph,
    load_descriptor,
    m_distance,
    neighborhood,
    parse_vertex,
)
from .seqalgebra import RelationSpec, SemiCirculantSeq, seq_from, seq_mul, seq_tau, solve_implicit_relation

__version__ = "0.1.0"

__all__ = [
    "BUILTIN_NAMES",
    "ConfigurationError",
    "DomainError",
    "FractalDescriptor",
    "GasketError",
    "LevelGraph",
    "RelationSpec",
    "SemiCirculantSeq",
    "VerificationError",
    "VertexAddress",
    "builtin",
    "canonical_vertex",
    "laplacian_domain",
    "level_graph",
    "load_descriptor",
    "m_distance",
    "neighborhood",
    "parse_vertex",
    "seq_from",
    "seq_mul",
    "seq_tau",
    "solve_implicit_relation",
]
