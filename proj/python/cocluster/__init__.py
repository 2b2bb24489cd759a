"""Co-clustering of mixed numeric/categorical data by exact Bayesian model
selection.

The heavy lifting lives in the compiled ``_core`` extension; this package
re-exports its public surface.
"""

from ._core import (
    CoclusterError,
    Dataset,
    DomainError,
    ParameterError,
    ParseError,
    SchemaError,
    StructuralError,
    __version__,
    fit,
    import_model,
    parse_long,
    parse_wide,
)

__all__ = [
    "CoclusterError",
    "Dataset",
    "DomainError",
    "ParameterError",
    "ParseError",
    "SchemaError",
    "StructuralError",
    "__version__",
    "fit",
    "import_model",
    "parse_long",
    "parse_wide",
]
