"""typlab: finite-N experiments on typicality, entropy and randomness."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    Alphabet,
    DiscreteDistribution,
    RngStream,
    SymbolStream,
    SymbolString,
    TyplabError,
    empirical_measure,
    make_distribution,
    sample_string,
    string_probability,
)

__all__ = [
    "__version__",
    "Alphabet",
    "DiscreteDistribution",
    "RngStream",
    "SymbolStream",
    "SymbolString",
    "TyplabError",
    "empirical_measure",
    "make_distribution",
    "sample_string",
    "string_probability",
]
