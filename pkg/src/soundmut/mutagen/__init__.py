"""Mutant generation: security operators, mutation schemes and seeding."""

from soundmut.mutagen.ledger import Ledger, LedgerError, Location, MutantRecord, relocate, tag_locations
from soundmut.mutagen.mip import InjectionPoint, MutationScheme, SchemeKind, compute_mip, parse_schemes
from soundmut.mutagen.operators import (
    DEFAULT_CRYPTO,
    DEFAULT_LEAK,
    Goal,
    OperatorError,
    SecurityOperator,
    load_operator,
    load_operators,
)
from soundmut.mutagen.seeding import (
    Dropped,
    SeedingError,
    SeedResult,
    apply_scheme,
    seed_all,
    seed_isolated,
)

__all__ = [
    "DEFAULT_CRYPTO", "DEFAULT_LEAK", "Dropped", "Goal", "InjectionPoint", "Ledger",
    "LedgerError", "Location", "MutantRecord", "MutationScheme", "OperatorError",
    "SchemeKind", "SecurityOperator", "SeedResult", "SeedingError", "apply_scheme",
    "compute_mip", "load_operator", "load_operators", "parse_schemes", "seed_all",
    "relocate", "seed_isolated", "tag_locations",
]
