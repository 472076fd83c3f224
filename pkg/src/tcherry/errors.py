"""Exception types shared across the package.

The CLI maps these onto exit codes, so the split matters: bad caller
input is distinct from structural check failures and from resource
guards.
"""


class TCherryError(Exception):
    """Base class for all package-specific errors."""


class DomainError(TCherryError, ValueError):
    """An argument is outside its documented domain."""


class StructureError(TCherryError, ValueError):
    """A hypergraph or junction tree violates a structural invariant."""


class DataFormatError(TCherryError, ValueError):
    """A CSV/JSON input could not be parsed; message carries file:line."""


class CapacityError(TCherryError, RuntimeError):
    """A resource guard refused the operation (table or search too large)."""


class ConsistencyError(TCherryError, RuntimeError):
    """An internal cross-check failed; indicates a bug, not bad input."""
