"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain an operation accepts."""


class ProtocolError(RuntimeError):
    """A protocol reached a state its description does not allow."""


class UncoveredBranch(ProtocolError):
    """An observation matched none of the patterns of a branch group."""

    def __init__(self, pc, pattern, origin=None):
        self.pc = pc
        self.pattern = pattern
        self.origin = origin
        where = f" (line {origin})" if origin else ""
        super().__init__(f"no branch covers observed pattern {pattern!r}{where}")


class BudgetExceeded(ProtocolError):
    """Enumeration visited more nodes than the configured budget."""
