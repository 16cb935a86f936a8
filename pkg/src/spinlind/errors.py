"""Exception hierarchy.

``ValidationError`` covers bad user input (CLI exit code 2); ``PhysicsError``
covers inputs the model cannot evaluate (CLI exit code 3).
"""


class SpinlindError(Exception):
    pass


class ValidationError(SpinlindError, ValueError):
    pass


class ParseError(ValidationError):
    pass


class PhysicsError(SpinlindError):
    pass


class DegenerateGeometryError(PhysicsError):
    pass


class DivergentRateError(PhysicsError):
    pass


class InvariantViolation(PhysicsError):
    """A density matrix left the physical set beyond tolerance during propagation."""
