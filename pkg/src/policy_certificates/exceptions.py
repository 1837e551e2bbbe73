"""
Custom exceptions for policy-certificates.

Provides a hierarchy of exceptions so callers (and the CLI) can tell
configuration problems, numeric failures and storage failures apart.
"""


class PolicyCertificatesError(Exception):
    """
    Base exception for all policy-certificates errors.

    All custom exceptions inherit from this for consistent error handling.
    """
    pass


class InvalidMDPError(PolicyCertificatesError):
    """
    Raised when an MDP (given or realized from contexts) fails validation.

    Attributes:
        violations: List of MdpViolation objects describing what failed
    """

    def __init__(self, message: str, violations: list = None):
        super().__init__(message)
        self.violations = violations or []


class InvalidPolicyError(PolicyCertificatesError):
    """
    Raised when a policy table is incomplete or references unknown actions.

    Attributes:
        expected_shape: The (H, S) shape the policy should have
    """

    def __init__(self, message: str, expected_shape: tuple = None):
        super().__init__(message)
        self.expected_shape = expected_shape


class DimensionError(PolicyCertificatesError):
    """
    Raised when a context or trace does not match the model dimensions.

    Attributes:
        expected: Expected dimension
        actual: Dimension that was supplied
    """

    def __init__(self, message: str, expected: int = None, actual: int = None):
        super().__init__(message)
        self.expected = expected
        self.actual = actual


class NumericalError(PolicyCertificatesError):
    """
    Raised when a least-squares matrix cannot be factorized.

    With a positive regularizer this signals a bug, so it is never recovered from.

    Attributes:
        state: State index of the offending matrix
        action: Action index of the offending matrix
        original_error: The original exception that caused this error
    """

    def __init__(
        self,
        message: str,
        state: int = None,
        action: int = None,
        original_error: Exception = None,
    ):
        super().__init__(message)
        self.state = state
        self.action = action
        self.original_error = original_error


class InfeasibleSetError(PolicyCertificatesError):
    """
    Raised when the box-constrained probability simplex is empty.

    Attributes:
        lower_mass: Sum of the lower box bounds (must be <= 1)
        upper_mass: Sum of the upper box bounds (must be >= 1)
    """

    def __init__(self, message: str, lower_mass: float = None, upper_mass: float = None):
        super().__init__(message)
        self.lower_mass = lower_mass
        self.upper_mass = upper_mass


class ConfigurationError(PolicyCertificatesError):
    """
    Raised when an algorithm or experiment configuration is invalid.

    Attributes:
        key: Optional configuration key the error refers to
    """

    def __init__(self, message: str, key: str = None):
        super().__init__(message)
        self.key = key


class StorageError(PolicyCertificatesError):
    """
    Raised when reading or writing instances, checkpoints or run outputs fails.

    Attributes:
        operation: The storage operation that failed
        original_error: The original exception that caused this error
    """

    def __init__(self, message: str, operation: str = None, original_error: Exception = None):
        super().__init__(message)
        self.operation = operation
        self.original_error = original_error


class ReportSchemaError(StorageError):
    """
    Raised when report files have an unknown or mutually inconsistent schema.

    Attributes:
        file_path: Path of the offending file
    """

    def __init__(self, message: str, file_path: str = None):
        super().__init__(message, operation="load_report")
        self.file_path = file_path
