"""
Exceptions raised by the numerical modules.

Anything that is a numerical failure derives from GLVortexError so scans and the
CLI can catch it in one place. Bad inputs still raise ValueError.
"""


class GLVortexError(RuntimeError):
    pass


class ProfileError(GLVortexError):
    pass


class IntegrationError(GLVortexError):
    def __init__(self, message, radius=None):
        if radius is not None:
            message = f'{message} (reached r={radius:.6g})'
        super().__init__(message)
        self.radius = radius


class DichotomyError(GLVortexError):
    pass


class NonContractionError(GLVortexError):
    pass


class QuadratureError(GLVortexError):
    pass


class DegenerateBasisError(GLVortexError):
    pass


class IllConditionedError(GLVortexError):
    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class NoConvergenceError(GLVortexError):
    pass


class TailTooLargeError(GLVortexError):
    pass


class VerificationError(GLVortexError):
    def __init__(self, message, failed=()):
        super().__init__(message)
        self.failed = list(failed)
