class CongfacException(Exception):
    pass

class DomainError(CongfacException):
    pass

class InstanceFormatError(CongfacException):
    pass

class InvalidPathError(CongfacException):
    pass

class InfeasibleSolutionError(CongfacException):
    pass

class NotADagError(CongfacException):
    pass

class UnsupportedInstanceError(CongfacException):
    pass

class InfeasibleError(CongfacException):
    pass

class GuardExceededError(CongfacException):

    def __init__(self, guard: str, limit: int, needed: int=None, hint: str=None):
        self.guard = guard
        self.limit = limit
        self.needed = needed
        message = f"Guard {guard} exceeded (limit {limit}"
        if needed is not None:
            message += f", needed {needed}"
        message += ")"
        if hint:
            message += f": {hint}"
        super().__init__(message)
