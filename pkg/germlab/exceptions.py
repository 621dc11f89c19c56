"""
Error Types
Every failure the library raises, each carrying the CLI exit code it maps to
"""


class GermlabError(Exception):
    """Base error; `detail` is the human-readable message"""

    exit_code = 1

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class InvalidInputError(GermlabError):
    """Bad parameters, malformed files or violated preconditions"""

    exit_code = 2


class DegeneracyError(GermlabError):
    """A numerical computation hit a degenerate configuration"""


class ProjectionError(DegeneracyError):
    """No generic projection direction was found within the retry budget"""


class DisconnectedError(DegeneracyError):
    """Two arcs are not connected in the inner-distance mesh"""

    def __init__(self, detail: str, rung: float):
        super().__init__(detail)
        self.rung = rung


class NotAMapError(GermlabError):
    """A mapped sample does not land on the target germ"""

    def __init__(self, detail: str, sheet: str):
        super().__init__(detail)
        self.sheet = sheet


class ConstructionError(GermlabError):
    """A builder could not realize its geometry"""
