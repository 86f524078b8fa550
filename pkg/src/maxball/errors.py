"""Exception hierarchy. Every error raised by the library derives from MaxballError."""


class MaxballError(Exception):
    pass


class ParseError(MaxballError):
    """Input file is malformed or in an unsupported dialect."""


class EmptyMesh(MaxballError):
    """No triangles left after validation."""


class NotWatertight(MaxballError):
    """Mesh has boundary or non-manifold edges, or inconsistent winding."""

    def __init__(self, message, report=None):
        self.report = report
        super().__init__(message)


class TooFewPoints(MaxballError):
    pass


class DegenerateOccupancy(MaxballError):
    """Every ray cast from a point grazed an edge or vertex."""

    def __init__(self, point):
        self.point = tuple(float(c) for c in point)
        super().__init__(f"all retry rays degenerate at point {self.point}")


class NoInnerPoints(MaxballError):
    pass


class LengthMismatch(MaxballError):
    pass


class SubsetTooLarge(MaxballError):
    pass


class EmptySkeleton(MaxballError):
    pass


class EmptySet(MaxballError):
    pass


class UnsupportedResolution(MaxballError):
    pass


class InvalidConfig(MaxballError):
    pass
