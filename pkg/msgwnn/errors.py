"""Exception hierarchy shared by the library and the CLI."""

from typing import Optional


class MsGwnnError(Exception):
    """Base class for all library errors."""


class ConfigError(MsGwnnError):
    """Invalid experiment configuration or command-line value."""


class ValidationError(MsGwnnError):
    """Input data violates a documented invariant."""


class InvalidGraph(ValidationError):
    pass


class ZeroDegreeNode(ValidationError):
    def __init__(self, node: int):
        super().__init__(f"node {node} has zero degree; isolated nodes need a self-loop")
        self.node = node


class DimensionMismatch(ValidationError):
    pass


class ShapeMismatch(ValidationError):
    pass


class NodeOutOfRange(ValidationError):
    def __init__(self, node: int, n: int):
        super().__init__(f"node index {node} out of range for graph with {n} nodes")
        self.node = node
        self.n = n


class ScaleOverflow(ValidationError):
    pass


class SpectrumBoundViolation(ValidationError):
    pass


class DegenerateSpectrum(ValidationError):
    pass


class NotDivisible(ValidationError):
    def __init__(self, height: int, width: int, patch: int):
        super().__init__(f"image {height}x{width} is not divisible by patch size {patch}")
        self.height = height
        self.width = width
        self.patch = patch


class InconsistentDataset(ValidationError):
    pass


class InvalidSpec(ValidationError):
    pass


class ClassTooSmall(ValidationError):
    def __init__(self, label: int, count: int):
        super().__init__(f"class {label} has {count} sample(s); at least 2 are needed to split")
        self.label = label
        self.count = count


class InvalidModel(ValidationError):
    pass


class CheckpointMismatch(ValidationError):
    pass


class ConvergenceFailure(MsGwnnError):
    def __init__(self, message: str, residual: Optional[float] = None):
        if residual is not None:
            message = f"{message} (residual {residual:.3e})"
        super().__init__(message)
        self.residual = residual
