"""Exception types shared across the package."""


class DomainError(ValueError):
    """An index fell outside the domain a sequence or weight is defined on."""


class DegenerateIntervalError(ValueError):
    """Interval average requested over a window whose normalizer vanishes."""


class ConstructionError(RuntimeError):
    """A derived weight object could not be built from the given inputs."""


class HypothesisViolation(ConstructionError):
    """A construction's monotonicity or step-size hypothesis failed.

    Carries the name of the failed hypothesis and the first offending index
    so callers can report exactly what broke.
    """

    def __init__(self, hypothesis: str, index: int, detail: str = ""):
        self.hypothesis = hypothesis
        self.index = index
        msg = f"hypothesis '{hypothesis}' violated at index {index}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class CatalogError(KeyError):
    """Unknown name looked up in a scheme/sequence/system catalog."""


class RangeExhaustedError(ValueError):
    """A pattern shift pushed the configuration past the scannable range."""
