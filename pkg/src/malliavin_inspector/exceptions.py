from typing import Optional


class MalliavinError(ValueError):
    """Base class for every error raised by the library."""


class ConfigError(MalliavinError):
    """Invalid experiment configuration or unreadable config file."""


class DescriptorError(MalliavinError):
    """Invalid JSON model or motif descriptor.

    Attributes:
        path: Location of the first violation, e.g. ``components[2].cond_pmf[1]``
    """

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class SizeCapExceeded(MalliavinError):
    """The number of (latent, configuration) cells exceeds the configured cap."""

    def __init__(self, cells: int, cap: int):
        self.cells = cells
        self.cap = cap
        super().__init__(f"Enumeration needs {cells} cells, size cap is {cap}")


class UnknownIndex(MalliavinError):
    """An index that is not part of the model's index set."""

    def __init__(self, index):
        self.index = index
        super().__init__(f"Unknown index: {index!r}")


class MismatchedModel(MalliavinError):
    """Functionals (or processes) built on different models were combined."""


class IndexOutOfRange(MalliavinError):
    """Chaos order outside 0..|A|."""


class NotCentered(MalliavinError):
    """A functional required to have E[F|Z] = 0 does not."""


class NegativeTime(MalliavinError):
    """A semigroup or dynamics time parameter is negative."""


class DegenerateVariance(MalliavinError):
    """Some latent state gives zero conditional variance."""


class NotStandardized(MalliavinError):
    """A functional expected to satisfy E[F|Z] = 0 and E[F^2] = 1 does not."""


class NotHomogeneous(MalliavinError):
    """A functional has no homogeneous-sum description attached."""


class NotPureChaos(MalliavinError):
    """A functional expected to live in a single chaos does not."""


class NonProductForm(MalliavinError):
    """Hoeffding components lack the product structure needed by the ratio test."""


class ConditionFailed(MalliavinError):
    """A structural hypothesis (EGF, HC, H1 or H2) does not hold.

    Attributes:
        condition: Name of the failing condition
    """

    def __init__(self, condition: str, detail: Optional[str] = None):
        self.condition = condition
        message = f"Condition {condition} failed"
        if detail:
            message = f"{message}: {detail}"
        super().__init__(message)


class MotifTooLarge(MalliavinError):
    """Motif has more vertices than the hypergraph."""


class DecompositionTooLarge(MalliavinError):
    """Hoeffding decomposition of a motif count needs too many subsets."""


class EmptyFamily(MalliavinError):
    """No admissible sub-hypergraph for the rate minimisation."""


class BudgetExceeded(MalliavinError):
    """An experiment schedule exceeds the compute budget."""


class ZeroVarianceError(MalliavinError):
    """A statistic to be standardized has zero variance."""
