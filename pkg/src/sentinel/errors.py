"""Exception hierarchy shared across the toolkit.

The CLI maps the four base categories to exit codes, so new exceptions
should subclass one of ConfigError, DataError, ProviderError, ModelError.
"""


class SentinelError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(SentinelError):
    """Invalid or inconsistent experiment configuration."""


class DataError(SentinelError):
    """Corpus files, labels, or splits violate a contract."""


class UnmappedLabelError(DataError):
    """A source-taxonomy label has no entry in the deployment mapping."""

    def __init__(self, label: str, deployment: str):
        self.label = label
        self.deployment = deployment
        super().__init__(f"label {label!r} is not mapped for deployment {deployment!r}")


class ProviderError(SentinelError):
    """Embedding/sentiment provider failure."""


class MissingEmbeddingError(ProviderError):
    """File-mode provider has no record for the requested content hash."""

    def __init__(self, content_hash: str):
        self.content_hash = content_hash
        super().__init__(f"no fixture record for content hash {content_hash}")


class TransportError(ProviderError):
    """Service unreachable or timed out after retries."""

    def __init__(self, message: str, retries: int):
        self.retries = retries
        super().__init__(f"{message} (after {retries} retries)")


class SimplexViolationError(ProviderError):
    """Sentiment triple does not lie on the probability simplex."""


class ModelTagMismatchError(ProviderError):
    """Vectors from more than one model tag were mixed in one experiment."""


class ModelError(SentinelError):
    """Training or inference contract violation."""


class DimensionMismatchError(ModelError):
    """Input feature dimension does not match the model."""


class DegenerateLabelsError(ModelError):
    """Fewer than two distinct labels where at least two are required."""


class UnseenLabelError(ModelError):
    """Warm-start data contains a label the source model does not know."""


class NonFiniteError(ModelError):
    """NaN or Inf encountered in a feature matrix or parameters."""


class BundleError(ModelError):
    """Pipeline bundle cannot be loaded."""


class CorruptBundleError(BundleError):
    """Bundle file is truncated, unparseable, or fails its content hash."""


class VersionMismatchError(BundleError):
    """Bundle schema version differs from the one this build writes."""

    def __init__(self, found: int, supported: int):
        self.found = found
        self.supported = supported
        super().__init__(
            f"bundle schema version {found} is not supported (this build writes {supported})"
        )
