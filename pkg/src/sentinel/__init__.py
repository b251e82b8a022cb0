"""Two-step triage of crowdsourced election reports.

An informativeness gate filters noise; a type classifier sorts what
remains into canonical information types. Both are class-weighted
linear models over sentence embeddings fused with context, temporal,
and sentiment features, wrapped in a deterministic experiment harness
with cross-domain zero- and few-shot protocols.
"""

from .corpus import (
    Channel,
    Deployment,
    ElectionReport,
    InfoType,
    Informativeness,
    Language,
)
from .errors import SentinelError

__version__ = "0.1.0"

__all__ = [
    "Channel",
    "Deployment",
    "ElectionReport",
    "InfoType",
    "Informativeness",
    "Language",
    "SentinelError",
    "__version__",
]
