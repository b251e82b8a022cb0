"""Canonical text form shared with fixture consumers.

Mentions become ``USR``, URLs become ``HTTP``, and known emoji become
``:name:`` text. Fixture keys are sha256 hashes over this form, so two
raw texts that normalize identically always resolve to the same record.
The emoji table is a plain data asset; treat it as frozen, because
changing it silently re-keys every fixture.
"""

from __future__ import annotations

import hashlib
import re
from functools import lru_cache
from importlib import resources

_URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_MENTION_RE = re.compile(r"@\w+")


@lru_cache(maxsize=1)
def _emoji_table() -> dict[str, str]:
    raw = resources.files("embedsvc.assets").joinpath("emoji_names.tsv").read_text("utf-8")
    table: dict[str, str] = {}
    for line in raw.splitlines():
        if not line.strip():
            continue
        emoji, name = line.split("\t")
        table[emoji] = name
    return table


@lru_cache(maxsize=1)
def _emoji_re() -> re.Pattern:
    # Longest-first so variation-selector forms win over their base char.
    keys = sorted(_emoji_table(), key=len, reverse=True)
    return re.compile("|".join(re.escape(k) for k in keys))


def canonical_text(text: str) -> str:
    """Normalize mentions, URLs, and emoji; leave everything else alone."""
    text = _MENTION_RE.sub("USR", text)
    text = _URL_RE.sub("HTTP", text)
    return _emoji_re().sub(lambda m: f":{_emoji_table()[m.group(0)]}:", text)


def text_key(text: str) -> str:
    """Fixture key: sha256 hex digest of the canonical text form."""
    return hashlib.sha256(canonical_text(text).encode("utf-8")).hexdigest()
