"""The two text-preprocessing variants.

``preprocess_classical`` aggressively cleans and tokenizes for sparse
models (TF-IDF baselines). ``preprocess_minimal`` only normalizes
mentions, URLs, and emoji, and is the canonical form for embedding
providers: content hashes are taken over its output.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

_URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_MENTION_RE = re.compile(r"@\w+")

# Token grammar for the tweet-aware tokenizer: URLs, mentions, and hashtags
# are matched before plain words so their punctuation stays attached.
_TOKEN_RE = re.compile(
    r"""
    (?P<url>(?:https?://|www\.)\S+)
  | (?P<mention>@\w+)
  | (?P<hashtag>\#\w+)
  | (?P<word>\w+(?:['’\-]\w+)*)
  | (?P<punct>\S)
    """,
    re.VERBOSE | re.IGNORECASE,
)

_NUMBER_RE = re.compile(r"^\d+$")
_INNER_PUNCT_RE = re.compile(r"[^\w]", re.UNICODE)


@dataclass(frozen=True)
class TokenSequence:
    """Ordered lowercase tokens produced by classical preprocessing."""

    tokens: tuple[str, ...]
    source_id: str = ""

    @property
    def is_empty(self) -> bool:
        return not self.tokens

    def __iter__(self):
        return iter(self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)


def _read_asset(name: str) -> str:
    return resources.files("sentinel.assets").joinpath(name).read_text(encoding="utf-8")


@lru_cache(maxsize=1)
def default_stopwords() -> frozenset[str]:
    """The frozen ~179-word English stopword asset."""
    return frozenset(
        line.strip() for line in _read_asset("stopwords.txt").splitlines() if line.strip()
    )


@lru_cache(maxsize=1)
def default_hashtag_blocklist() -> frozenset[str]:
    """Blocklisted deployment-wide hashtags, lowercase with leading '#'."""
    out = set()
    for line in _read_asset("hashtag_blocklist.txt").splitlines():
        line = line.strip().lower()
        if line.startswith("#") and len(line) > 1 and not line.startswith("# "):
            out.add(line)
    return frozenset(out)


@lru_cache(maxsize=1)
def _emoji_table() -> dict[str, str]:
    table: dict[str, str] = {}
    for line in _read_asset("emoji_names.tsv").splitlines():
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


def _strip_control_chars(text: str) -> str:
    return "".join(ch for ch in text if unicodedata.category(ch) not in ("Cc", "Cf"))


def preprocess_minimal(text: str) -> str:
    """Replace mentions with USR, URLs with HTTP, and emoji with :name: text.

    Everything else is untouched. This is the canonical text form used to
    key embedding fixtures, so its behavior is pinned by the emoji asset.
    """
    text = _MENTION_RE.sub("USR", text)
    text = _URL_RE.sub("HTTP", text)
    return _emoji_re().sub(lambda m: f":{_emoji_table()[m.group(0)]}:", text)


def preprocess_classical(
    text: str,
    stopwords: frozenset[str] | set[str] | None = None,
    hashtag_blocklist: frozenset[str] | set[str] | None = None,
    source_id: str = "",
) -> TokenSequence:
    """Clean and tokenize for sparse models.

    Removes control characters, URLs, mentions, standalone numbers,
    punctuation (including repeated ./?/! runs), and stopwords; drops
    blocklisted election hashtags entirely and keeps the rest minus '#';
    lowercases everything. Tokens that still contain '@' or an 'http'
    fragment are dropped so the output is guaranteed clean. An empty
    result is legal; check ``TokenSequence.is_empty``.
    """
    if stopwords is None:
        stopwords = default_stopwords()
    if hashtag_blocklist is None:
        hashtag_blocklist = default_hashtag_blocklist()

    text = _strip_control_chars(text)
    tokens: list[str] = []
    for match in _TOKEN_RE.finditer(text):
        kind = match.lastgroup
        if kind in ("url", "mention", "punct"):
            continue
        token = match.group(0).lower()
        if kind == "hashtag":
            if token in hashtag_blocklist:
                continue
            token = token[1:]
        if token in stopwords:
            continue
        if _NUMBER_RE.match(token):
            continue
        token = _INNER_PUNCT_RE.sub("", token)
        if not token or _NUMBER_RE.match(token):
            continue
        if token in stopwords:
            continue
        if "http" in token or "@" in token:
            continue
        tokens.append(token)
    return TokenSequence(tokens=tuple(tokens), source_id=source_id)
