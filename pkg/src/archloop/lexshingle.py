"""Tokenization of candidate source code and token-level k-shingle sets.

The lexer is pragmatic: it covers Python-style keywords, identifiers,
numeric and string literals, operators, and delimiters without building a
parse tree. Comments and layout (whitespace, blank lines, indentation)
contribute no tokens, so shingle sets reflect code content only.
"""

from __future__ import annotations

import hashlib
import keyword
import re
from dataclasses import dataclass, field

from .errors import OversizeInputError

KEYWORDS = frozenset(keyword.kwlist)

MAX_SOURCE_BYTES = 1 << 20  # one generated candidate is never this large
DEFAULT_SHINGLE_K = 10

_IDENT_RE = re.compile(r"[A-Za-z_]\w*", re.UNICODE)
_NUMBER_RE = re.compile(
    r"0[xX][0-9a-fA-F_]+[jJ]?"
    r"|0[oO][0-7_]+"
    r"|0[bB][01_]+"
    r"|(?:\d[\d_]*(?:\.[\d_]*)?|\.\d[\d_]*)(?:[eE][+-]?\d[\d_]*)?[jJ]?"
)
_STRING_PREFIXES = frozenset(
    {"r", "b", "u", "f", "rb", "br", "fr", "rf", "bf", "fb"}
)
_OPERATORS = sorted(
    {
        "**=", "//=", ">>=", "<<=", "...", "->", ":=",
        "**", "//", "<<", ">>", "<=", ">=", "==", "!=",
        "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "@=",
        "+", "-", "*", "/", "%", "@", "&", "|", "^", "~", "<", ">", "=",
    },
    key=len,
    reverse=True,
)
_DELIMITERS = frozenset("()[]{},:.;")
_KNOWN_START = frozenset("'\"#") | _DELIMITERS | {op[0] for op in _OPERATORS}


@dataclass(frozen=True)
class Token:
    kind: str  # keyword | identifier | number | string | operator | delimiter
    text: str


@dataclass(frozen=True)
class TokenSequence:
    tokens: tuple[Token, ...]

    def __len__(self) -> int:
        return len(self.tokens)

    def render(self) -> str:
        """Join lexemes with single spaces (layout-free canonical form)."""
        return " ".join(t.text for t in self.tokens)


@dataclass(frozen=True)
class ShingleSet:
    shingles: frozenset[int] = field(default_factory=frozenset)
    k: int = DEFAULT_SHINGLE_K
    source_token_count: int = 0

    def __len__(self) -> int:
        return len(self.shingles)


def _match_string(source: str, start: int) -> int | None:
    """Return the end offset of a string literal at ``start``, or None."""
    quote = source[start]
    if source.startswith(quote * 3, start):
        pos = start + 3
        while True:
            end = source.find(quote * 3, pos)
            if end == -1:
                return len(source)  # unterminated: swallow the rest
            backslashes = 0
            while source[end - 1 - backslashes] == "\\":
                backslashes += 1
            if backslashes % 2 == 0:
                return end + 3
            pos = end + 1
    pos = start + 1
    n = len(source)
    while pos < n:
        ch = source[pos]
        if ch == "\\":
            pos += 2
            continue
        if ch == quote:
            return pos + 1
        if ch == "\n":
            return pos  # unterminated single-quoted string stops at EOL
        pos += 1
    return pos


def tokenize(source: str) -> TokenSequence:
    """Lex arbitrary text into a deterministic token sequence.

    Total over all inputs: byte runs that match no lexical rule become a
    single delimiter-kind token rather than raising.
    """
    if len(source.encode("utf-8", errors="surrogatepass")) > MAX_SOURCE_BYTES:
        raise OversizeInputError(
            f"source exceeds {MAX_SOURCE_BYTES} bytes"
        )
    tokens: list[Token] = []
    pos = 0
    n = len(source)
    while pos < n:
        ch = source[pos]
        if ch.isspace():
            pos += 1
            continue
        if ch == "#":
            nl = source.find("\n", pos)
            pos = n if nl == -1 else nl + 1
            continue
        if ch == "\\" and pos + 1 < n and source[pos + 1] == "\n":
            pos += 2  # explicit line continuation
            continue
        if ch in "'\"":
            end = _match_string(source, pos)
            tokens.append(Token("string", source[pos:end]))
            pos = end
            continue
        m = _IDENT_RE.match(source, pos)
        if m:
            name = m.group()
            nxt = m.end()
            if (
                name.lower() in _STRING_PREFIXES
                and nxt < n
                and source[nxt] in "'\""
            ):
                end = _match_string(source, nxt)
                tokens.append(Token("string", source[pos:end]))
                pos = end
                continue
            kind = "keyword" if name in KEYWORDS else "identifier"
            tokens.append(Token(kind, name))
            pos = nxt
            continue
        if ch.isdigit() or (ch == "." and pos + 1 < n and source[pos + 1].isdigit()):
            m = _NUMBER_RE.match(source, pos)
            if m:
                tokens.append(Token("number", m.group()))
                pos = m.end()
                continue
        matched_op = None
        for op in _OPERATORS:
            if source.startswith(op, pos):
                matched_op = op
                break
        if matched_op:
            tokens.append(Token("operator", matched_op))
            pos += len(matched_op)
            continue
        if ch in _DELIMITERS:
            tokens.append(Token("delimiter", ch))
            pos += 1
            continue
        # unlexable run: consume maximally, emit one delimiter token
        end = pos + 1
        while end < n:
            c = source[end]
            if c.isspace() or c in _KNOWN_START or c.isdigit() or _IDENT_RE.match(c):
                break
            end += 1
        tokens.append(Token("delimiter", source[pos:end]))
        pos = end
    return TokenSequence(tuple(tokens))


def _hash_window(window: tuple[Token, ...]) -> int:
    h = hashlib.blake2b(digest_size=8)
    for tok in window:
        text = tok.text.encode("utf-8", errors="surrogatepass")
        # length prefix keeps framing unambiguous even if a lexeme
        # happens to contain the separator byte
        h.update(tok.kind.encode("ascii"))
        h.update(b"\x1f")
        h.update(len(text).to_bytes(4, "little"))
        h.update(text)
    return int.from_bytes(h.digest(), "little")


def shingle(tokens: TokenSequence, k: int = DEFAULT_SHINGLE_K) -> ShingleSet:
    """Build the set of 64-bit hashes of all contiguous k-token windows."""
    if k < 1:
        raise ValueError(f"shingle width must be >= 1, got {k}")
    seq = tokens.tokens
    count = len(seq)
    if count < k:
        return ShingleSet(frozenset(), k, count)
    hashes = {_hash_window(seq[i : i + k]) for i in range(count - k + 1)}
    return ShingleSet(frozenset(hashes), k, count)


def shingle_source(source: str, k: int = DEFAULT_SHINGLE_K) -> ShingleSet:
    """Convenience: tokenize then shingle in one step."""
    return shingle(tokenize(source), k)
