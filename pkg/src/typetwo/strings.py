"""Bit-string primitives: truncation, prefix order, polynomial-time tupling
with projections, and the two-symbol encoding of the {0,1,#} alphabet.

Bit strings are plain Python ``str`` values over "0"/"1"; the empty string
is the empty word.  All operations are pure, so values may be shared
freely across threads.

The pair encoding doubles every bit of the first component (0 -> 00,
1 -> 01), emits the separator "11", and appends the second component
verbatim:

    <a, b> := dbl(a) + "11" + b

so that len(<a, b>) == 2*len(a) + 2 + len(b), the length is nondecreasing
in each component, and the pair can be decoded in a single left-to-right
pass.  k-tuples are right-nested pairs <a1, <a2, ...>>.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence

__all__ = [
    "MalformedEncodingError",
    "check_bits",
    "truncate",
    "is_prefix",
    "pair_encode",
    "pair_decode",
    "tuple_encode",
    "tuple_project",
    "encode_hash_alphabet",
    "decode_hash_alphabet",
]


class MalformedEncodingError(ValueError):
    """Decoding input that lies outside the codec image."""


def check_bits(s: str) -> str:
    """Validate that ``s`` contains only "0"/"1"; returns ``s``."""
    if s.count("0") + s.count("1") != len(s):
        raise ValueError(f"not a bit string: {s!r}")
    return s


def truncate(a: str, n: int) -> str:
    """The length-min(n, len(a)) prefix of ``a``."""
    if n < 0:
        raise ValueError("truncation length must be nonnegative")
    return a[:n]


def is_prefix(b: str, a: str) -> bool:
    """True iff ``b`` is an initial segment of ``a``."""
    return a.startswith(b)


def _dbl(a: str) -> str:
    return "".join("0" + c for c in a)


def pair_encode(a: str, b: str) -> str:
    return _dbl(a) + "11" + b


def pair_decode(t: str) -> tuple[str, str] | None:
    """Inverse of :func:`pair_encode`; ``None`` if ``t`` is not in its image."""
    first: list[str] = []
    i = 0
    while True:
        d = t[i : i + 2]
        if d == "11":
            return "".join(first), t[i + 2 :]
        if d == "00":
            first.append("0")
        elif d == "01":
            first.append("1")
        else:  # "10", a lone trailing bit, or no separator at all
            return None
        i += 2


def tuple_encode(parts: Sequence[str] | Iterable[str]) -> str:
    """Right-nested pair encoding of a nonempty sequence of bit strings."""
    parts = list(parts)
    if not parts:
        raise ValueError("cannot encode an empty tuple")
    enc = parts[-1]
    for p in reversed(parts[:-1]):
        enc = pair_encode(p, enc)
    return enc


def tuple_project(i: int, k: int, t: str) -> str:
    """Component ``i`` (1-based) of a ``k``-tuple encoding.

    Total by convention: malformed encodings project to the empty string,
    so oracles built from projections stay total.
    """
    if not 1 <= i <= k:
        raise ValueError(f"projection index {i} out of range for arity {k}")
    if k == 1:
        return t
    dec = pair_decode(t)
    if dec is None:
        return ""
    head, rest = dec
    if i == 1:
        return head
    return tuple_project(i - 1, k - 1, rest)


_HASH_ENC = {"0": "00", "1": "01", "#": "11"}
_HASH_DEC = {"00": "0", "01": "1", "11": "#"}


def encode_hash_alphabet(s: str) -> str:
    """Encode a string over {0,1,#} into bits (0->00, 1->01, #->11)."""
    try:
        return "".join(_HASH_ENC[c] for c in s)
    except KeyError as exc:
        raise ValueError(f"not a 0/1/# string: {s!r}") from exc


def decode_hash_alphabet(t: str) -> str:
    """Inverse of :func:`encode_hash_alphabet`; strict on malformed input."""
    if len(t) % 2:
        raise MalformedEncodingError(f"odd-length encoding: {t!r}")
    out = []
    for i in range(0, len(t), 2):
        d = t[i : i + 2]
        try:
            out.append(_HASH_DEC[d])
        except KeyError as exc:
            raise MalformedEncodingError(
                f"digraph {d!r} at position {i} is outside the image"
            ) from exc
    return "".join(out)
