"""Group words as tuples of signed letters.

A letter is a pair ``(generator_name, exponent)`` with exponent +1 or -1
and a word is a tuple of letters.  Words are kept freely reduced by the
helpers here; group-specific normal forms live in :mod:`.group_kb`.
"""

from __future__ import annotations

from typing import Iterable, Sequence, Tuple

Letter = Tuple[str, int]
Word = Tuple[Letter, ...]

EMPTY: Word = ()


def letter(gen: str, exp: int = 1) -> Letter:
    if exp not in (1, -1):
        raise ValueError(f"letter exponent must be +/-1, got {exp}")
    return (gen, exp)


def inv_letter(l: Letter) -> Letter:
    return (l[0], -l[1])


def inverse(w: Sequence[Letter]) -> Word:
    return tuple((g, -e) for g, e in reversed(w))


def free_reduce(w: Iterable[Letter]) -> Word:
    out: list[Letter] = []
    for l in w:
        if out and out[-1][0] == l[0] and out[-1][1] == -l[1]:
            out.pop()
        else:
            out.append(l)
    return tuple(out)


def concat(*ws: Sequence[Letter]) -> Word:
    """Concatenate and freely reduce."""
    out: list[Letter] = []
    for w in ws:
        for l in w:
            if out and out[-1][0] == l[0] and out[-1][1] == -l[1]:
                out.pop()
            else:
                out.append(l)
    return tuple(out)


def power(w: Sequence[Letter], n: int) -> Word:
    if n < 0:
        return power(inverse(w), -n)
    out: Word = EMPTY
    for _ in range(n):
        out = concat(out, w)
    return out


def parse(text: str) -> Word:
    """Parse ``"a b^-1 a^2"`` style strings into a word."""
    out: list[Letter] = []
    for tok in text.split():
        if "^" in tok:
            gen, _, exp_s = tok.partition("^")
            exp = int(exp_s)
        else:
            gen, exp = tok, 1
        if not gen:
            raise ValueError(f"bad token {tok!r}")
        sign = 1 if exp >= 0 else -1
        out.extend([(gen, sign)] * abs(exp))
    return free_reduce(out)


def format_word(w: Sequence[Letter]) -> str:
    if not w:
        return "1"
    parts: list[str] = []
    i = 0
    while i < len(w):
        g, e = w[i]
        j = i
        while j < len(w) and w[j] == (g, e):
            j += 1
        n = (j - i) * e
        parts.append(g if n == 1 else f"{g}^{n}")
        i = j
    return " ".join(parts)


def shortlex_key(w: Sequence[Letter], order: Sequence[Letter]):
    """Sort key for the shortlex order induced by ``order`` on letters."""
    idx = {l: i for i, l in enumerate(order)}
    return (len(w), tuple(idx[l] for l in w))


def word_from_json(data) -> Word:
    """Accept either a string (``"a b^-1"``) or a list of [gen, exp] pairs."""
    if isinstance(data, str):
        return parse(data)
    out: list[Letter] = []
    for gen, exp in data:
        sign = 1 if exp >= 0 else -1
        out.extend([(gen, sign)] * abs(exp))
    return free_reduce(out)
