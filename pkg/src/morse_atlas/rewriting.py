"""Shortlex string rewriting over signed-letter words.

A rewriting system is a list of rules ``lhs -> rhs`` with ``rhs``
strictly shortlex-smaller than ``lhs``.  Free-reduction rules
(``g g^-1 -> 1``) are always implied.  Systems are validated at load
time: every rule must shrink shortlex (termination) and all critical
pairs must resolve (confluence), so normal forms are canonical.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

from .words import Letter, Word, free_reduce, shortlex_key


class NotConfluent(ValueError):
    pass


@dataclass(frozen=True)
class RewritingSystem:
    letters: Tuple[Letter, ...]  # shortlex letter order, generators with inverses
    rules: Tuple[Tuple[Word, Word], ...]

    def key(self, w: Sequence[Letter]):
        return shortlex_key(w, self.letters)

    def normal_form(self, w: Sequence[Letter]) -> Word:
        word = free_reduce(w)
        changed = True
        while changed:
            changed = False
            for lhs, rhs in self.rules:
                i = _find(word, lhs)
                if i >= 0:
                    word = free_reduce(word[:i] + rhs + word[i + len(lhs):])
                    changed = True
        return word


def _find(word: Word, sub: Word) -> int:
    n, m = len(word), len(sub)
    for i in range(n - m + 1):
        if word[i:i + m] == sub:
            return i
    return -1


def validate(system: RewritingSystem) -> None:
    """Raise if a rule grows shortlex or a critical pair fails to resolve."""
    for lhs, rhs in system.rules:
        if system.key(rhs) >= system.key(lhs):
            raise NotConfluent(f"rule does not shrink shortlex: {lhs!r} -> {rhs!r}")
    rules = list(system.rules)
    # free reduction participates in overlaps through normal_form below
    for l1, r1 in rules:
        for l2, r2 in rules:
            for pair in _critical_pairs(l1, r1, l2, r2):
                a, b = pair
                if system.normal_form(a) != system.normal_form(b):
                    raise NotConfluent(
                        f"unresolved critical pair from {l1!r} and {l2!r}: {a!r} vs {b!r}"
                    )


def _critical_pairs(l1: Word, r1: Word, l2: Word, r2: Word) -> List[Tuple[Word, Word]]:
    out: List[Tuple[Word, Word]] = []
    # overlap: a suffix of l1 is a prefix of l2 -> word l1 + l2[k:]
    for k in range(1, min(len(l1), len(l2)) + 1):
        if l1[len(l1) - k:] == l2[:k]:
            whole = l1 + l2[k:]
            out.append((r1 + l2[k:], l1[:len(l1) - k] + r2))
            del whole
    # containment: l2 inside l1
    if len(l2) < len(l1):
        i = _find(l1, l2)
        if i >= 0:
            out.append((r1, l1[:i] + r2 + l1[i + len(l2):]))
    return out
