"""Lyndon words and bracket trees over generators 1..rank.

Basis elements of the free nilpotent Lie algebras are Lyndon words with their
standard bracketing.  A bracket tree is either an ``int`` (a generator leaf)
or a pair ``(left, right)`` of trees.  The canonical string form follows the
multi-index convention: a bare digit string is a right-nested commutator
("112" is [1,[1,2]]) and round brackets give priority ("(12)(112)" is
[[1,2],[1,[1,2]]]).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Union

Tree = Union[int, tuple]


class WordError(ValueError):
    """Malformed word text or tree."""


def is_lyndon(word: tuple[int, ...]) -> bool:
    """True if ``word`` is strictly smaller than all of its proper rotations."""
    n = len(word)
    if n == 0:
        return False
    for k in range(1, n):
        if word[k:] + word[:k] <= word:
            return False
    return True


def lyndon_words_upto(rank: int, max_len: int) -> Iterator[tuple[int, ...]]:
    """Duval's generation of all Lyndon words of length <= max_len, lex order."""
    if rank < 1 or max_len < 1:
        raise WordError(f"rank and max_len must be positive, got {rank}, {max_len}")
    w = [1]
    while w:
        yield tuple(w)
        period = len(w)
        while len(w) < max_len:
            w.append(w[len(w) % period])
        while w and w[-1] == rank:
            w.pop()
        if w:
            w[-1] += 1


def lyndon_words(rank: int, length: int) -> list[tuple[int, ...]]:
    """All Lyndon words of exactly ``length`` letters in 1..rank, lex order."""
    return [w for w in lyndon_words_upto(rank, length) if len(w) == length]


def standard_factorization(word: tuple[int, ...]) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Standard right factorization w = u·v, v the lexicographically least proper suffix."""
    if len(word) < 2:
        raise WordError("factorization needs length >= 2")
    best = 1
    for k in range(2, len(word)):
        if word[k:] < word[best:]:
            best = k
    return word[:best], word[best:]


def lyndon_tree(word: tuple[int, ...]) -> Tree:
    """Standard bracketing of a Lyndon word."""
    if not is_lyndon(word):
        raise WordError(f"{word} is not a Lyndon word")
    if len(word) == 1:
        return word[0]
    u, v = standard_factorization(word)
    return (lyndon_tree(u), lyndon_tree(v))


def tree_degree(tree: Tree) -> int:
    if isinstance(tree, int):
        return 1
    return tree_degree(tree[0]) + tree_degree(tree[1])


def tree_foliage(tree: Tree) -> tuple[int, ...]:
    """Generator word read off the leaves, left to right."""
    if isinstance(tree, int):
        return (tree,)
    return tree_foliage(tree[0]) + tree_foliage(tree[1])


def _right_spine(tree: Tree) -> list[Tree]:
    tokens = []
    node = tree
    while isinstance(node, tuple):
        tokens.append(node[0])
        node = node[1]
    tokens.append(node)
    return tokens


def tree_text(tree: Tree) -> str:
    """Canonical text: bare digits for right-nested leaf chains, parens elsewhere."""
    if isinstance(tree, int):
        return str(tree)
    spine = _right_spine(tree)
    if all(isinstance(t, int) for t in spine):
        return "".join(str(t) for t in spine)
    parts = []
    for t in (tree[0], tree[1]):
        if isinstance(t, int):
            parts.append(str(t))
        else:
            parts.append("(" + tree_text(t) + ")")
    return "".join(parts)


def parse_text(text: str, rank: int) -> Tree:
    """Parse bracket-word text into a tree; bare token runs nest to the right."""
    pos = 0

    def parse_tokens(depth: int) -> list[Tree]:
        nonlocal pos
        tokens: list[Tree] = []
        while pos < len(text):
            ch = text[pos]
            if ch == "(":
                pos += 1
                inner = parse_tokens(depth + 1)
                if pos >= len(text) or text[pos] != ")":
                    raise WordError(f"unbalanced parentheses in {text!r}")
                pos += 1
                if not inner:
                    raise WordError(f"empty group in {text!r}")
                tokens.append(_fold(inner))
            elif ch == ")":
                if depth == 0:
                    raise WordError(f"unbalanced parentheses in {text!r}")
                return tokens
            elif ch.isdigit():
                g = int(ch)
                if not 1 <= g <= rank:
                    raise WordError(f"generator {g} out of range 1..{rank} in {text!r}")
                tokens.append(g)
                pos += 1
            else:
                raise WordError(f"unexpected character {ch!r} in {text!r}")
        return tokens

    def _fold(tokens: list[Tree]) -> Tree:
        node = tokens[-1]
        for t in reversed(tokens[:-1]):
            node = (t, node)
        return node

    tokens = parse_tokens(0)
    if pos != len(text):
        raise WordError(f"unbalanced parentheses in {text!r}")
    if not tokens:
        raise WordError("empty word")
    return _fold(tokens)


@dataclass(frozen=True)
class HallWord:
    """A basis bracket word: tree, number of leaves, canonical text."""

    tree: Tree
    degree: int
    text: str

    @classmethod
    def from_lyndon(cls, word: tuple[int, ...]) -> "HallWord":
        tree = lyndon_tree(word)
        return cls(tree=tree, degree=len(word), text=tree_text(tree))

    @classmethod
    def from_text(cls, text: str, rank: int) -> "HallWord":
        tree = parse_text(text, rank)
        return cls(tree=tree, degree=tree_degree(tree), text=tree_text(tree))

    @property
    def foliage(self) -> tuple[int, ...]:
        return tree_foliage(self.tree)

    def __str__(self) -> str:
        return self.text
