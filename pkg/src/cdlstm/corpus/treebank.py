"""Sentiment treebank trees in the parenthesized SST format.

A line looks like ``(3 (2 It) (4 (2 's) (3 good)))``: every node is a
fine-grained label 0-4 followed by either one token (a leaf) or exactly two
child nodes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

NEG, NEUTRAL, POS = "neg", "neutral", "pos"


class TreeParseError(ValueError):
    def __init__(self, message: str, offset: int, where: str = ""):
        super().__init__(f"{where}{message} at offset {offset}")
        self.message = message
        self.offset = offset


def binarize_label(fine: int) -> str:
    """Map a 0-4 sentiment label to ``"neg"``, ``"neutral"`` or ``"pos"``."""
    if not isinstance(fine, int) or isinstance(fine, bool) or not 0 <= fine <= 4:
        raise ValueError(f"sentiment label must be an integer in 0..4, got {fine!r}")
    if fine <= 1:
        return NEG
    if fine == 2:
        return NEUTRAL
    return POS


@dataclass
class TreebankNode:
    label: int
    children: list["TreebankNode"] = field(default_factory=list)
    token: str | None = None
    start: int = 0  # 1-based inclusive leaf span, filled in by assign_spans
    end: int = 0

    def __post_init__(self):
        binarize_label(self.label)
        if self.token is None and len(self.children) != 2:
            raise ValueError(f"internal node needs exactly 2 children, got {len(self.children)}")
        if self.token is not None and self.children:
            raise ValueError("a leaf cannot have children")

    @property
    def is_leaf(self) -> bool:
        return self.token is not None

    @property
    def polarity(self) -> str:
        return binarize_label(self.label)

    @property
    def span(self) -> tuple[int, int]:
        return (self.start, self.end)

    @property
    def length(self) -> int:
        return self.end - self.start + 1

    @property
    def left(self) -> "TreebankNode":
        return self.children[0]

    @property
    def right(self) -> "TreebankNode":
        return self.children[1]

    def leaves(self) -> list[str]:
        if self.is_leaf:
            return [self.token]
        return self.children[0].leaves() + self.children[1].leaves()

    def nodes(self) -> Iterator["TreebankNode"]:
        """Pre-order traversal."""
        yield self
        for c in self.children:
            yield from c.nodes()

    def assign_spans(self, start: int = 1) -> int:
        """Number the leaves from ``start``; returns the next free index."""
        if self.is_leaf:
            self.start = self.end = start
            return start + 1
        nxt = self.children[0].assign_spans(start)
        nxt = self.children[1].assign_spans(nxt)
        self.start, self.end = start, nxt - 1
        return nxt

    def serialize(self) -> str:
        if self.is_leaf:
            return f"({self.label} {self.token})"
        return f"({self.label} {self.children[0].serialize()} {self.children[1].serialize()})"

    def __str__(self) -> str:
        return self.serialize()


def _tokenize(text: str) -> list[tuple[str, int]]:
    out = []
    k = 0
    n = len(text)
    while k < n:
        ch = text[k]
        if ch.isspace():
            k += 1
        elif ch in "()":
            out.append((ch, k))
            k += 1
        else:
            j = k
            while j < n and not text[j].isspace() and text[j] not in "()":
                j += 1
            out.append((text[k:j], k))
            k = j
    return out


def parse_ptb_tree(text: str) -> TreebankNode:
    """Parse one SST tree; raises :class:`TreeParseError` with a character offset."""
    toks = _tokenize(text)
    pos = 0

    def expect_open():
        nonlocal pos
        if pos >= len(toks):
            raise TreeParseError("unexpected end of input, expected '('", len(text))
        tok, off = toks[pos]
        if tok != "(":
            raise TreeParseError(f"expected '(' but found {tok!r}", off)
        pos += 1
        return off

    def node() -> TreebankNode:
        nonlocal pos
        open_off = expect_open()
        if pos >= len(toks):
            raise TreeParseError("unbalanced parentheses", len(text))
        tok, off = toks[pos]
        if tok in "()":
            raise TreeParseError("missing label", off)
        try:
            label = int(tok)
        except ValueError:
            raise TreeParseError(f"label {tok!r} is not an integer", off) from None
        if not 0 <= label <= 4:
            raise TreeParseError(f"label {label} outside 0..4", off)
        pos += 1
        if pos >= len(toks):
            raise TreeParseError("unbalanced parentheses", len(text))
        tok, off = toks[pos]
        if tok not in "()":
            pos += 1
            leaf = TreebankNode(label, token=tok)
            close()
            return leaf
        children = []
        while pos < len(toks) and toks[pos][0] == "(":
            children.append(node())
        if len(children) != 2:
            raise TreeParseError(f"node has {len(children)} children; trees must be binary", open_off)
        close()
        return TreebankNode(label, children)

    def close():
        nonlocal pos
        if pos >= len(toks):
            raise TreeParseError("unbalanced parentheses: missing ')'", len(text))
        tok, off = toks[pos]
        if tok != ")":
            raise TreeParseError(f"expected ')' but found {tok!r}", off)
        pos += 1

    root = node()
    if pos != len(toks):
        raise TreeParseError("trailing input after tree", toks[pos][1])
    root.assign_spans()
    return root


def read_trees(path) -> list[TreebankNode]:
    trees = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                trees.append(parse_ptb_tree(line))
            except TreeParseError as exc:
                raise TreeParseError(exc.message, exc.offset, f"{Path(path).name} line {lineno}: ") from None
    return trees


def write_trees(path, trees) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in trees:
            fh.write(t.serialize() + "\n")
