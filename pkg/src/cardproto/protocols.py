"""Built-in protocols, assembled from deck actions with a label-tracking builder.

The builder names every position by the logical role of the card sitting
there (``x3`` = left card of the third commitment, ``f0`` = a free card, ...).
``arrange`` moves cards together with their labels, while ``apply``/cuts
change which card sits at a position but keep the labels in place, which is
exactly how the protocols talk about "the i-th card of the row".
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

from .deck import Permutation, Scheme, Suit
from .errors import DomainError
from .protocol import FunctionSpec, Protocol, preimages
from . import steps as st


class Builder:
    def __init__(self, slots: Sequence[str]):
        self.slots = list(slots)
        self.body: list = []

    @property
    def size(self) -> int:
        return len(self.slots)

    def pos(self, label: str) -> int:
        return self.slots.index(label) + 1

    def ps(self, labels: Sequence[str]) -> tuple[int, ...]:
        return tuple(self.pos(l) for l in labels)

    # moves that carry labels along
    def arrange(self, order: Sequence[str]):
        order = list(order)
        if sorted(order) != sorted(self.slots):
            raise ValueError("arrange needs every label exactly once")
        perm = Permutation(tuple(order.index(l) for l in self.slots))
        if not perm.is_identity():
            self.body.append(st.Perm(perm))
        self.slots = order

    def to_front(self, labels: Sequence[str]):
        self.arrange(list(labels) + [l for l in self.slots if l not in labels])

    def relabel(self, mapping: dict[str, str]):
        self.slots = [mapping.get(l, l) for l in self.slots]

    # moves that keep labels on their positions
    def swap_pairs(self, pairs):
        cycles = [(self.pos(a), self.pos(b)) for a, b in pairs]
        if cycles:
            self.body.append(st.Perm(Permutation.from_cycles(cycles, self.size)))

    def lshift(self, r: int, labels: Sequence[str]):
        if r % len(labels):
            self.body.append(st.Shift(r, True, self.ps(labels)))

    def rshift(self, r: int, labels: Sequence[str]):
        if r % len(labels):
            self.body.append(st.Shift(r, False, self.ps(labels)))

    def rcut(self, labels=None):
        self.body.append(st.RandomCut(None if labels is None else self.ps(labels)))

    def ksec(self, k: int, labels):
        self.body.append(st.SectionCut(k, self.ps(labels)))

    def pcut(self, labels):
        self.body.append(st.PartialCut(self.ps(labels)))

    def xorall(self, labels):
        self.body.append(st.XorAll(self.ps(labels)))

    def reveal(self, labels):
        self.body.append(st.Reveal(tuple(sorted(self.ps(labels)))))

    def conceal(self, labels):
        self.body.append(st.Conceal(tuple(sorted(self.ps(labels)))))

    def branch(self, arms: dict[str, Callable[["Builder"], None]]):
        """Emit a branch group; arms that do not output must agree on labels."""
        built, finals = [], []
        for pattern, fn in arms.items():
            child = Builder(self.slots)
            fn(child)
            built.append(st.Arm(pattern, tuple(child.body)))
            if not (child.body and isinstance(child.body[-1], st.OUTPUTS)):
                finals.append(child.slots)
        if any(f != finals[0] for f in finals[1:]):
            raise ValueError("branch arms end with different layouts")
        if finals:
            self.slots = finals[0]
        self.body.append(st.BranchGroup(tuple(built)))

    def output(self, stmt):
        self.body.append(stmt)


def _commit_labels(n: int, tag: str = "") -> list[tuple[str, str]]:
    return [(f"x{tag}{i}", f"y{tag}{i}") for i in range(1, n + 1)]


def _flatten(pairs) -> list[str]:
    return [l for pair in pairs for l in pair]


def odd_card_pattern(k: int, value: int, odd: str = "C") -> str:
    """Suit string of a k-card encoding with the odd card at ``value``."""
    base = "H" if odd == "C" else "C"
    return base * value + odd + base * (k - 1 - value)


# ---------------------------------------------------------------- fragments


def add_mod_k(b: Builder, X: list[str], Y: list[str]):
    """X (heart-scheme a), Y (club-scheme b) -> X holds a+b mod k.

    Afterwards Y is face-down again and holds the freed cards as club, hearts.
    """
    k = len(X)
    Z = []
    for i in range(k):
        Z += [X[i], Y[k - 1 - i]]
    b.to_front(Z)
    b.ksec(k, Z)
    b.to_front(X + Y)
    b.reveal(Y)

    def arm(s):
        def body(c: Builder):
            # X reads a-r; moving its heart s places right gives a+b
            c.rshift(s, X)
            c.lshift(s, Y)  # freed club to the front of Y

        return body

    b.branch({odd_card_pattern(k, s, "C"): arm(s) for s in range(k)})
    b.conceal(Y)


def sum_bits(b: Builder, commits, free_club: str, free_heart: str):
    """Heart-scheme encoding of the sum of the committed bits; returns its labels.

    Needs one spare club and one spare heart when more than one bit is summed.
    The second return value lists the labels of the freed cards (club first).
    """
    m = len(commits)
    x1, y1 = commits[0]
    b.swap_pairs([(x1, y1)])
    if m == 1:
        return [x1, y1], [free_club, free_heart]
    X = [x1, y1, free_club]
    Y = list(commits[1]) + [free_heart]
    add_mod_k(b, X, Y)
    free = Y
    for j in range(2, m):
        X = X + [free[0]]
        Y = list(commits[j]) + free[1:]
        add_mod_k(b, X, Y)
        free = Y
    return X, free


def mizuki_sone_and(b: Builder, A, B, F):
    """A <- A and B using the face-down free pair F (club, heart).

    Afterwards F is the freed pair again (face-down, club then heart) and B
    holds a discarded commitment.
    """
    six = list(A) + list(B) + list(F)
    b.to_front(six)
    pos = b.ps(six)
    b.body.append(st.Perm(Permutation.from_cycles([(2, 4, 3)], 6).embed(pos, b.size)))
    b.ksec(2, six)
    b.body.append(st.Perm(Permutation.from_cycles([(2, 3, 4)], 6).embed(pos, b.size)))
    b.reveal(A)
    canonical = list(b.slots)

    def first_zero(c: Builder):
        # third commitment is the output
        c.relabel({**dict(zip(F, A)), **dict(zip(A, F))})
        c.arrange(canonical)

    def first_one(c: Builder):
        # second commitment is the output; the revealed pair reads HC
        c.relabel({**dict(zip(B, A)), **dict(zip(A, F)), **dict(zip(F, B))})
        c.arrange(canonical)
        c.swap_pairs([tuple(F)])

    b.branch({"CH": first_zero, "HC": first_one})
    b.conceal(F)


def xor_and_reveal_last(b: Builder, commits, negate_on: str):
    """Random bit XOR over all commitments, then open the last one.

    Remaining commitments are swapped when the opened pair reads
    ``negate_on``; the opened pair is left face-down as club, heart.
    """
    *rest, last = commits
    b.xorall(_flatten(commits))
    b.reveal(last)

    def arm(pattern):
        def body(c: Builder):
            pairs = list(rest) if pattern == negate_on else []
            if pattern == "HC":
                pairs.append(last)
            c.swap_pairs(pairs)

        return body

    b.branch({"CH": arm("CH"), "HC": arm("HC")})
    b.conceal(last)
    return list(last)


# ---------------------------------------------------------------- protocols


def _bits_layout(n: int):
    return tuple(st.CommitInput(i) for i in range(1, n + 1))


def _require_n(n: int, low: int = 2):
    if n < low:
        raise DomainError(f"n must be at least {low}, got {n}")


def five_card_trick() -> Protocol:
    b = Builder(["p0", "p1", "f", "q0", "q1"])
    b.swap_pairs([("q0", "q1")])
    b.rcut()
    b.reveal(b.slots)
    b.output(st.OutputCyclic("HHCCC", tuple(range(1, 6))))
    layout = (st.CommitInput(1), st.FreeCard(Suit.CLUB), st.CommitInput(2))
    return Protocol("five_card_trick", (), 2, 2, layout, tuple(b.body),
                    FunctionSpec("and", 2), "AND of two bits with five cards")


def six_card_trick() -> Protocol:
    body = (
        st.Perm(Permutation.from_cycles([(2, 4, 6)], 6)),
        st.RandomCut(),
        st.Reveal(tuple(range(1, 7))),
        st.OutputCyclic("CHCHCH", tuple(range(1, 7))),
    )
    return Protocol("six_card_trick", (), 3, 2, _bits_layout(3), body,
                    FunctionSpec("equality", 3), "three-bit equality with six cards")


def _first_protocol_row(b: Builder, n: int):
    commits = _commit_labels(n)
    free_c, free_h = xor_and_reveal_last(b, commits, negate_on="HC")
    row, _ = sum_bits(b, commits[:-1], free_c, free_h)
    return row


def equality_first(n: int, final_cut: bool = True) -> Protocol:
    _require_n(n)
    b = Builder(_flatten(_commit_labels(n)))
    row = _first_protocol_row(b, n)
    if final_cut:
        b.rcut(row[1:])
    b.reveal(row)
    b.output(st.OutputIndex(Suit.HEART, b.ps(row), (1,) + (0,) * (n - 1)))
    name = "equality_first" if final_cut else "equality_first_no_final_cut"
    return Protocol(name, (("n", n),), n, 2, _bits_layout(n), tuple(b.body),
                    FunctionSpec("equality", n), "n-bit equality, 2n cards, public output")


def leaky_equality(n: int) -> Protocol:
    """equality_first preceded by opening the first commitment; insecure on purpose."""
    base = equality_first(n)
    body = (st.Reveal((1, 2)), st.Conceal((1, 2))) + base.body
    return Protocol("leaky_equality", (("n", n),), n, 2, base.layout, body, base.function,
                    "opens input 1 before any shuffle")


def _table(n: int, g: Sequence[int], reduced_len: int) -> tuple[int, ...]:
    g = tuple(int(v) for v in g)
    if len(g) == n + 1:
        return g
    if len(g) == reduced_len == n:
        return g + (g[0],)
    raise DomainError(f"g table must have {n + 1} values" + (f" (or {n})" if reduced_len == n else ""))


def _partial_cuts(b: Builder, row: list[str], table: Sequence[int]):
    for _, pre in preimages(table).items():
        if len(pre) > 1:
            b.pcut([row[a] for a in pre])


def doubly_symmetric(n: int, g: Sequence[int]) -> Protocol:
    _require_n(n)
    full = _table(n, g, n)
    spec = FunctionSpec("symmetric", n, 2, full)
    if not spec.is_doubly_symmetric():
        raise DomainError(f"g = {list(full)} is not doubly symmetric")
    reduced = full[:n]
    b = Builder(_flatten(_commit_labels(n)))
    row = _first_protocol_row(b, n)
    _partial_cuts(b, row, reduced)
    b.reveal(row)
    b.output(st.OutputIndex(Suit.HEART, b.ps(row), reduced))
    return Protocol("doubly_symmetric", (("n", n), ("g", full)), n, 2, _bits_layout(n),
                    tuple(b.body), spec, "doubly symmetric function, 2n cards")


def symmetric(n: int, g: Sequence[int]) -> Protocol:
    _require_n(n)
    full = _table(n, g, -1)
    spec = FunctionSpec("symmetric", n, 2, full)
    commits = _commit_labels(n)
    b = Builder(_flatten(commits) + ["fc", "fh"])
    row, _ = sum_bits(b, commits, "fc", "fh")
    _partial_cuts(b, row, full)
    b.reveal(row)
    b.output(st.OutputIndex(Suit.HEART, b.ps(row), full))
    layout = _bits_layout(n) + (st.FreeCard(Suit.CLUB), st.FreeCard(Suit.HEART))
    return Protocol("symmetric", (("n", n), ("g", full)), n, 2, layout, tuple(b.body), spec,
                    "symmetric function, 2n+2 cards")


def _second_protocol_core(b: Builder, commits):
    """Committed equality of the bits in ``commits``; returns (result, free pair)."""
    free = xor_and_reveal_last(b, commits, negate_on="CH")
    acc = commits[0]
    for pair in commits[1:-1]:
        mizuki_sone_and(b, acc, pair, free)
    return acc, free


def equality_second(n: int) -> Protocol:
    _require_n(n)
    commits = _commit_labels(n)
    b = Builder(_flatten(commits))
    acc, _ = _second_protocol_core(b, commits)
    b.output(st.OutputCommitted(b.ps(acc)))
    return Protocol("equality_second", (("n", n),), n, 2, _bits_layout(n), tuple(b.body),
                    FunctionSpec("equality", n), "n-bit equality, 2n cards, committed output")


def kcand_equality(n: int, k: int) -> Protocol:
    _require_n(n)
    if k < 2:
        raise DomainError("k must be at least 2")
    ell = max(1, math.ceil(math.log2(k)))
    planes = [_commit_labels(n, f"{j}_") for j in range(ell)]
    b = Builder([l for plane in planes for l in _flatten(plane)])
    results, frees = [], []
    for plane in planes:
        acc, free = _second_protocol_core(b, plane)
        results.append(acc)
        frees.append(free)
    for other in results[1:]:
        mizuki_sone_and(b, results[0], other, frees[0])
    b.output(st.OutputCommitted(b.ps(results[0])))
    layout = tuple(st.CommitInput(i, j) for j in range(ell) for i in range(1, n + 1))
    return Protocol("kcand_equality", (("n", n), ("k", k)), n, k, layout, tuple(b.body),
                    FunctionSpec("equality", n, k), "k-candidate equality, committed output")


def add_protocol(k: int) -> Protocol:
    if k < 2:
        raise DomainError("k must be at least 2")
    X = [f"a{i}" for i in range(k)]
    Y = [f"b{i}" for i in range(k)]
    b = Builder(X + Y)
    add_mod_k(b, X, Y)
    b.output(st.OutputEncoded(Scheme.HEART, b.ps(X)))
    layout = (st.EncodeInput(1, Scheme.HEART, k), st.EncodeInput(2, Scheme.CLUB, k))
    return Protocol("add", (("k", k),), 2, k, layout, tuple(b.body),
                    FunctionSpec("add", 2, k), "heart-scheme a plus club-scheme b mod k")


def sum_protocol(n: int) -> Protocol:
    _require_n(n)
    commits = _commit_labels(n)
    b = Builder(_flatten(commits) + ["fc", "fh"])
    row, _ = sum_bits(b, commits, "fc", "fh")
    b.output(st.OutputEncoded(Scheme.HEART, b.ps(row)))
    layout = _bits_layout(n) + (st.FreeCard(Suit.CLUB), st.FreeCard(Suit.HEART))
    return Protocol("sum", (("n", n),), n, 2, layout, tuple(b.body), FunctionSpec("sum", n),
                    "running sum of n bits into a heart-scheme row")


def and_protocol() -> Protocol:
    b = Builder(["x1", "y1", "x2", "y2", "fc", "fh"])
    mizuki_sone_and(b, ["x1", "y1"], ["x2", "y2"], ["fc", "fh"])
    b.output(st.OutputCommitted(b.ps(["x1", "y1"])))
    layout = (st.CommitInput(1), st.CommitInput(2), st.FreeCard(Suit.CLUB), st.FreeCard(Suit.HEART))
    return Protocol("and", (), 2, 2, layout, tuple(b.body), FunctionSpec("and", 2),
                    "committed AND with two helper cards")


BUILTINS: dict[str, Callable[..., Protocol]] = {
    "five_card_trick": five_card_trick,
    "six_card_trick": six_card_trick,
    "equality_first": equality_first,
    "equality_second": equality_second,
    "doubly_symmetric": doubly_symmetric,
    "symmetric": symmetric,
    "symmetric_plus_two": symmetric,
    "kcand_equality": kcand_equality,
    "add": add_protocol,
    "sum": sum_protocol,
    "and": and_protocol,
    "equality_first_no_final_cut": lambda n: equality_first(n, final_cut=False),
    "leaky_equality": leaky_equality,
}


def build(name: str, **params) -> Protocol:
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise DomainError(f"unknown protocol {name!r}; choose from {', '.join(BUILTINS)}") from None
    return factory(**params)
