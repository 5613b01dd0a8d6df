"""Ideal shuffles: uniform distributions over finite sets of permutations."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

from .deck import Permutation
from .errors import DomainError


class RandomChoice(NamedTuple):
    index: int
    probability: Fraction


@dataclass(frozen=True)
class ShuffleAction:
    """A shuffle drawing uniformly from ``perms`` (deduplicated, one size)."""

    perms: tuple[Permutation, ...]
    kind: str = "shuffle"

    def __post_init__(self):
        if not self.perms:
            raise DomainError("a shuffle needs at least one permutation")
        if len({p.size for p in self.perms}) != 1:
            raise DomainError("all permutations of a shuffle must act on one length")
        unique = tuple(dict.fromkeys(self.perms))
        object.__setattr__(self, "perms", unique)

    @property
    def size(self) -> int:
        return self.perms[0].size

    def choices(self) -> list[tuple[RandomChoice, Permutation]]:
        p = Fraction(1, len(self.perms))
        return [(RandomChoice(i, p), perm) for i, perm in enumerate(self.perms)]

    def embed(self, positions: Sequence[int], size: int) -> "ShuffleAction":
        return ShuffleAction(tuple(p.embed(positions, size) for p in self.perms), self.kind)


def random_cut(k: int) -> ShuffleAction:
    if k < 1:
        raise DomainError("a random cut needs at least one card")
    return ShuffleAction(
        tuple(Permutation.rotation(range(1, k + 1), r, k) for r in range(k)), "rcut"
    )


def k_section_cut(k: int, m: int) -> ShuffleAction:
    """Cut ``k`` piles of ``m`` cards each: left shift by a random multiple of ``m``."""
    if k < 1 or m < 1:
        raise DomainError("k and m must be positive")
    n = k * m
    return ShuffleAction(
        tuple(Permutation.rotation(range(1, n + 1), r * m, n) for r in range(k)), "ksec"
    )


def k_section_cut_for(k: int, length: int) -> ShuffleAction:
    if k < 1 or length % k:
        raise DomainError(f"{length} cards cannot be cut into {k} equal sections")
    return k_section_cut(k, length // k)


def partial_random_cut(size: int, positions: Sequence[int]) -> ShuffleAction:
    """Random cut of just the cards at ``positions``; every other card stays put."""
    positions = tuple(positions)
    if len(positions) < 2:
        raise DomainError("a partial random cut needs at least two positions")
    if len(set(positions)) != len(positions):
        raise DomainError("partial random cut positions must be distinct")
    if not all(1 <= p <= size for p in positions):
        raise DomainError(f"positions must lie in 1..{size}")
    cut = random_cut(len(positions)).embed(positions, size)
    return ShuffleAction(cut.perms, "pcut")


def xor_regroup(k: int) -> Permutation:
    """Rearrange commitments (x1,y1,...,xk,yk) into (x1..xk, y1..yk)."""
    images = [0] * (2 * k)
    for i in range(k):
        images[2 * i] = i
        images[2 * i + 1] = k + i
    return Permutation(tuple(images))


def random_bit_xor(k: int) -> tuple[Permutation, ShuffleAction, Permutation]:
    """The three steps XOR-ing ``k`` adjacent commitments with one hidden bit.

    Regroup into the x-half and y-half, cut the halves, regroup back.  The
    composite is distributed as ``{id, (1 2)(3 4)...(2k-1 2k)}``.
    """
    if k < 1:
        raise DomainError("need at least one commitment")
    regroup = xor_regroup(k)
    return regroup, ShuffleAction(k_section_cut(2, k).perms, "xor"), regroup.inverse()


def direct_xor_shuffle(k: int) -> ShuffleAction:
    swap_all = Permutation.from_cycles([(2 * i + 1, 2 * i + 2) for i in range(k)], 2 * k)
    return ShuffleAction((Permutation.identity(2 * k), swap_all))
