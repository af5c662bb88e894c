"""Dominant color patterns and their parity conventions.

A pattern is an ordered pair (A, B) of disjoint subsets of the colors
1..q; "in the (A, B)-pattern" means even vertices take colors from A and
odd vertices colors from B.  A pattern is dominant when the two sides
have sizes floor(q/2) and ceil(q/2) in some order; dominant patterns
maximize the per-site entropy of pure pattern colorings and index every
decomposition in this package.

Each dominant pattern carries its own parity convention: the side of
size floor(q/2) is the boundary side, the other the interior side, and a
vertex is P-even exactly when its lattice parity matches the side
assignment.  For patterns with |A| <= |B| (class 0) P-even coincides
with lattice-even; for |A| > |B| (class 1, odd q only) it is flipped.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, TYPE_CHECKING

from .errors import ConfigError, PreconditionError

if TYPE_CHECKING:  # pragma: no cover
    from .coloring import Coloring
    from .lattice import LatticeGraph, VertexSet

MAX_COLORS = 62


def color_mask(colors: Iterable[int], q: int) -> int:
    bits = 0
    for c in colors:
        if not 1 <= c <= q:
            raise ConfigError(f"color {c} outside 1..{q}")
        bits |= 1 << (c - 1)
    return bits


def mask_colors(bits: int) -> tuple[int, ...]:
    out = []
    while bits:
        low = bits & -bits
        out.append(low.bit_length())
        bits ^= low
    return tuple(out)


@dataclass(frozen=True)
class Pattern:
    """Ordered pair of disjoint color subsets over 1..q, stored as bitmasks."""

    q: int
    a_bits: int
    b_bits: int

    def __post_init__(self):
        if not 2 <= self.q <= MAX_COLORS:
            raise ConfigError(f"q must be in 2..{MAX_COLORS}, got {self.q}")
        full = (1 << self.q) - 1
        if self.a_bits & ~full or self.b_bits & ~full:
            raise ConfigError("pattern side uses a color outside 1..q")
        if self.a_bits & self.b_bits:
            raise ConfigError("pattern sides must be disjoint")

    @classmethod
    def make(cls, q: int, a: Iterable[int], b: Iterable[int]) -> "Pattern":
        return cls(q, color_mask(a, q), color_mask(b, q))

    @property
    def a(self) -> tuple[int, ...]:
        return mask_colors(self.a_bits)

    @property
    def b(self) -> tuple[int, ...]:
        return mask_colors(self.b_bits)

    @property
    def size_a(self) -> int:
        return self.a_bits.bit_count()

    @property
    def size_b(self) -> int:
        return self.b_bits.bit_count()

    def is_dominant(self) -> bool:
        sizes = {self.size_a, self.size_b}
        return sizes == {self.q // 2, (self.q + 1) // 2}

    @property
    def klass(self) -> int:
        """0 when |A| <= |B|, 1 otherwise."""
        return 0 if self.size_a <= self.size_b else 1

    @property
    def bdry_bits(self) -> int:
        """The side of size floor(q/2) (A for class 0, B for class 1)."""
        return self.a_bits if self.klass == 0 else self.b_bits

    @property
    def int_bits(self) -> int:
        """The side of size ceil(q/2)."""
        return self.b_bits if self.klass == 0 else self.a_bits

    def reversed(self) -> "Pattern":
        return Pattern(self.q, self.b_bits, self.a_bits)

    def side_for_parity(self, parity: int) -> int:
        """Color mask a vertex of the given lattice parity draws from."""
        return self.a_bits if parity == 0 else self.b_bits

    def sort_key(self) -> tuple[int, int, int]:
        return (self.size_a, self.a_bits, self.b_bits)

    def text(self) -> str:
        a = ",".join(str(c) for c in self.a)
        b = ",".join(str(c) for c in self.b)
        return f"A={a};B={b}"

    @classmethod
    def parse(cls, q: int, text: str) -> "Pattern":
        try:
            fields = dict(part.split("=", 1) for part in text.strip().split(";"))
            a = [int(x) for x in fields["A"].split(",") if x]
            b = [int(x) for x in fields["B"].split(",") if x]
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad pattern text {text!r}") from exc
        return cls.make(q, a, b)

    def __repr__(self) -> str:
        return f"Pattern(q={self.q}, {self.text()})"


@dataclass(frozen=True)
class PatternSides:
    bdry: tuple[int, ...]
    interior: tuple[int, ...]
    klass: int


def enumerate_dominant(q: int) -> list[Pattern]:
    """All dominant patterns, sorted by (|A|, A-mask, B-mask).

    There are C(q, q/2) for even q and 2*C(q, floor(q/2)) for odd q.
    """
    if q < 3:
        raise ConfigError("dominant pattern enumeration needs q >= 3")
    if q > MAX_COLORS:
        raise ConfigError(f"q must be at most {MAX_COLORS}")
    half = q // 2
    sizes = [half] if q % 2 == 0 else [half, q - half]
    full = (1 << q) - 1
    out = []
    for size in sizes:
        for combo in itertools.combinations(range(1, q + 1), size):
            a_bits = color_mask(combo, q)
            out.append(Pattern(q, a_bits, full & ~a_bits))
    out.sort(key=Pattern.sort_key)
    return out


def pattern_sides(P: Pattern) -> PatternSides:
    if not P.is_dominant():
        raise PreconditionError(f"{P!r} is not dominant")
    return PatternSides(
        bdry=mask_colors(P.bdry_bits),
        interior=mask_colors(P.int_bits),
        klass=P.klass,
    )


def is_p_even(v: int, P: Pattern, G: "LatticeGraph") -> bool:
    """P-even means lattice parity equals the pattern class."""
    return G.parity[v] == P.klass


def p_parity(v: int, P: Pattern, G: "LatticeGraph") -> str:
    if not P.is_dominant():
        raise PreconditionError(f"{P!r} is not dominant")
    return "P-even" if is_p_even(v, P, G) else "P-odd"


def p_even_set(G: "LatticeGraph", P: Pattern) -> "VertexSet":
    return G.even if P.klass == 0 else G.odd


def p_odd_set(G: "LatticeGraph", P: Pattern) -> "VertexSet":
    return G.odd if P.klass == 0 else G.even


def vertex_in_pattern(value: int, parity: int, P: Pattern) -> bool:
    """Whether one color at one lattice parity fits the pattern."""
    if value < 1:
        return False
    return bool((P.side_for_parity(parity) >> (value - 1)) & 1)


def in_pattern(f: "Coloring", U: "VertexSet", P: Pattern, G: "LatticeGraph") -> bool:
    """True when every vertex of U follows (A, B): evens in A, odds in B."""
    values = f.values
    for v in U:
        if not vertex_in_pattern(values[v], G.parity[v], P):
            return False
    return True


def pattern_violations(f: "Coloring", U: "VertexSet", P: Pattern, G: "LatticeGraph") -> list[int]:
    values = f.values
    return [v for v in U if not vertex_in_pattern(values[v], G.parity[v], P)]


def canonical_permutation(P: Pattern, P0: Pattern) -> dict[int, int]:
    """Order-preserving recoloring taking P onto P0 (class 0) or reversed P0.

    The A-side of P maps onto the equally-sized side of the target in
    ascending color order, likewise the B-side; the choice is unique, so
    downstream constructions that need *a* pattern-aligning permutation
    are reproducible.
    """
    if not (P.is_dominant() and P0.is_dominant()):
        raise PreconditionError("both patterns must be dominant")
    if P.q != P0.q:
        raise PreconditionError("patterns use different color counts")
    if P0.klass != 0:
        raise PreconditionError("the reference pattern must have |A| <= |B|")
    target = P0 if P.klass == 0 else P0.reversed()
    perm: dict[int, int] = {}
    for src, dst in zip(P.a, target.a):
        perm[src] = dst
    for src, dst in zip(P.b, target.b):
        perm[src] = dst
    leftovers_src = [c for c in range(1, P.q + 1) if c not in perm]
    used = set(perm.values())
    leftovers_dst = [c for c in range(1, P.q + 1) if c not in used]
    for src, dst in zip(leftovers_src, leftovers_dst):
        perm[src] = dst
    return perm
