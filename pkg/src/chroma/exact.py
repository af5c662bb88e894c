"""Exact counting of proper colorings: backtracking and transfer matrix.

Counts are arbitrary-precision integers and every derived probability or
ratio is an exact Fraction, so equality claims (for instance the sharp
entropy-cost ratios of single pattern droplets) can be tested without
floating-point slack.

Two independent engines are provided on purpose: a backtracking counter
with forward checking, and a layer-by-layer transfer dynamic program.
They must agree to the last digit wherever both run, and the test suite
holds them to that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping

from .coloring import BoundaryCondition
from .errors import (
    ConfigError,
    PreconditionError,
    ResourceLimitError,
    UndefinedMeasureError,
)
from .lattice import LatticeGraph, VertexSet, closed_neighborhood, edge_set
from .patterns import Pattern


@dataclass(frozen=True)
class CountResult:
    count: int
    log_count_per_site: float
    method: str

    def to_json(self, instance: Mapping | None = None) -> dict:
        out = {"count": str(self.count), "method": self.method}
        if instance is not None:
            out["instance"] = dict(instance)
        return out


@dataclass(frozen=True)
class Constraint:
    """free | pattern-boundary(P) | pinned(vertex -> color)."""

    kind: str
    pattern: Pattern | None = None
    pins: tuple[tuple[int, int], ...] = ()

    @classmethod
    def free(cls) -> "Constraint":
        return cls("free")

    @classmethod
    def pattern_boundary(cls, P: Pattern) -> "Constraint":
        if not P.is_dominant():
            raise ConfigError("boundary constraint needs a dominant pattern")
        return cls("pattern", pattern=P)

    @classmethod
    def pinned(cls, pins: Mapping[int, int]) -> "Constraint":
        return cls("pinned", pins=tuple(sorted(pins.items())))

    def with_pin(self, v: int, c: int) -> "Constraint":
        pins = dict(self.pins)
        pins[v] = c
        return Constraint(self.kind, self.pattern, tuple(sorted(pins.items())))


def boundary_cells(G: LatticeGraph, domain: VertexSet) -> VertexSet:
    """Cells of the domain facing its complement or a non-periodic face."""
    from .lattice import vertex_boundaries

    internal, _, _ = vertex_boundaries(G, domain)
    return internal | (domain & G.rim)


def allowed_masks(
    G: LatticeGraph, domain: VertexSet, q: int, constraint: Constraint
) -> tuple[list[int], bool]:
    """Per-vertex color bitmasks for the domain; second value is feasibility.

    Pins inside the domain force single colors; pins outside it knock
    their color out of adjacent domain cells.  Infeasibility (a pinned
    pair clashing, or an empty mask) yields count zero, not an error.
    """
    full = (1 << q) - 1
    masks = [full if v in domain else 0 for v in range(G.n)]
    feasible = True
    if constraint.kind == "pattern":
        P = constraint.pattern
        for v in boundary_cells(G, domain):
            masks[v] &= P.side_for_parity(G.parity[v])
    pins = dict(constraint.pins)
    for v, c in pins.items():
        if not 1 <= c <= q:
            raise ConfigError(f"pinned color {c} outside 1..{q}")
    for v, c in pins.items():
        for u in G.neighbors[v]:
            if u in pins and pins[u] == c:
                feasible = False
    for v, c in pins.items():
        bit = 1 << (c - 1)
        if v in domain:
            masks[v] &= bit
        for u in G.neighbors[v]:
            if u in domain and u not in pins:
                masks[u] &= ~bit
    for v in domain:
        if masks[v] == 0:
            feasible = False
    return masks, feasible


# -- backtracking engine -------------------------------------------------------

try:  # pragma: no cover - exercised implicitly
    import numpy as _np
    from numba import njit as _njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _HAVE_NUMBA = False


def _count_core_impl(masks0, nbr_flat, nbr_off):
    """Iterative MRV backtracking with forward checking over bitmask domains.

    Vertices are positions in ascending id order; ties in the
    minimum-remaining-values choice resolve to the smallest id.  Domain
    wipes are undone from per-depth touch lists, and the last unassigned
    vertex contributes its remaining-color count directly instead of
    branching.
    """
    m = masks0.shape[0]
    count = 0
    cur = masks0.copy()
    cnt = _np.zeros(m, _np.int64)
    for i in range(m):
        x = cur[i]
        c = 0
        while x:
            x &= x - 1
            c += 1
        cnt[i] = c
    max_deg = 0
    for v in range(m):
        deg = nbr_off[v + 1] - nbr_off[v]
        if deg > max_deg:
            max_deg = deg
    touched = _np.zeros((m + 1, max_deg + 1), _np.int64)
    saved = _np.zeros((m + 1, max_deg + 1), _np.int64)
    n_touched = _np.zeros(m + 1, _np.int64)
    chosen = _np.zeros(m + 1, _np.int64)
    avail = _np.zeros(m + 1, _np.int64)
    assigned = _np.zeros(m, _np.uint8)
    d = 0
    entering = True
    while True:
        if entering:
            if d == m:
                count += 1
                entering = False
                d -= 1
                continue
            best = -1
            best_cnt = 1 << 30
            for i in range(m):
                if assigned[i] == 0 and cnt[i] < best_cnt:
                    best_cnt = cnt[i]
                    best = i
            if best_cnt == 0:
                entering = False
                d -= 1
                continue
            if d == m - 1:
                count += best_cnt
                entering = False
                d -= 1
                continue
            chosen[d] = best
            avail[d] = cur[best]
            assigned[best] = 1
            n_touched[d] = 0
            entering = False
            continue
        if d < 0:
            break
        v = chosen[d]
        # undo the previous color's forward checking at this depth
        for k in range(n_touched[d]):
            u = touched[d, k]
            cur[u] = saved[d, k]
            x = cur[u]
            c = 0
            while x:
                x &= x - 1
                c += 1
            cnt[u] = c
        n_touched[d] = 0
        if avail[d] == 0:
            assigned[v] = 0
            d -= 1
            continue
        low = avail[d] & (-avail[d])
        avail[d] ^= low
        dead = False
        nt = 0
        for e in range(nbr_off[v], nbr_off[v + 1]):
            u = nbr_flat[e]
            if assigned[u] == 0 and cur[u] & low:
                touched[d, nt] = u
                saved[d, nt] = cur[u]
                nt += 1
                cur[u] &= ~low
                cnt[u] -= 1
                if cnt[u] == 0:
                    dead = True
        n_touched[d] = nt
        if dead:
            continue
        d += 1
        entering = True
    return count


if _HAVE_NUMBA:
    _count_core = _njit(cache=True)(_count_core_impl)
else:  # pragma: no cover
    _count_core = None


def _count_backtrack_python(order: list[int], nbrs: list[list[int]], cur: list[int]) -> int:
    n = len(order)
    assigned = [False] * n

    def rec(remaining: int) -> int:
        if remaining == 0:
            return 1
        best, best_cnt = -1, 1 << 30
        for i in range(n):
            if not assigned[i]:
                c = cur[i].bit_count()
                if c < best_cnt:
                    best, best_cnt = i, c
        if best_cnt == 0:
            return 0
        if remaining == 1:
            return best_cnt
        i = best
        assigned[i] = True
        total = 0
        avail = cur[i]
        while avail:
            low = avail & -avail
            avail ^= low
            touched = []
            dead = False
            for j in nbrs[i]:
                if not assigned[j] and cur[j] & low:
                    cur[j] &= ~low
                    touched.append(j)
                    if cur[j] == 0:
                        dead = True
            if not dead:
                total += rec(remaining - 1)
            for j in touched:
                cur[j] |= low
        assigned[i] = False
        return total

    return rec(n)


def _count_backtrack(G: LatticeGraph, domain: VertexSet, masks: list[int]) -> int:
    order = list(domain)
    if not order:
        return 1
    index = {v: i for i, v in enumerate(order)}
    nbrs = [[index[u] for u in G.neighbors[v] if u in domain] for v in order]
    cur = [masks[v] for v in order]
    if _HAVE_NUMBA:
        m = len(order)
        off = _np.zeros(m + 1, _np.int64)
        for i in range(m):
            off[i + 1] = off[i] + len(nbrs[i])
        flat = _np.zeros(int(off[-1]), _np.int64)
        for i in range(m):
            flat[off[i]: off[i + 1]] = nbrs[i]
        return int(_count_core(_np.array(cur, _np.int64), flat, off))
    return _count_backtrack_python(order, nbrs, cur)


def enumerate_colorings(
    G: LatticeGraph, domain: VertexSet, masks: list[int]
) -> Iterator[dict[int, int]]:
    """Yield every proper assignment of the domain respecting the masks."""
    order = list(domain)
    values: dict[int, int] = {}

    def rec(i: int) -> Iterator[dict[int, int]]:
        if i == len(order):
            yield dict(values)
            return
        v = order[i]
        avail = masks[v]
        for u in G.neighbors[v]:
            if u in values:
                avail &= ~(1 << (values[u] - 1))
        while avail:
            low = avail & -avail
            avail ^= low
            values[v] = low.bit_length()
            yield from rec(i + 1)
            del values[v]

    yield from rec(0)


# -- transfer-matrix engine ----------------------------------------------------


def _layer_states(
    G: LatticeGraph,
    cells: list[int],
    masks: list[int],
    budget: int,
) -> list[tuple[int, ...]]:
    raw = 1
    for v in cells:
        raw *= max(masks[v].bit_count(), 1)
        if raw > budget:
            raise ResourceLimitError(
                f"layer state space exceeds the budget of {budget} states"
            )
    pairs = [
        (i, j)
        for i, u in enumerate(cells)
        for j, w in enumerate(cells)
        if i < j and w in G.neighbors[u]
    ]
    states: list[tuple[int, ...]] = []
    state = [0] * len(cells)

    def rec(i: int) -> None:
        if i == len(cells):
            states.append(tuple(state))
            return
        avail = masks[cells[i]]
        for j, k in pairs:
            if k == i and state[j]:
                avail &= ~(1 << (state[j] - 1))
        while avail:
            low = avail & -avail
            avail ^= low
            state[i] = low.bit_length()
            rec(i + 1)
        state[i] = 0

    rec(0)
    return states


def transfer_count(
    G: LatticeGraph,
    q: int,
    constraint: Constraint | None = None,
    state_budget: int = 500_000,
) -> CountResult:
    """Exact whole-box count via a dynamic program over one axis.

    Layers slide along the longest non-periodic axis; a layer state is a
    proper coloring of the cross-section consistent with the per-cell
    masks, and consecutive layers must differ cell-by-cell.
    """
    constraint = constraint or Constraint.free()
    axes = [a for a in range(G.d) if not G.periodic[a]]
    if not axes:
        raise PreconditionError("transfer counting needs a non-periodic axis")
    axis = max(axes, key=lambda a: G.dims[a])
    masks, feasible = allowed_masks(G, G.full_set(), q, constraint)
    if not feasible:
        return CountResult(0, float("-inf"), "transfer")
    layers: list[list[int]] = [[] for _ in range(G.dims[axis])]
    for v in range(G.n):
        layers[G.coords(v)[axis]].append(v)

    prev_states = _layer_states(G, layers[0], masks, state_budget)
    counts = [1] * len(prev_states)
    for k in range(1, G.dims[axis]):
        states = _layer_states(G, layers[k], masks, state_budget)
        compat: list[list[int]] = [[] for _ in states]
        for j, s2 in enumerate(states):
            for i, s1 in enumerate(prev_states):
                if all(a != b for a, b in zip(s1, s2)):
                    compat[j].append(i)
        counts = [sum(counts[i] for i in compat[j]) for j in range(len(states))]
        prev_states = states
    total = sum(counts)
    log_per_site = math.log(total) / G.n if total else float("-inf")
    return CountResult(total, log_per_site, "transfer")


def count_colorings(
    G: LatticeGraph,
    domain: VertexSet,
    q: int,
    constraint: Constraint | None = None,
    method: str = "auto",
    state_budget: int = 500_000,
) -> CountResult:
    """Exact number of proper colorings of the domain under the constraint.

    method 'auto' uses the transfer engine when the domain is the whole
    box and a non-periodic axis exists, otherwise backtracking.
    """
    constraint = constraint or Constraint.free()
    if method not in ("auto", "backtracking", "transfer"):
        raise ConfigError(f"unknown counting method {method!r}")
    if method == "transfer" or (
        method == "auto"
        and domain == G.full_set()
        and any(not p for p in G.periodic)
        and G.n > 16
    ):
        if domain != G.full_set():
            raise PreconditionError("transfer counting covers whole boxes only")
        return transfer_count(G, q, constraint, state_budget)
    masks, feasible = allowed_masks(G, domain, q, constraint)
    if not feasible:
        return CountResult(0, float("-inf"), "backtracking")
    total = _count_backtrack(G, domain, masks)
    size = max(len(domain), 1)
    log_per_site = math.log(total) / size if total else float("-inf")
    return CountResult(total, log_per_site, "backtracking")


# -- marginals, distances, ratios ---------------------------------------------


@dataclass(frozen=True)
class ExactMarginal:
    vertex: int
    probs: tuple[Fraction, ...]

    def to_json(self) -> dict:
        return {
            "vertex": self.vertex,
            "probs": [f"{p.numerator}/{p.denominator}" for p in self.probs],
        }


def exact_marginal(
    G: LatticeGraph,
    domain: VertexSet,
    q: int,
    v: int,
    constraint: Constraint | None = None,
    method: str = "auto",
) -> ExactMarginal:
    """Exact color distribution at v under the constrained uniform measure."""
    if v not in domain:
        raise PreconditionError(f"vertex {v} is outside the domain")
    constraint = constraint or Constraint.free()
    total = count_colorings(G, domain, q, constraint, method).count
    if total == 0:
        raise UndefinedMeasureError("no proper coloring satisfies the constraint")
    probs = []
    for c in range(1, q + 1):
        pinned = count_colorings(G, domain, q, constraint.with_pin(v, c), method).count
        probs.append(Fraction(pinned, total))
    if sum(probs) != 1:
        raise PreconditionError("marginal slices do not add up; inconsistent pins?")
    return ExactMarginal(v, tuple(probs))


def tv_distance(m1: Mapping, m2: Mapping, universe: Iterable | None = None) -> Fraction:
    """Total-variation distance, half the L1 difference over the support."""
    keys = set(m1) | set(m2)
    if universe is not None:
        allowed = set(universe)
        if not keys <= allowed:
            raise PreconditionError("distributions live on mismatched universes")
    total = Fraction(0)
    for k in keys:
        total += abs(Fraction(m1.get(k, 0)) - Fraction(m2.get(k, 0)))
    return total / 2


@dataclass(frozen=True)
class ToyRatio:
    ratio: Fraction
    bound_base: Fraction
    bound_exponent: Fraction
    verdict: str  # 'equal' | 'below' | 'above'
    expected_equality: bool
    n_u: int
    n_empty: int

    def bound_float(self) -> float:
        return float(self.bound_base) ** float(self.bound_exponent)

    def to_json(self) -> dict:
        return {
            "ratio": f"{self.ratio.numerator}/{self.ratio.denominator}",
            "bound_base": f"{self.bound_base.numerator}/{self.bound_base.denominator}",
            "bound_exponent": f"{self.bound_exponent.numerator}/{self.bound_exponent.denominator}",
            "verdict": self.verdict,
            "expected_equality": self.expected_equality,
            "n_u": str(self.n_u),
            "n_empty": str(self.n_empty),
        }


def _compare_power(ratio: Fraction, base: Fraction, exponent: Fraction) -> int:
    """Sign of ratio - base**exponent, computed exactly."""
    lhs = ratio ** exponent.denominator
    rhs = base ** exponent.numerator
    if lhs == rhs:
        return 0
    return -1 if lhs < rhs else 1


def toy_ratio(
    G: LatticeGraph,
    domain: VertexSet,
    U: VertexSet,
    p0: Pattern,
    p: Pattern,
) -> ToyRatio:
    """Entropy cost of ordering a droplet U by pattern p inside a p0 sea.

    Counts colorings of the domain with U^+ in the p-pattern and
    (domain minus U)^+ in the p0-pattern, divided by the count for the
    empty droplet, and compares the exact ratio against the sharp
    per-interface bound: ((q-2)/q)^{|vertex boundary of U|} for even q,
    ((q-1)/(q+1))^{|edge boundary of U| / 2d} for odd q.
    """
    q = p0.q
    if p.q != q:
        raise PreconditionError("patterns use different color counts")
    if not (p0.is_dominant() and p.is_dominant()):
        raise PreconditionError("both patterns must be dominant")
    if not closed_neighborhood(G, U).issubset(domain):
        raise PreconditionError("U^+ must be inside the domain")

    def droplet_count(drop: VertexSet) -> int:
        full = (1 << q) - 1
        masks = [full if v in domain else 0 for v in range(G.n)]
        for v in closed_neighborhood(G, drop) & domain if drop else []:
            masks[v] &= p.side_for_parity(G.parity[v])
        sea = closed_neighborhood(G, domain - drop) & domain
        for v in sea:
            masks[v] &= p0.side_for_parity(G.parity[v])
        for v in domain:
            if masks[v] == 0:
                return 0
        if domain == G.full_set() and any(not per for per in G.periodic):
            return _transfer_with_masks(G, masks)
        return _count_backtrack(G, domain, masks)

    n_empty = droplet_count(G.empty_set())
    if n_empty == 0:
        raise UndefinedMeasureError("the pure-pattern reference count is zero")
    n_u = droplet_count(U)
    ratio = Fraction(n_u, n_empty)

    from .lattice import vertex_boundaries

    if q % 2 == 0:
        _, _, both = vertex_boundaries(G, U)
        exponent = Fraction(len(both))
        base = Fraction(q - 2, q)
        a0, a = set(p0.a), set(p.a)
        expected_eq = bool(U) and len(a0 ^ a) == 2
    else:
        boundary_edges = edge_set(G, U, U.complement())
        exponent = Fraction(len(boundary_edges), 2 * G.d)
        base = Fraction(q - 1, q + 1)
        internal, _, _ = vertex_boundaries(G, U)
        u_is_odd = all(G.parity[v] == 1 for v in internal)
        u_is_even = all(G.parity[v] == 0 for v in internal)
        a0, a = set(p0.a), set(p.a)
        b0, b = set(p0.b), set(p.b)
        expected_eq = bool(U) and (
            (u_is_odd and a0 <= a) or (u_is_even and b0 <= b)
        )
    if not U:
        verdict = "equal" if ratio == 1 else "below"
        return ToyRatio(ratio, base, Fraction(0), verdict, False, n_u, n_empty)
    sign = _compare_power(ratio, base, exponent)
    verdict = {0: "equal", -1: "below", 1: "above"}[sign]
    return ToyRatio(ratio, base, exponent, verdict, expected_eq, n_u, n_empty)


def _transfer_with_masks(G: LatticeGraph, masks: list[int]) -> int:
    axes = [a for a in range(G.d) if not G.periodic[a]]
    axis = max(axes, key=lambda a: G.dims[a])
    layers: list[list[int]] = [[] for _ in range(G.dims[axis])]
    for v in range(G.n):
        layers[G.coords(v)[axis]].append(v)
    prev_states = _layer_states(G, layers[0], masks, 500_000)
    counts = [1] * len(prev_states)
    for k in range(1, G.dims[axis]):
        states = _layer_states(G, layers[k], masks, 500_000)
        compat: list[list[int]] = [[] for _ in states]
        for j, s2 in enumerate(states):
            for i, s1 in enumerate(prev_states):
                if all(a != b for a, b in zip(s1, s2)):
                    compat[j].append(i)
        counts = [sum(counts[i] for i in compat[j]) for j in range(len(states))]
        prev_states = states
    return sum(counts)


@dataclass(frozen=True)
class HtopPoint:
    dims: tuple[int, ...]
    count: int
    log_per_site: float
    lower_bound: float
    meets_bound: bool


def htop_estimate(
    q: int,
    boxes: Iterable[Iterable[int]],
    periodic: bool = True,
) -> list[HtopPoint]:
    """Per-box log(count)/sites for free colorings, with the pure-pattern bound.

    On even-sided tori the density can never fall below
    log(floor(q/2) * ceil(q/2)) / 2, witnessed by the pure pattern
    colorings themselves; the bound is checked there and merely reported
    elsewhere.
    """
    bound = 0.5 * math.log((q // 2) * ((q + 1) // 2))
    out = []
    for dims in boxes:
        dims = tuple(int(x) for x in dims)
        per = tuple(periodic for _ in dims)
        G = LatticeGraph(dims, per)
        if periodic:
            masks = [(1 << q) - 1] * G.n
            count = _count_backtrack(G, G.full_set(), masks)
            method_is_torus = True
        else:
            count = count_colorings(G, G.full_set(), q).count
            method_is_torus = False
        log_per_site = math.log(count) / G.n if count else float("-inf")
        binding = method_is_torus and all(x % 2 == 0 for x in dims)
        meets = (not binding) or log_per_site >= bound - 1e-12
        if binding and not meets:
            raise PreconditionError(
                f"torus {dims} fell below the pure-pattern entropy bound"
            )
        out.append(HtopPoint(dims, count, log_per_site, bound, meets))
    return out


def marginal_constraint_for_bc(bc: BoundaryCondition) -> Constraint:
    return Constraint.pattern_boundary(bc.pattern)
