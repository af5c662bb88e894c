"""Heat-bath and cluster MCMC for pattern-constrained proper colorings.

The target measure is uniform over proper colorings of a domain whose
boundary cells are confined to the sides of a reference dominant
pattern; cells outside the domain are frozen to an in-pattern exterior.
The heat-bath move resamples one cell uniformly over the colors its
constraint allows and its neighbors do not block; the cluster move picks
two colors and swaps them on a random subset of the two-colored
components that touch no frozen or constrained cell carrying either
color.  Both moves preserve the target measure exactly; mixing is not
certified, so runs report a split-half agreement diagnostic instead of
claiming convergence.

All randomness comes from one Philox stream per chain, so a (seed,
config) pair reproduces every output byte, with or without the optional
numba acceleration.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
import numpy as np

from .coloring import Coloring, is_proper, pure_pattern_sample
from .errors import ConfigError, InternalInvariantError, PreconditionError
from .exact import Constraint, allowed_masks, enumerate_colorings
from .lattice import LatticeGraph, VertexSet, connected_components
from .patterns import Pattern
from .rng import make_rng

try:  # pragma: no cover - exercised implicitly
    from numba import njit as _njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _HAVE_NUMBA = False

    def _njit(**kwargs):
        def deco(fn):
            return fn

        return deco


def _sweep_chunk_impl(colors, site_pos, scan, nbr_flat, nbr_off, allowed,
                      pat_mask, rand, record, viol, occ, status):
    n_scan = scan.shape[0]
    for s in range(rand.shape[0]):
        for k in range(n_scan):
            i = site_pos[s, k]
            v = scan[i]
            used = 0
            for e in range(nbr_off[v], nbr_off[v + 1]):
                c = colors[nbr_flat[e]]
                if c > 0:
                    used |= 1 << (c - 1)
            avail = allowed[i] & ~used
            na = 0
            tmp = avail
            while tmp:
                tmp &= tmp - 1
                na += 1
            if na == 0:
                # impossible for a proper in-constraint state; flag and keep
                status[0] = 1
                continue
            pick = int(rand[s, k] * na)
            if pick >= na:
                pick = na - 1
            j = 0
            cnt = 0
            while True:
                if (avail >> j) & 1:
                    if cnt == pick:
                        break
                    cnt += 1
                j += 1
            colors[v] = j + 1
        if record[s]:
            for i in range(n_scan):
                c = colors[scan[i]]
                occ[i, c - 1] += 1
                if (pat_mask[i] >> (c - 1)) & 1 == 0:
                    viol[i] += 1


if _HAVE_NUMBA:
    _sweep_chunk = _njit(cache=True)(_sweep_chunk_impl)
else:  # pragma: no cover
    _sweep_chunk = _sweep_chunk_impl


@dataclass(frozen=True)
class ChainConfig:
    dims: tuple[int, ...]
    q: int
    pattern: str                      # e.g. "A=1;B=2,3"
    seed: int
    sweeps: int
    periodic: tuple[bool, ...] | None = None
    margin: int = 0                   # domain = cells at L-inf depth >= margin
    burn_in: int = 0
    thin: int = 1
    algorithm: str = "heat-bath"      # or "heat-bath+cluster"
    cluster_every: int = 8
    scan: str = "systematic"          # or "random"
    chains: int = 1

    def __post_init__(self):
        if self.sweeps < self.burn_in or self.burn_in < 0:
            raise ConfigError("need sweeps >= burn_in >= 0")
        if self.thin < 1:
            raise ConfigError("thin must be >= 1")
        if self.algorithm not in ("heat-bath", "heat-bath+cluster"):
            raise ConfigError(f"unknown algorithm {self.algorithm!r}")
        if self.scan not in ("systematic", "random"):
            raise ConfigError(f"unknown scan mode {self.scan!r}")
        if self.chains < 1:
            raise ConfigError("chains must be >= 1")
        if self.algorithm == "heat-bath+cluster" and self.cluster_every < 1:
            raise ConfigError("cluster_every must be >= 1")

    def graph(self) -> LatticeGraph:
        return LatticeGraph(self.dims, self.periodic)

    def domain(self, G: LatticeGraph) -> VertexSet:
        if self.margin == 0:
            return G.full_set()
        bits = 0
        for v in range(G.n):
            cs = G.coords(v)
            ok = True
            for axis, c in enumerate(cs):
                if G.periodic[axis]:
                    continue
                if c < self.margin or c >= G.dims[axis] - self.margin:
                    ok = False
                    break
            if ok:
                bits |= 1 << v
        if not bits:
            raise ConfigError("margin leaves an empty domain")
        return VertexSet(bits, G.n)

    def p0(self) -> Pattern:
        P = Pattern.parse(self.q, self.pattern)
        if not P.is_dominant() or P.klass != 0:
            raise ConfigError("chain pattern must be dominant with |A| <= |B|")
        return P


@dataclass(frozen=True)
class OrderStats:
    vertex_ids: tuple[int, ...]
    samples: int
    violation_counts: tuple[int, ...]
    occupation_counts: tuple[tuple[int, ...], ...]
    parity_occupation: dict[str, tuple[float, ...]]
    split_half_max_diff: float

    def violation_rates(self) -> tuple[float, ...]:
        return tuple(c / self.samples for c in self.violation_counts)

    def occupation_rates(self) -> tuple[tuple[float, ...], ...]:
        return tuple(
            tuple(c / self.samples for c in row) for row in self.occupation_counts
        )

    def vertex_marginal(self, v: int) -> dict[int, Fraction]:
        i = self.vertex_ids.index(v)
        return {
            c + 1: Fraction(self.occupation_counts[i][c], self.samples)
            for c in range(len(self.occupation_counts[i]))
        }

    def csv_rows(self) -> list[list]:
        rows = []
        for i, v in enumerate(self.vertex_ids):
            rate = self.violation_counts[i] / self.samples
            occ = [c / self.samples for c in self.occupation_counts[i]]
            rows.append([v, rate, *occ])
        return rows


def _flatten_neighbors(G: LatticeGraph) -> tuple[np.ndarray, np.ndarray]:
    off = np.zeros(G.n + 1, dtype=np.int64)
    for v in range(G.n):
        off[v + 1] = off[v] + len(G.neighbors[v])
    flat = np.zeros(off[-1], dtype=np.int64)
    for v in range(G.n):
        flat[off[v]: off[v + 1]] = G.neighbors[v]
    return flat, off


def _domain_masks(
    G: LatticeGraph, domain: VertexSet, q: int, p0: Pattern | None
) -> tuple[np.ndarray, np.ndarray, list[int]]:
    """(allowed mask, violation mask) per domain cell, plus the scan order.

    With no reference pattern the dynamics is free: full masks and no
    violations to tally.
    """
    scan = list(domain)
    full = (1 << q) - 1
    if p0 is None:
        allowed = np.full(len(scan), full, dtype=np.int64)
        return allowed, allowed.copy(), scan
    masks, feasible = allowed_masks(G, domain, q, Constraint.pattern_boundary(p0))
    if not feasible:
        raise PreconditionError("the boundary pattern admits no coloring here")
    allowed = np.array([masks[v] for v in scan], dtype=np.int64)
    pat = np.array(
        [p0.side_for_parity(G.parity[v]) for v in scan], dtype=np.int64
    )
    return allowed, pat, scan


def heat_bath_sweep(
    f: Coloring,
    G: LatticeGraph,
    domain: VertexSet,
    p0: Pattern | None,
    rng: np.random.Generator,
    assert_proper: bool = False,
) -> Coloring:
    """One systematic scan of single-site resampling; returns a new coloring.

    Cells outside the domain are untouched.  A proper state satisfying
    the constraint always keeps at least one admissible color (its
    current one); starting from a state outside the constraint set is a
    contract violation and is reported.
    """
    allowed, _, scan = _domain_masks(G, domain, f.q, p0)
    colors = np.array(f.values, dtype=np.int64)
    nbr_flat, nbr_off = _flatten_neighbors(G)
    rand = rng.random((1, len(scan)))
    site_pos = np.arange(len(scan), dtype=np.int64).reshape(1, -1)
    viol = np.zeros(len(scan), dtype=np.int64)
    occ = np.zeros((len(scan), f.q), dtype=np.int64)
    record = np.zeros(1, dtype=np.uint8)
    status = np.zeros(1, dtype=np.int64)
    _sweep_chunk(colors, site_pos, np.array(scan, dtype=np.int64), nbr_flat,
                 nbr_off, allowed, allowed, rand, record, viol, occ, status)
    if status[0]:
        raise PreconditionError(
            "a cell had no admissible color; the initial coloring violates "
            "the boundary constraint"
        )
    out = Coloring([int(c) for c in colors], f.q)
    if assert_proper and not is_proper(out, G):
        raise InternalInvariantError("heat-bath sweep broke properness")
    return out


def swappable_components(
    f: Coloring,
    G: LatticeGraph,
    domain: VertexSet,
    p0: Pattern | None,
    a: int,
    b: int,
) -> list[VertexSet]:
    """Two-color components free to exchange a and b.

    Only unconstrained domain cells move; a component touching any
    frozen or boundary-constrained cell colored a or b stays put.
    """
    q = f.q
    full = (1 << q) - 1
    if p0 is None:
        masks = [full if v in domain else 0 for v in range(G.n)]
    else:
        masks, _ = allowed_masks(G, domain, q, Constraint.pattern_boundary(p0))
    movable_bits = 0
    for v in domain:
        if masks[v] == full and f.values[v] in (a, b):
            movable_bits |= 1 << v
    movable = VertexSet(movable_bits, G.n)
    out = []
    for comp in connected_components(G, movable):
        blocked = False
        for v in comp:
            for u in G.neighbors[v]:
                if u not in movable and f.values[u] in (a, b):
                    blocked = True
                    break
            if blocked:
                break
        if not blocked:
            out.append(comp)
    return out


def cluster_step(
    f: Coloring,
    G: LatticeGraph,
    domain: VertexSet,
    p0: Pattern | None,
    rng: np.random.Generator,
    assert_proper: bool = False,
) -> Coloring:
    """Swap two random colors on an independent half of their free components."""
    q = f.q
    pair = rng.choice(q, size=2, replace=False)
    a, b = int(pair[0]) + 1, int(pair[1]) + 1
    comps = swappable_components(f, G, domain, p0, a, b)
    out = f.copy()
    for comp in comps:
        if rng.random() < 0.5:
            for v in comp:
                out.values[v] = b if out.values[v] == a else a
    if assert_proper and not is_proper(out, G):
        raise InternalInvariantError("cluster step broke properness")
    return out


def _record_flags(start: int, stop: int, burn_in: int, thin: int) -> np.ndarray:
    """Record-after-sweep flags for sweeps start+1 .. stop."""
    flags = np.zeros(stop - start, dtype=np.uint8)
    for s in range(start + 1, stop + 1):
        if s >= burn_in and (s - burn_in) % thin == 0:
            flags[s - start - 1] = 1
    return flags


def _run_chain(cfg: ChainConfig, chain_index: int):
    G = cfg.graph()
    domain = cfg.domain(G)
    p0 = cfg.p0()
    q = cfg.q
    rng = make_rng(cfg.seed, stream=chain_index)
    init = pure_pattern_sample(G, G.full_set(), p0, seed=int(rng.integers(1 << 62)))
    colors = np.array(init.values, dtype=np.int64)
    allowed, pat, scan = _domain_masks(G, domain, q, p0)
    scan_arr = np.array(scan, dtype=np.int64)
    nbr_flat, nbr_off = _flatten_neighbors(G)
    n_scan = len(scan)

    halves = [
        {"viol": np.zeros(n_scan, dtype=np.int64),
         "occ": np.zeros((n_scan, q), dtype=np.int64),
         "samples": 0}
        for _ in range(2)
    ]
    planned = 1 if cfg.burn_in == 0 else 0
    for s in range(1, cfg.sweeps + 1):
        if s >= cfg.burn_in and (s - cfg.burn_in) % cfg.thin == 0:
            planned += 1
    first_half_target = (planned + 1) // 2

    def record_state(which: int) -> None:
        tally = halves[which]
        for i in range(n_scan):
            c = int(colors[scan[i]])
            tally["occ"][i, c - 1] += 1
            if (int(pat[i]) >> (c - 1)) & 1 == 0:
                tally["viol"][i] += 1
        tally["samples"] += 1

    recorded = 0
    if cfg.burn_in == 0:
        record_state(0 if recorded < first_half_target else 1)
        recorded += 1

    cluster_every = cfg.cluster_every if cfg.algorithm == "heat-bath+cluster" else 0
    max_chunk = cluster_every if cluster_every else 16384
    s = 0
    while s < cfg.sweeps:
        chunk = min(max_chunk, cfg.sweeps - s)
        # keep each recorded sample in the correct half tally
        flags = _record_flags(s, s + chunk, cfg.burn_in, cfg.thin)
        upcoming = int(flags.sum())
        if recorded < first_half_target < recorded + upcoming:
            cut = 0
            seen = 0
            for i, fl in enumerate(flags):
                if fl:
                    seen += 1
                    if recorded + seen == first_half_target:
                        cut = i + 1
                        break
            chunk = cut
            flags = flags[:cut]
        rand = rng.random((chunk, n_scan))
        if cfg.scan == "random":
            site_pos = rng.integers(0, n_scan, size=(chunk, n_scan)).astype(np.int64)
        else:
            site_pos = np.tile(np.arange(n_scan, dtype=np.int64), (chunk, 1))
        which = 0 if recorded < first_half_target else 1
        status = np.zeros(1, dtype=np.int64)
        _sweep_chunk(colors, site_pos, scan_arr, nbr_flat, nbr_off, allowed,
                     pat, rand, flags, halves[which]["viol"],
                     halves[which]["occ"], status)
        if status[0]:
            raise InternalInvariantError("the chain reached a stuck state")
        got = int(flags.sum())
        halves[which]["samples"] += got
        recorded += got
        s += chunk
        if cluster_every and s % cluster_every == 0 and s < cfg.sweeps:
            f_now = Coloring([int(c) for c in colors], q)
            f_next = cluster_step(f_now, G, domain, p0, rng)
            colors = np.array(f_next.values, dtype=np.int64)

    final = Coloring([int(c) for c in colors], q)
    if not is_proper(final, G):
        raise InternalInvariantError("chain ended on an improper coloring")
    for v in G.full_set() - domain:
        if final.values[v] != init.values[v]:
            raise InternalInvariantError("a frozen exterior cell changed")
    return scan, halves, G, p0


def run_experiment(cfg: ChainConfig, threads: int = 1) -> OrderStats:
    """Run the configured chains and pool their sample statistics.

    Sample states are taken after sweeps burn_in, burn_in + thin, ...;
    with burn_in = 0 the initial pure-pattern state is the first sample,
    so a zero-sweep run reports exactly the initial statistics.  Chains
    own disjoint Philox streams and merge by index, so the thread cap
    never changes any output byte.
    """
    G = cfg.graph()
    domain = cfg.domain(G)
    q = cfg.q
    scan = list(domain)
    n_scan = len(scan)
    viol = np.zeros(n_scan, dtype=np.int64)
    occ = np.zeros((n_scan, q), dtype=np.int64)
    first = {"viol": np.zeros(n_scan, dtype=np.int64),
             "occ": np.zeros((n_scan, q), dtype=np.int64), "samples": 0}
    second = {"viol": np.zeros(n_scan, dtype=np.int64),
              "occ": np.zeros((n_scan, q), dtype=np.int64), "samples": 0}
    total_samples = 0
    if threads > 1 and cfg.chains > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool_exec:
            results = list(pool_exec.map(
                lambda i: _run_chain(cfg, i), range(cfg.chains)
            ))
    else:
        results = [_run_chain(cfg, i) for i in range(cfg.chains)]
    for chain_scan, halves, G, p0 in results:
        for half, pool in zip(halves, (first, second)):
            pool["viol"] += half["viol"]
            pool["occ"] += half["occ"]
            pool["samples"] += half["samples"]
        viol += halves[0]["viol"] + halves[1]["viol"]
        occ += halves[0]["occ"] + halves[1]["occ"]
        total_samples += halves[0]["samples"] + halves[1]["samples"]
    if total_samples == 0:
        raise ConfigError("the run records no samples; lower burn_in or thin")

    parity_occ: dict[str, tuple[float, ...]] = {}
    for name, want in (("even", 0), ("odd", 1)):
        rows = [i for i, v in enumerate(scan) if G.parity[v] == want]
        if rows:
            sums = occ[rows].sum(axis=0)
            denom = int(sums.sum())
            parity_occ[name] = tuple(float(x) / denom for x in sums)
        else:
            parity_occ[name] = tuple(0.0 for _ in range(q))

    diff = 0.0
    if first["samples"] and second["samples"]:
        r1 = first["viol"] / first["samples"]
        r2 = second["viol"] / second["samples"]
        diff = float(np.max(np.abs(r1 - r2)))
    return OrderStats(
        vertex_ids=tuple(scan),
        samples=total_samples,
        violation_counts=tuple(int(x) for x in viol),
        occupation_counts=tuple(tuple(int(c) for c in row) for row in occ),
        parity_occupation=parity_occ,
        split_half_max_diff=diff,
    )


# -- exact reversibility check --------------------------------------------------


def single_site_transition_matrix(
    G: LatticeGraph,
    domain: VertexSet,
    q: int,
    constraint: Constraint | None = None,
) -> tuple[list[tuple[int, ...]], list[list[Fraction]]]:
    """Random-site heat-bath kernel as an exact stochastic matrix.

    States are the admissible colorings (as tuples over the domain in
    ascending order); the kernel picks a uniform site and resamples it
    uniformly over the locally admissible colors.  The matrix is doubly
    checkable: rows sum to one and detailed balance for the uniform
    measure amounts to exact symmetry.
    """
    constraint = constraint or Constraint.free()
    masks, feasible = allowed_masks(G, domain, q, constraint)
    if not feasible:
        raise PreconditionError("constraint admits no coloring")
    order = sorted(domain.ids())
    states = sorted(
        tuple(assign[v] for v in order)
        for assign in enumerate_colorings(G, domain, masks)
    )
    index = {s: i for i, s in enumerate(states)}
    pos = {v: i for i, v in enumerate(order)}
    m = len(states)
    P = [[Fraction(0) for _ in range(m)] for _ in range(m)]
    site_weight = Fraction(1, len(order))
    for s_tuple in states:
        i = index[s_tuple]
        for v in order:
            used = 0
            for u in G.neighbors[v]:
                if u in pos:
                    used |= 1 << (s_tuple[pos[u]] - 1)
            avail = masks[v] & ~used
            n_avail = avail.bit_count()
            color_weight = site_weight * Fraction(1, n_avail)
            bits = avail
            while bits:
                low = bits & -bits
                bits ^= low
                c = low.bit_length()
                t = list(s_tuple)
                t[pos[v]] = c
                P[i][index[tuple(t)]] += color_weight
    return states, P
