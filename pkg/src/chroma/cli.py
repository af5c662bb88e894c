"""Command-line experiment runner.

One process runs one command; everything an invocation produces is a
pure function of the effective configuration (config file plus flag
overrides), whose SHA-256 is stamped into every output next to the seed
and the package version, so any artifact can be regenerated from its
own header.

Exit codes: 0 success, 1 configuration/precondition error, 2 resource
budget exceeded, 3 violation of a mathematical invariant the library
guarantees (a bug, not a user error).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from typing import Any, Mapping

from . import __version__
from .coloring import coloring_from_text
from .decomposition import decompose
from .errors import (
    ChromaError,
    ConfigError,
    InternalInvariantError,
    PreconditionError,
    ResourceLimitError,
)
from .exact import Constraint, count_colorings, exact_marginal, toy_ratio
from .geometry import OddSetCollection, separating_set, weak_approximation
from .lattice import LatticeGraph, closed_neighborhood
from .patterns import Pattern
from .sampler import ChainConfig, run_experiment
from .suites import run_suite
from .rng import make_rng

_SCHEMAS: dict[str, dict[str, type]] = {
    "exact-count": {
        "dims": list, "periodic": list, "q": int, "constraint": str,
        "pattern": str, "pins": dict, "method": str, "domain": list,
    },
    "marginal": {
        "dims": list, "periodic": list, "q": int, "constraint": str,
        "pattern": str, "pins": dict, "vertex": (int, str),
    },
    "toy-ratio": {
        "dims": list, "periodic": list, "q": int, "pattern0": str,
        "pattern": str, "droplet": (list, str),
    },
    "sample": {
        "dims": list, "periodic": list, "q": int, "pattern": str, "seed": int,
        "sweeps": int, "burn_in": int, "thin": int, "algorithm": str,
        "cluster_every": int, "scan": str, "chains": int, "margin": int,
    },
    "decompose": {"coloring": str},
    "verify-lemmas": {"suite": str, "trials": int, "seed": int},
    "approx": {
        "dims": list, "periodic": list, "seed": int, "sets": int,
        "exhaustive": bool,
    },
}


def _validate(command: str, cfg: Mapping[str, Any]) -> dict:
    schema = _SCHEMAS[command]
    out = {}
    for key, value in cfg.items():
        if key not in schema:
            raise ConfigError(f"unknown config field {key!r} for command {command}")
        want = schema[key]
        if not isinstance(value, want):
            raise ConfigError(
                f"config field {key!r} should be {want}, got {type(value).__name__}"
            )
        out[key] = value
    return out


def _effective_config(command: str, args: argparse.Namespace) -> dict:
    cfg: dict[str, Any] = {}
    if args.config:
        with open(args.config) as fh:
            try:
                loaded = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config file is not valid JSON: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        loaded.pop("command", None)
        cfg.update(loaded)
    for key in _SCHEMAS[command]:
        flag = getattr(args, key.replace("-", "_"), None)
        if flag is not None:
            cfg[key] = flag
    return _validate(command, cfg)


def _provenance(cfg: Mapping[str, Any]) -> dict:
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return {
        "version": __version__,
        "config_sha256": hashlib.sha256(canon.encode()).hexdigest(),
        "seed": cfg.get("seed"),
    }


def _emit_json(payload: dict, cfg: Mapping[str, Any], out: str | None) -> None:
    doc = {"provenance": _provenance(cfg), **payload}
    text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    sys.stdout.write(text)


def _emit_csv(header: list[str], rows: list[list], cfg: Mapping, out: str) -> None:
    prov = _provenance(cfg)
    lines = [
        f"# version={prov['version']} config_sha256={prov['config_sha256']} "
        f"seed={prov['seed']}",
        ",".join(header),
    ]
    for row in rows:
        lines.append(",".join(repr(x) if isinstance(x, float) else str(x) for x in row))
    with open(out, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _graph_from(cfg: Mapping[str, Any]) -> LatticeGraph:
    if "dims" not in cfg:
        raise ConfigError("missing required field 'dims'")
    return LatticeGraph(cfg["dims"], cfg.get("periodic"))


def _constraint_from(cfg: Mapping[str, Any], q: int) -> Constraint:
    kind = cfg.get("constraint", "free")
    if kind == "free":
        return Constraint.free()
    if kind == "pattern":
        if "pattern" not in cfg:
            raise ConfigError("pattern constraint needs a 'pattern' field")
        return Constraint.pattern_boundary(Pattern.parse(q, cfg["pattern"]))
    if kind == "pins":
        pins = {int(k): int(v) for k, v in cfg.get("pins", {}).items()}
        return Constraint.pinned(pins)
    raise ConfigError(f"unknown constraint kind {kind!r}")


def _center_vertex(G: LatticeGraph) -> int:
    return G.vid(tuple(x // 2 for x in G.dims))


# -- commands --------------------------------------------------------------------


def _cmd_exact_count(args) -> int:
    cfg = _effective_config("exact-count", args)
    G = _graph_from(cfg)
    q = cfg.get("q")
    if q is None:
        raise ConfigError("missing required field 'q'")
    domain = (
        G.vertex_set(cfg["domain"]) if "domain" in cfg else G.full_set()
    )
    result = count_colorings(
        G, domain, q, _constraint_from(cfg, q), cfg.get("method", "auto")
    )
    instance = {"graph": G.key(), "q": q, "constraint": cfg.get("constraint", "free")}
    _emit_json(result.to_json(instance), cfg, args.out)
    return 0


def _cmd_marginal(args) -> int:
    cfg = _effective_config("marginal", args)
    G = _graph_from(cfg)
    q = cfg["q"]
    v = cfg.get("vertex", "center")
    vid = _center_vertex(G) if v == "center" else int(v)
    m = exact_marginal(G, G.full_set(), q, vid, _constraint_from(cfg, q))
    _emit_json({"marginal": m.to_json(), "graph": G.key(), "q": q}, cfg, args.out)
    return 0


def _cmd_toy_ratio(args) -> int:
    cfg = _effective_config("toy-ratio", args)
    G = _graph_from(cfg)
    q = cfg["q"]
    p0 = Pattern.parse(q, cfg["pattern0"])
    p = Pattern.parse(q, cfg["pattern"])
    droplet = cfg.get("droplet", "center")
    if droplet == "center":
        U = G.vertex_set([_center_vertex(G)])
    elif droplet == "center-plus":
        U = closed_neighborhood(G, G.vertex_set([_center_vertex(G)]))
    else:
        U = G.vertex_set(droplet)
    result = toy_ratio(G, G.full_set(), U, p0, p)
    _emit_json({"toy_ratio": result.to_json(), "graph": G.key()}, cfg, args.out)
    return 0


def _cmd_sample(args) -> int:
    cfg = _effective_config("sample", args)
    for key in ("q", "pattern", "seed", "sweeps"):
        if key not in cfg:
            raise ConfigError(f"missing required field {key!r}")
    chain = ChainConfig(
        dims=tuple(cfg["dims"]),
        periodic=tuple(cfg["periodic"]) if "periodic" in cfg else None,
        q=cfg["q"],
        pattern=cfg["pattern"],
        seed=cfg["seed"],
        sweeps=cfg["sweeps"],
        burn_in=cfg.get("burn_in", 0),
        thin=cfg.get("thin", 1),
        algorithm=cfg.get("algorithm", "heat-bath"),
        cluster_every=cfg.get("cluster_every", 8),
        scan=cfg.get("scan", "systematic"),
        chains=cfg.get("chains", 1),
        margin=cfg.get("margin", 0),
    )
    stats = run_experiment(chain, threads=args.threads)
    out = args.out or "stats.csv"
    header = ["vertex_id", "violation_rate"] + [f"c{i}" for i in range(1, chain.q + 1)]
    _emit_csv(header, stats.csv_rows(), cfg, out)
    summary = {
        "samples": stats.samples,
        "split_half_max_diff": stats.split_half_max_diff,
        "parity_occupation": {k: list(v) for k, v in stats.parity_occupation.items()},
        "csv": out,
    }
    _emit_json(summary, cfg, None)
    return 0


def _cmd_decompose(args) -> int:
    cfg = _effective_config("decompose", args)
    if "coloring" not in cfg:
        raise ConfigError("missing required field 'coloring'")
    with open(cfg["coloring"]) as fh:
        f, G = coloring_from_text(fh.read())
    Z = decompose(G, f)
    payload = {"graph": G.key(), "q": f.q, "decomposition": Z.to_json()}
    _emit_json(payload, cfg, args.out or "regions.json")
    return 0


def _cmd_verify_lemmas(args) -> int:
    cfg = _effective_config("verify-lemmas", args)
    suite = cfg.get("suite", "all")
    trials = cfg.get("trials", 100)
    seed = cfg.get("seed", 0)
    results = run_suite(suite, trials, seed)
    all_ok = True
    for res in results:
        status = "pass" if res.ok else "FAIL"
        sys.stdout.write(f"{res.name}: {status} ({res.trials} trials)\n")
        for msg in res.failures:
            sys.stdout.write(f"  {msg}\n")
        all_ok = all_ok and res.ok
    if not all_ok:
        raise InternalInvariantError("a lemma suite failed")
    return 0


def _cmd_approx(args) -> int:
    cfg = _effective_config("approx", args)
    G = _graph_from(cfg)
    seed = cfg.get("seed", 0)
    n_sets = cfg.get("sets", 2)
    payload: dict[str, Any] = {"graph": G.key()}
    if cfg.get("exhaustive"):
        # tiny ambients only: sweep the whole family of regular odd sets
        # and coarse-grain each one through its own separating set
        from .geometry import enumerate_regular_parity_sets

        family = enumerate_regular_parity_sets(G, "odd")
        verified = 0
        for U in family:
            coll = OddSetCollection(G, [U], "odd")
            if not coll.boundary_edges():
                verified += 1
                continue
            sep = separating_set(coll)
            weak_approximation(G, sep.separator, coll)
            verified += 1
        payload["exhaustive"] = {
            "regular_odd_sets": len(family),
            "coarse_grained": verified,
        }
        _emit_json(payload, cfg, args.out)
        return 0
    from .suites import random_regular_odd_set

    rng = make_rng(seed)
    sets = [random_regular_odd_set(G, rng) for _ in range(n_sets)]
    collection = OddSetCollection(G, sets, "odd")
    sep = separating_set(collection)
    weak = weak_approximation(G, sep.separator, collection)
    payload["separating"] = {
        "size": sep.size,
        "size_bound": sep.size_bound,
        "separates": sep.separates,
        "vertices": sep.vertices.to_text(),
    }
    payload["weak_approximation"] = {
        "fringe_size": len(weak.fringe),
        "fringe_bound_ok": weak.fringe_bound_ok,
        "known_sizes": [len(k) for k in weak.known],
    }
    _emit_json(payload, cfg, args.out)
    return 0


_COMMANDS = {
    "exact-count": _cmd_exact_count,
    "marginal": _cmd_marginal,
    "toy-ratio": _cmd_toy_ratio,
    "sample": _cmd_sample,
    "decompose": _cmd_decompose,
    "verify-lemmas": _cmd_verify_lemmas,
    "approx": _cmd_approx,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chroma",
        description="exact counting, sampling and contour geometry for "
        "pattern-ordered proper colorings",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, schema in _SCHEMAS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file; flags override it")
        p.add_argument("--out", help="output file path")
        p.add_argument(
            "--threads",
            type=int,
            default=int(os.environ.get("CHROMA_THREADS", "1")),
            help="worker cap (env CHROMA_THREADS)",
        )
        for key, want in schema.items():
            flag = "--" + key.replace("_", "-")
            if want is bool:
                p.add_argument(flag, dest=key, action="store_true", default=None)
            elif want is int:
                p.add_argument(flag, dest=key, type=int)
            elif want is str:
                p.add_argument(flag, dest=key)
            elif want is list:
                p.add_argument(
                    flag, dest=key,
                    type=lambda s: [int(x) for x in s.split(",")],
                )
            elif want is dict:
                p.add_argument(flag, dest=key, type=json.loads)
            else:  # mixed int/str or list/str fields
                p.add_argument(flag, dest=key)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, PreconditionError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except ResourceLimitError as exc:
        sys.stderr.write(f"resource error: {exc}\n")
        return 2
    except InternalInvariantError as exc:
        sys.stderr.write(f"internal invariant violated: {exc}\n")
        return 3
    except ChromaError as exc:  # pragma: no cover
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
