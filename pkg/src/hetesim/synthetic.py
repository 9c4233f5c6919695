"""Seeded graph generators: the toy bibliographic graph, random HINs, bench graphs."""

from __future__ import annotations

import numpy as np

from .graph import HinGraph, RelationDef, Schema, Step, build_graph
from .metapath import MetaPath

__all__ = [
    "toy_graph",
    "random_hin",
    "random_path",
    "steps_from",
    "random_bipartite",
    "bench_graph",
    "BENCH_PATHS",
]


def toy_graph() -> HinGraph:
    """Two authors, four conferences: a1 -> {b1, b2, b4}, a2 -> {b2, b3, b4}."""
    schema = Schema(["A", "B"], [RelationDef("AB", "A", "B")])
    nodes = [("a1", "A"), ("a2", "A")] + [(f"b{i}", "B") for i in range(1, 5)]
    edges = [("a1", b, "AB") for b in ("b1", "b2", "b4")] + [("a2", b, "AB") for b in ("b2", "b3", "b4")]
    return build_graph(schema, nodes, edges)


def _edges(rng, rel_id, src_ids, dst_ids, density, weighted):
    mask = rng.random((len(src_ids), len(dst_ids))) < density
    rows, cols = np.nonzero(mask)
    out = []
    for r, c in zip(rows, cols):
        w = float(rng.integers(1, 5)) if weighted else 1.0
        out.append((src_ids[r], dst_ids[c], rel_id, w))
    return out


def random_hin(
    rng,
    max_types: int = 5,
    max_nodes: int = 30,
    max_relations: int = 6,
    density: tuple = (0.05, 0.5),
    weighted: bool = False,
) -> HinGraph:
    """Random schema and graph.

    Types ``T0..`` get 1..``max_nodes`` nodes each; relations link random
    (possibly equal) type pairs, the first few forming a chain so the
    schema is connected.  Per-relation edge density is drawn from
    ``density``.
    """
    rng = np.random.default_rng(rng)
    n_types = int(rng.integers(1, max_types + 1))
    types = [f"T{i}" for i in range(n_types)]
    pairs = [(types[i], types[i + 1]) for i in range(n_types - 1)]
    n_rel = max(len(pairs), int(rng.integers(1, max_relations + 1)))
    while len(pairs) < n_rel:
        pairs.append((types[rng.integers(n_types)], types[rng.integers(n_types)]))
    rels = [RelationDef(f"R{i}", s, t, weighted) for i, (s, t) in enumerate(pairs)]
    schema = Schema(types, rels)

    ids = {t: [f"{t.lower()}_{j}" for j in range(int(rng.integers(1, max_nodes + 1)))] for t in types}
    nodes = [(nid, t) for t in types for nid in ids[t]]
    edges = []
    for rel in rels:
        d = rng.uniform(*density)
        edges += _edges(rng, rel.id, ids[rel.source_type], ids[rel.target_type], d, weighted)
    return build_graph(schema, nodes, edges)


def steps_from(schema: Schema, type_name: str) -> list:
    """Every step (forward or inverse) that leaves ``type_name``."""
    out = []
    for rel in schema.relations:
        if rel.source_type == type_name:
            out.append(Step(rel.id))
        if rel.target_type == type_name:
            out.append(Step(rel.id, inverse=True))
    return out


def random_path(rng, schema: Schema, length: int, start: str | None = None) -> MetaPath:
    """Uniform random walk of ``length`` steps over the schema graph."""
    rng = np.random.default_rng(rng)
    if start is None:
        candidates = [t for t in schema.type_names if steps_from(schema, t)]
        start = candidates[rng.integers(len(candidates))]
    steps, here = [], start
    for _ in range(length):
        options = steps_from(schema, here)
        step = options[rng.integers(len(options))]
        steps.append(step)
        here = step.endpoints(schema)[1]
    return MetaPath.from_steps(steps, schema)


def random_bipartite(rng, max_nodes: int = 12, density: tuple = (0.1, 0.6), weighted: bool = False) -> HinGraph:
    """Random graph with a single relation ``R: A -> B``."""
    rng = np.random.default_rng(rng)
    schema = Schema(["A", "B"], [RelationDef("R", "A", "B", weighted)])
    a = [f"a{i}" for i in range(int(rng.integers(1, max_nodes + 1)))]
    b = [f"b{i}" for i in range(int(rng.integers(1, max_nodes + 1)))]
    edges = _edges(rng, "R", a, b, rng.uniform(*density), weighted)
    return build_graph(schema, [(x, "A") for x in a] + [(x, "B") for x in b], edges)


# Bench paths: a low-dimension dense chain meeting at the few conferences,
# and a longer high-dimension sparse chain meeting in the term space.
BENCH_PATHS = {"dense": "A-P-C-P-A", "sparse": "A-P-T-P-T-P-A"}


def bench_graph(
    seed: int = 0,
    n_authors: int = 1500,
    n_papers: int = 4000,
    n_confs: int = 10,
    n_terms: int = 4000,
    authors_per_paper: tuple = (1, 4),
    terms_per_paper: tuple = (5, 15),
) -> HinGraph:
    """Bibliographic-style graph with authors, papers, conferences and terms.

    Authors and terms have a home area, one per conference; papers draw
    mostly from their conference's area so relevance has structure.
    Author and term popularity is heavy-tailed.
    """
    rng = np.random.default_rng(seed)
    schema = Schema(
        ["A", "P", "C", "T"],
        [RelationDef("AP", "A", "P"), RelationDef("PC", "P", "C"), RelationDef("PT", "P", "T")],
    )
    authors = [f"a{i}" for i in range(n_authors)]
    papers = [f"p{i}" for i in range(n_papers)]
    confs = [f"c{i}" for i in range(n_confs)]
    terms = [f"t{i}" for i in range(n_terms)]
    nodes = (
        [(x, "A") for x in authors]
        + [(x, "P") for x in papers]
        + [(x, "C") for x in confs]
        + [(x, "T") for x in terms]
    )

    author_area = rng.integers(n_confs, size=n_authors)
    term_area = rng.integers(n_confs, size=n_terms)
    author_pop = rng.pareto(1.5, size=n_authors) + 1.0
    term_pop = rng.pareto(1.2, size=n_terms) + 1.0
    by_area_a = [np.flatnonzero(author_area == c) for c in range(n_confs)]
    by_area_t = [np.flatnonzero(term_area == c) for c in range(n_confs)]

    def pick(pool, pop, k, everyone):
        # 80% in-area, popularity-weighted; the rest from anywhere
        if len(pool) == 0 or rng.random() < 0.2:
            pool = everyone
        k = min(k, len(pool))
        p = pop[pool] / pop[pool].sum()
        return rng.choice(pool, size=k, replace=False, p=p)

    every_a, every_t = np.arange(n_authors), np.arange(n_terms)
    edges = []
    for p in papers:
        c = int(rng.integers(n_confs))
        edges.append((p, confs[c], "PC"))
        for i in pick(by_area_a[c], author_pop, int(rng.integers(authors_per_paper[0], authors_per_paper[1] + 1)), every_a):
            edges.append((authors[i], p, "AP"))
        for i in pick(by_area_t[c], term_pop, int(rng.integers(terms_per_paper[0], terms_per_paper[1] + 1)), every_t):
            edges.append((p, terms[i], "PT"))
    return build_graph(schema, nodes, edges)
