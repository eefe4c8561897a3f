"""Undirected input graphs: DIMACS edge format and the small-graph catalogue."""

from __future__ import annotations

import itertools

import networkx as nx

from .structures import ParseError


def read_dimacs_graph(text: str) -> nx.Graph:
    """Parse ``p edge n m`` / ``e u v`` lines; vertices are 1..n."""
    G = nx.Graph()
    declared = None
    edges = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        tok = line.split()
        if tok[0] == "p":
            if len(tok) != 4 or tok[1] not in ("edge", "col"):
                raise ParseError(f"line {lineno}: expected 'p edge <n> <m>'")
            try:
                declared = (int(tok[2]), int(tok[3]))
            except ValueError:
                raise ParseError(f"line {lineno}: vertex and edge counts must be integers") from None
            G.add_nodes_from(range(1, declared[0] + 1))
        elif tok[0] == "e":
            if declared is None:
                raise ParseError(f"line {lineno}: edge before problem line")
            if len(tok) != 3:
                raise ParseError(f"line {lineno}: expected 'e <u> <v>'")
            try:
                u, v = int(tok[1]), int(tok[2])
            except ValueError:
                raise ParseError(f"line {lineno}: endpoints must be integers") from None
            if not (1 <= u <= declared[0] and 1 <= v <= declared[0]):
                raise ParseError(f"line {lineno}: endpoint outside 1..{declared[0]}")
            G.add_edge(u, v)
            edges += 1
        else:
            raise ParseError(f"line {lineno}: unknown line type {tok[0]!r}")
    if declared is None:
        raise ParseError("missing problem line")
    if edges != declared[1]:
        raise ParseError(f"problem line declares {declared[1]} edges, found {edges}")
    return G


def write_dimacs_graph(G: nx.Graph) -> str:
    nodes = sorted(G.nodes())
    index = {v: i for i, v in enumerate(nodes, start=1)}
    edges = sorted(tuple(sorted((index[u], index[v]))) for u, v in G.edges())
    lines = [f"p edge {len(nodes)} {len(edges)}"] + [f"e {u} {v}" for u, v in edges]
    return "\n".join(lines) + "\n"


def small_graphs(max_vertices: int = 4) -> list[nx.Graph]:
    """One graph per isomorphism class on 1..max_vertices vertices, vertices 1..n."""
    out = []
    for n in range(1, max_vertices + 1):
        reps: list[nx.Graph] = []
        pairs = list(itertools.combinations(range(1, n + 1), 2))
        for mask in range(1 << len(pairs)):
            G = nx.Graph()
            G.add_nodes_from(range(1, n + 1))
            G.add_edges_from(p for i, p in enumerate(pairs) if mask >> i & 1)
            if not any(nx.is_isomorphic(G, H) for H in reps):
                reps.append(G)
        out.extend(reps)
    return out


def named_graph(name: str) -> nx.Graph:
    """``P3``, ``K4``, ``3K1`` style names with vertices 1..n."""
    import re

    m = re.fullmatch(r"(\d*)([PKC])(\d+)", name)
    if not m:
        raise ValueError(f"unknown graph name {name!r}")
    copies = int(m.group(1) or 1)
    size = int(m.group(3))
    base = {"P": nx.path_graph, "K": nx.complete_graph, "C": nx.cycle_graph}[m.group(2)](size)
    G = nx.disjoint_union_all([base] * copies) if copies > 1 else base
    return nx.relabel_nodes(G, {v: i + 1 for i, v in enumerate(sorted(G.nodes()))})
