"""Builders for the star/diamond gadgets and the two reduction structures.

Every builder returns a ``GadgetOutput`` whose automorphism generators were
derived from the construction and checked against the relations before
being returned.  Vertex labels follow one scheme throughout:

* ``c_i`` / ``d_i``: star and diamond middle vertices;
* ``a(v)_t`` / ``b(v)_t``: the t-th distinguishing in-neighbour of ``v``;
* ``<w,v>``: the copy of ``w`` indexed by graph vertex ``v``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import networkx as nx
import numpy as np

from .structures import DIGRAPH, Schema, Structure, StructuralError
from .symmetry import is_automorphism

COLORED = Schema(relations=(("E", 2), ("red", 1), ("green", 1), ("blue", 1)))


@dataclass
class GadgetOutput:
    structure: Structure
    designated: dict[str, int]
    informal_labels: dict[int, str] = field(default_factory=dict)
    automorphism_generators: list[np.ndarray] = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    def __getitem__(self, name: str) -> int:
        return self.designated[name]


class _Builder:
    """Mutable vertex/edge accumulator with label-addressed generators."""

    def __init__(self):
        self.labels: list[str] = []
        self.index: dict[str, int] = {}
        self.edges: set[tuple[int, int]] = set()
        self.colors: dict[str, set[int]] = {"red": set(), "green": set(), "blue": set()}
        self.perms: list[dict[str, str]] = []

    def add(self, label: str, color: str | None = None) -> int:
        if label in self.index:
            raise StructuralError(f"duplicate vertex label {label!r}")
        v = len(self.labels)
        self.labels.append(label)
        self.index[label] = v
        if color:
            self.colors[color].add(v)
        return v

    def edge(self, a: str, b: str):
        self.edges.add((self.index[a], self.index[b]))

    def add_aux(self, owner: str, count: int, letter: str) -> list[str]:
        """Distinguishing in-neighbours of ``owner`` plus the transpositions among them."""
        names = []
        for t in range(1, count + 1):
            name = f"{letter}({owner})_{t}"
            self.add(name)
            self.edge(name, owner)
            names.append(name)
        for x, y in zip(names, names[1:]):
            self.perms.append({x: y, y: x})
        return names

    def remove(self, label: str):
        """Delete a vertex, joining each in-neighbour to each out-neighbour."""
        v = self.index[label]
        ins = [a for a, b in self.edges if b == v and a != v]
        outs = [b for a, b in self.edges if a == v and b != v]
        self.edges = {(a, b) for a, b in self.edges if a != v and b != v}
        for a in ins:
            for b in outs:
                self.edges.add((a, b))
        # renumber
        keep = [x for x in self.labels if x != label]
        old = self.index
        self.labels = keep
        self.index = {x: i for i, x in enumerate(keep)}
        remap = {old[x]: self.index[x] for x in keep}
        self.edges = {(remap[a], remap[b]) for a, b in self.edges}
        self.colors = {c: {remap[x] for x in vs if x in remap} for c, vs in self.colors.items()}

    def replace(self, label: str, new_labels: Sequence[str], color: str | None = "inherit") -> list[str]:
        """Replace a vertex by an independent set copying its in- and out-edges."""
        v = self.index[label]
        if color == "inherit":
            color = next((c for c, vs in self.colors.items() if v in vs), None)
        ins = [a for a, b in self.edges if b == v]
        outs = [b for a, b in self.edges if a == v]
        ins_l = [self.labels[a] for a in ins if a != v]
        outs_l = [self.labels[b] for b in outs if b != v]
        loop = (v, v) in self.edges
        self.remove_plain(label)
        for nl in new_labels:
            self.add(nl, color)
            for a in ins_l:
                self.edge(a, nl)
            for b in outs_l:
                self.edge(nl, b)
            if loop:
                self.edge(nl, nl)
        return list(new_labels)

    def remove_plain(self, label: str):
        v = self.index[label]
        self.edges = {(a, b) for a, b in self.edges if a != v and b != v}
        keep = [x for x in self.labels if x != label]
        old = self.index
        self.labels = keep
        self.index = {x: i for i, x in enumerate(keep)}
        remap = {old[x]: self.index[x] for x in keep}
        self.edges = {(remap[a], remap[b]) for a, b in self.edges}
        self.colors = {c: {remap[x] for x in vs if x in remap} for c, vs in self.colors.items()}

    def finish(self, colored: bool, designated: Iterable[str] = (), informal: Mapping[str, str] | None = None,
               notes: dict | None = None) -> GadgetOutput:
        n = len(self.labels)
        edges = set(self.edges)
        if colored:
            rels = {"E": edges, **{c: [(v,) for v in vs] for c, vs in self.colors.items()}}
            S = Structure(COLORED, n, rels, labels=dict(enumerate(self.labels)))
        else:
            edges |= {(v, v) for v in self.colors["green"]}
            S = Structure(DIGRAPH, n, {"E": edges}, labels=dict(enumerate(self.labels)))
        gens = []
        for perm in self.perms:
            arr = np.arange(n)
            for a, b in perm.items():
                if a in self.index and b in self.index:
                    arr[self.index[a]] = self.index[b]
            if not is_automorphism(S, arr):
                raise StructuralError(f"emitted generator is not an automorphism: {perm}")
            gens.append(arr)
        return GadgetOutput(
            structure=S,
            designated={name: self.index[name] for name in designated},
            informal_labels={self.index[k]: v for k, v in (informal or {}).items()},
            automorphism_generators=gens,
            notes=dict(notes or {}),
        )


def _swap(pairs: Iterable[tuple[str, str]]) -> dict[str, str]:
    perm = {}
    for a, b in pairs:
        perm[a] = b
        perm[b] = a
    return perm


def _with_aux(pairs, aux: Mapping[str, list[str]]):
    """Extend a middle-vertex pairing to the distinguishing neighbours."""
    out = list(pairs)
    for a, b in pairs:
        out.extend(zip(aux.get(a, []), aux.get(b, [])))
    return out


# ---------------------------------------------------------------- I_j (NP construction)

# out-edges of the middle vertices towards the bottom pairs
_INP_MIDDLE = {
    "c_1": ("q", "r"), "c_2": ("q'", "r'"), "d_1": ("q", "r'"), "d_2": ("q'", "r"),
    "c_3": ("q", "r'"), "c_4": ("q'", "r"), "d_3": ("q", "r"), "d_4": ("q'", "r'"),
}
_INP_TOP = {"p": ("c_1", "c_2", "d_1", "d_2"), "p'": ("c_3", "c_4", "d_3", "d_4")}
_INP_SWAPS = {
    "p": [("q", "q'"), ("r", "r'"), ("c_1", "c_2"), ("d_1", "d_2"), ("c_3", "c_4"), ("d_3", "d_4")],
    "q": [("p", "p'"), ("r", "r'"), ("c_1", "c_3"), ("c_2", "c_4"), ("d_1", "d_3"), ("d_2", "d_4")],
    "r": [("p", "p'"), ("q", "q'"), ("c_1", "c_4"), ("c_2", "c_3"), ("d_1", "d_4"), ("d_2", "d_3")],
}


def _inp_into(B: _Builder, j: int, name=lambda s: s, top_color="red") -> dict[str, list[str]]:
    for v in ("p", "p'"):
        B.add(name(v), top_color)
    for v in ("q", "q'"):
        B.add(name(v), "blue")
    for v in ("r", "r'"):
        B.add(name(v), "green")
    aux = {}
    for mid in _INP_MIDDLE:
        B.add(name(mid))
    for top, mids in _INP_TOP.items():
        for mid in mids:
            B.edge(name(top), name(mid))
    for mid, outs in _INP_MIDDLE.items():
        for o in outs:
            B.edge(name(mid), name(o))
    for mid in _INP_MIDDLE:
        star = mid.startswith("c")
        aux[mid] = B.add_aux(name(mid), j if star else j - 1, "a" if star else "b")
    return aux


def build_I_np(j: int, colored: bool = True) -> GadgetOutput:
    """The star/diamond gadget with poles p, p' and bottom pairs (q, q'), (r, r')."""
    if j < 1:
        raise ValueError("j must be at least 1")
    B = _Builder()
    aux = _inp_into(B, j)
    aux_l = {k: v for k, v in aux.items()}
    for fixed, pairs in _INP_SWAPS.items():
        B.perms.append(_swap(_with_aux(pairs, aux_l)))
    names = ["p", "p'", "q", "q'", "r", "r'", *_INP_MIDDLE]
    return B.finish(colored, names)


# ---------------------------------------------------------------- DOMSET structure


def _graph_vertices(G: nx.Graph) -> list:
    return sorted(G.nodes(), key=lambda x: (str(type(x)), x))


def _vertex_name(v) -> str:
    return f"v{v}" if isinstance(v, int) else str(v)


def build_domset_structure(G: nx.Graph, k: int, colored: bool = True, max_graph_automorphisms: int = 64) -> GadgetOutput:
    """Stacked gadgets with middles copied per graph vertex and domination edges.

    Distinguishing neighbours of a middle vertex are shared by all of its
    copies: replacing a vertex copies each incoming edge to every member of
    the replacing set.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    verts = _graph_vertices(G)
    n = len(verts)
    if n == 0:
        raise ValueError("the graph must have at least one vertex")
    vname = {v: _vertex_name(v) for v in verts}
    B = _Builder()

    # step 1 (stacking)
    for level in range(k, 0, -1):
        _inp_into(B, level, name=lambda s, level=level: _level_name(s, level))
    for level in range(k, 1, -1):
        below = level - 1
        B.edge(_level_name("q", level), _level_name("p", below))
        B.edge(_level_name("q'", level), _level_name("p'", below))
        B.edge(_level_name("r", level), _level_name("p", below))
        B.edge(_level_name("r'", level), _level_name("p'", below))
    # middles replaced by copies per graph vertex
    middles = []
    for level in range(k, 0, -1):
        for mid in _INP_MIDDLE:
            lab = _level_name(mid, level)
            B.replace(lab, [f"<{lab},{vname[v]}>" for v in verts])
            middles.append(lab)
    bottom = {}
    for w in ("q", "r"):
        lab = _level_name(w, 1)
        bottom[lab] = B.replace(lab, [f"<{lab},{vname[v]}>" for v in verts])
    for w, null in (("q'", "null_q'"), ("r'", "null_r'")):
        lab = _level_name(w, 1)
        bottom[lab] = B.replace(lab, [f"<{lab},{vname[v]}>" for v in verts] + [null])
    # elide the intermediate poles
    for level in range(1, k):
        B.remove(_level_name("p", level))
        B.remove(_level_name("p'", level))
    # step 5: domination edges
    step5_vertex = step5_edge = 0
    ws = [_level_name(w, 1) for w in ("q", "q'", "r", "r'")]
    for v in verts:
        for w in ws:
            for mid in middles:
                B.edge(f"<{w},{vname[v]}>", f"<{mid},{vname[v]}>")
                step5_vertex += 1
    for s, t in sorted((tuple(sorted(e, key=lambda x: (str(type(x)), x))) for e in G.edges() if e[0] != e[1])):
        for w in ws:
            for mid in middles:
                B.edge(f"<{w},{vname[s]}>", f"<{mid},{vname[t]}>")
                B.edge(f"<{w},{vname[t]}>", f"<{mid},{vname[s]}>")
                step5_edge += 2
    # lifted automorphisms of G
    copied = middles + ws
    matcher = nx.algorithms.isomorphism.GraphMatcher(G, G)
    for sigma in itertools.islice(matcher.isomorphisms_iter(), max_graph_automorphisms):
        if all(sigma[v] == v for v in verts):
            continue
        perm = {}
        for w in copied:
            for v in verts:
                perm[f"<{w},{vname[v]}>"] = f"<{w},{vname[sigma[v]]}>"
        B.perms.append(perm)
    out = B.finish(colored, ["null_q'", "null_r'"], notes={
        "k": k, "n": n, "graph_vertices": [vname[v] for v in verts],
        "step5_vertex_edges": step5_vertex, "step5_edge_edges": step5_edge,
    })
    out.designated["a"] = B.index[_level_name("p", k)]
    out.designated["a'"] = B.index[_level_name("p'", k)]
    for w in ws:
        for v in verts:
            out.designated[f"<{w},{vname[v]}>"] = B.index[f"<{w},{vname[v]}>"]
    for level in range(1, k + 1):
        for mid in _INP_MIDDLE:
            lab = _level_name(mid, level)
            for v in verts:
                out.designated[f"<{lab},{vname[v]}>"] = B.index[f"<{lab},{vname[v]}>"]
        for w in ("q", "q'", "r", "r'"):
            if level > 1:
                out.designated[_level_name(w, level)] = B.index[_level_name(w, level)]
    return out


def _level_name(s: str, level: int) -> str:
    """``c_1`` at level 3 becomes ``c^3_1``; ``q'`` becomes ``q'_3``."""
    if "_" in s:
        base, idx = s.split("_", 1)
        return f"{base}^{level}_{idx}"
    return f"{s}_{level}"


# ---------------------------------------------------------------- J_j, J'_j, PSPACE I_j

_J_OUT = {
    "J": {"c_1": "q", "c_2": "q", "c_3": "q", "c_4": "q", "d_1": "q'", "d_2": "q'", "d_3": "q'", "d_4": "q'"},
    "J'": {"c_1": "q", "c_3": "q", "d_1": "q", "d_3": "q", "c_2": "q'", "c_4": "q'", "d_2": "q'", "d_4": "q'"},
}


def _j_block_into(B: _Builder, kind: str, j: int, z: str, q: str, qq: str, label=lambda sub: sub):
    """Attach the middles of a J or J' block between existing ``z`` and ``(q, q')``.

    Returns the middle labels and their distinguishing neighbours.
    """
    mids, aux = {}, {}
    for sub, target in _J_OUT[kind].items():
        lab = label(sub)
        B.add(lab)
        mids[sub] = lab
        B.edge(z, lab)
        B.edge(lab, q if target == "q" else qq)
    for sub, lab in mids.items():
        star = sub.startswith("c")
        aux[lab] = B.add_aux(lab, j if star else j - 1, "a" if star else "b")
    groups = [["c_1", "c_2", "c_3", "c_4"], ["d_1", "d_2", "d_3", "d_4"]]
    if kind == "J'":
        groups = [["c_1", "c_3"], ["c_2", "c_4"], ["d_1", "d_3"], ["d_2", "d_4"]]
    for g in groups:
        for x, y in zip(g, g[1:]):
            B.perms.append(_swap(_with_aux([(mids[x], mids[y])], aux)))
    return mids, aux


def _single_j(kind: str, j: int) -> GadgetOutput:
    if j < 1:
        raise ValueError("j must be at least 1")
    B = _Builder()
    for v in ("z", "q", "q'"):
        B.add(v)
    mids, aux = _j_block_into(B, kind, j, "z", "q", "q'")
    if kind == "J'":
        # q <-> q' together with c1<->c2, c3<->c4, d1<->d2, d3<->d4
        pairs = [("q", "q'"), ("c_1", "c_2"), ("c_3", "c_4"), ("d_1", "d_2"), ("d_3", "d_4")]
        B.perms.append(_swap(_with_aux(pairs, aux)))
    return B.finish(False, ["z", "q", "q'", *mids])


def build_J(j: int) -> GadgetOutput:
    return _single_j("J", j)


def build_J_prime(j: int) -> GadgetOutput:
    return _single_j("J'", j)


# which block hangs below each upper middle vertex
PSPACE_BLOCKS = {
    **{f"c_{i}": "J'" for i in (1, 2, 3, 4, 9, 10, 11, 12)},
    **{f"d_{i}": "J'" for i in (1, 2, 3, 4, 13, 14, 15, 16)},
    **{f"c_{i}": "J" for i in (5, 6, 7, 8)},
    **{f"d_{i}": "J" for i in (5, 6, 7, 8, 9, 10, 11, 12, 17, 18, 19, 20)},
}
PSPACE_TOP = {
    "p": [f"c_{i}" for i in range(1, 9)] + [f"d_{i}" for i in range(1, 9)],
    "p'": [f"c_{i}" for i in range(9, 13)] + [f"d_{i}" for i in range(9, 21)],
}


def _pspace_into(B: _Builder, j: int, tag: str, p: str, pp: str, q: str, qq: str) -> dict:
    """Add the upper and lower middles of one PSPACE gadget between existing poles.

    ``tag`` is inserted in labels (``c^{tag,U}_5``); returns label maps.
    """
    upper = {}
    lower = {}
    aux = {}
    for pole, mids in PSPACE_TOP.items():
        for mid in mids:
            base, idx = mid.split("_")
            lab = f"{base}^{{{tag}U}}_{idx}" if tag is not None else mid
            B.add(lab)
            upper[mid] = lab
            B.edge(p if pole == "p" else pp, lab)
    for mid, lab in upper.items():
        star = mid.startswith("c")
        aux[lab] = B.add_aux(lab, j if star else j - 1, "a" if star else "b")
    for mid, lab in upper.items():
        suffix = f"^{{{tag}L,{mid}}}" if tag is not None else f"^{{L,{mid}}}"

        def sub_label(sub, suffix=suffix):
            base, idx = sub.split("_")
            return f"{base}{suffix}_{idx}"

        lower[mid], block_aux = _j_block_into(B, PSPACE_BLOCKS[mid], j - 1, lab, q, qq, sub_label)
        aux.update(block_aux)
    # subtree swaps among interchangeable upper middles
    classes: dict[tuple, list[str]] = {}
    for pole, mids in PSPACE_TOP.items():
        for mid in mids:
            classes.setdefault((pole, mid[0], PSPACE_BLOCKS[mid]), []).append(mid)
    for members in classes.values():
        for x, y in zip(members, members[1:]):
            pairs = [(upper[x], upper[y])] + [(lower[x][s], lower[y][s]) for s in lower[x]]
            B.perms.append(_swap(_with_aux(pairs, aux)))
    return {"upper": upper, "lower": lower}


def build_I_pspace(j: int) -> GadgetOutput:
    """The 32-middle gadget joined to (q, q') through J and J' blocks of order j-1."""
    if j < 2:
        raise ValueError("the PSPACE gadget needs j >= 2")
    B = _Builder()
    for v in ("p", "p'", "q", "q'"):
        B.add(v)
    maps = _pspace_into(B, j, None, "p", "p'", "q", "q'")
    names = ["p", "p'", "q", "q'", *maps["upper"].values()]
    out = B.finish(False, names, notes={"blocks": dict(PSPACE_BLOCKS)})
    for mid, mids in maps["lower"].items():
        for sub, lab in mids.items():
            out.designated[lab] = B.index[lab]
    return out


# ---------------------------------------------------------------- skyscraper


def build_skyscraper(phi, t: int) -> GadgetOutput:
    """Floors of PSPACE gadgets encoding an alternating quantified 3-CNF formula."""
    from .qbf import QbfInstance

    if not isinstance(phi, QbfInstance):
        raise TypeError("phi must be a QbfInstance")
    phi = phi.alternating()
    m = len(phi.clauses)
    if not 1 <= t <= m:
        raise ValueError(f"t must lie in 1..{m}, got {t}")
    k = phi.num_vars // 2
    B = _Builder()
    # poles: p_k, p'_k, then q_j = p_{j-1}
    B.add(f"p_{k}")
    B.add(f"p'_{k}")
    for floor in range(k, 0, -1):
        B.add(f"q_{floor}")
        B.add(f"q'_{floor}")
    informal: dict[str, str] = {}
    floors = {}
    for floor in range(k, 0, -1):
        order = 2 * floor + m - t
        p = f"p_{k}" if floor == k else f"q_{floor + 1}"
        pp = f"p'_{k}" if floor == k else f"q'_{floor + 1}"
        maps = _pspace_into(B, order, f"{floor},", p, pp, f"q_{floor}", f"q'_{floor}")
        floors[floor] = maps
        first, second = 2 * k - 2 * floor + 1, 2 * k - 2 * floor + 2
        for i in (5, 6):
            informal[maps["upper"][f"c_{i}"]] = f"T(x{first})"
        for i in (7, 8):
            informal[maps["upper"][f"c_{i}"]] = f"F(x{first})"
        for i in (5, 6, 7, 8):
            block = maps["lower"][f"c_{i}"]
            for sub in ("c_1", "c_2", "d_1", "d_2"):
                informal[block[sub]] = f"T(x{second})"
            for sub in ("c_3", "c_4", "d_3", "d_4"):
                informal[block[sub]] = f"F(x{second})"
    # clause vertices replace q_1 and q'_1
    clause_l = [f"v_C{i}" for i in range(1, m + 1)]
    clause_r = [f"v'_C{i}" for i in range(1, m + 1)]
    nulls = [f"null_{i}" for i in range(1, m + 1)]
    # clause edges only see informal labels, so keep the swaps that respect them
    B.perms = [perm for perm in B.perms if all(informal.get(a) == informal.get(b) for a, b in perm.items())]
    B.replace("q_1", clause_l, color=None)
    B.replace("q'_1", clause_r + nulls, color=None)
    by_tag: dict[str, list[str]] = {}
    for lab, tag in informal.items():
        by_tag.setdefault(tag, []).append(lab)
    for i, clause in enumerate(phi.clauses, start=1):
        for lit in clause:
            tag = f"{'T' if lit > 0 else 'F'}(x{abs(lit)})"
            for target in by_tag.get(tag, []):
                B.edge(f"v_C{i}", target)
                B.edge(f"v'_C{i}", target)
    designated = [f"p_{k}", f"p'_{k}", *clause_l, *clause_r, *nulls]
    designated += [f"q_{f}" for f in range(2, k + 1)] + [f"q'_{f}" for f in range(2, k + 1)]
    out = B.finish(False, designated, informal, notes={"k": k, "m": m, "t": t, "blocks": dict(PSPACE_BLOCKS)})
    out.designated["a"] = out.designated[f"p_{k}"]
    out.designated["a'"] = out.designated[f"p'_{k}"]
    for floor, maps in floors.items():
        for lab in maps["upper"].values():
            out.designated[lab] = B.index[lab]
        for mids in maps["lower"].values():
            for lab in mids.values():
                out.designated[lab] = B.index[lab]
    return out
