"""Fully augmented link diagrams drawn from a cubic graph with a perfect matching.

Each matched arc becomes a crossing circle and each unmatched arc a strand
arc.  At a node, the matched arc and the two unmatched arcs sit in the
rotation order (matched, next, prev).  Looking along the matched arc from
node f to node g, next(f) and prev(g) lie on the left and prev(f) and
next(g) on the right; without a half-twist strands pass straight through
the crossing circle on their own side, and a half-twist swaps the sides.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace
from typing import Optional

from .nerve import DualGraph
from .packing import Layout
from .svg import Canvas

# a strand end is (strand arc id, node) with the arc incident to the node
End = tuple[int, int]


class LinkError(ValueError):
    pass


@dataclass(frozen=True)
class CrossingCircle:
    arc: int
    nodes: tuple[int, int]
    # strand ends (next(f), prev(f), next(g), prev(g))
    ends: tuple[End, End, End, End]
    half_twist: bool = False
    twist_sign: int = 1

    def connections(self) -> tuple[tuple[End, End], tuple[End, End]]:
        nf, pf, ng, pg = self.ends
        if self.half_twist:
            return (nf, ng), (pf, pg)
        return (nf, pg), (pf, ng)


@dataclass(frozen=True)
class StrandArc:
    arc: int
    nodes: tuple[int, int]


@dataclass(frozen=True)
class FALDiagram:
    crossing_circles: tuple[CrossingCircle, ...]
    strand_arcs: tuple[StrandArc, ...]
    genus: int
    toggles: tuple[int, ...] = ()

    @property
    def ambient_is_s3(self) -> bool:
        """The double of the scooped region is the 3-sphere only for a spherical surface."""
        return self.genus == 0

    def strand_index(self) -> dict[int, int]:
        return {s.arc: i for i, s in enumerate(self.strand_arcs)}

    def to_dict(self, partition: Optional["ComponentPartition"] = None) -> dict:
        out = {
            "genus": self.genus,
            "ambient_is_s3": self.ambient_is_s3,
            "crossing_circles": [
                {
                    "arc": c.arc,
                    "nodes": list(c.nodes),
                    "ends": [list(e) for e in c.ends],
                    "half_twist": c.half_twist,
                    "twist_sign": c.twist_sign,
                }
                for c in self.crossing_circles
            ],
            "strand_arcs": [{"arc": s.arc, "nodes": list(s.nodes)} for s in self.strand_arcs],
            "toggles": list(self.toggles),
        }
        if partition is not None:
            out["components"] = [list(b) for b in partition.blocks]
            out["component_count"] = partition.count
        return out


@dataclass(frozen=True)
class ComponentPartition:
    """Strand arcs grouped into the non-crossing-circle link components."""

    blocks: tuple[tuple[int, ...], ...]
    component_of: dict

    @property
    def count(self) -> int:
        return len(self.blocks)


def synth_fal(G: DualGraph, genus: int = 0) -> FALDiagram:
    if not G.is_perfect_matching():
        raise LinkError("dual graph has no perfect matching")
    circles = []
    for m in sorted(G.matching):
        f, g = G.ends[m]
        if f == g:
            raise LinkError(f"matched arc {m} is a loop")
        ends = []
        for node in (f, g):
            rot = G.rotation[node]
            k = rot.index(m)
            for arc in (rot[(k + 1) % 3], rot[(k + 2) % 3]):
                if G.ends[arc][0] == G.ends[arc][1]:
                    raise LinkError(f"strand arc {arc} is a loop")
                ends.append((arc, node))
        circles.append(CrossingCircle(m, (f, g), tuple(ends)))
    strands = tuple(StrandArc(e, G.ends[e]) for e in range(len(G.ends)) if e not in G.matching)
    F = FALDiagram(tuple(circles), strands, genus)
    _check_connected(F)
    return F


def _check_connected(F: FALDiagram) -> None:
    """The projection graph (crossing circles joined by strand arcs) must be connected."""
    if not F.crossing_circles:
        return
    owner = {}
    for i, c in enumerate(F.crossing_circles):
        for node in c.nodes:
            owner[node] = i
    adj: dict[int, set[int]] = {i: set() for i in range(len(F.crossing_circles))}
    for s in F.strand_arcs:
        a, b = (owner[n] for n in s.nodes)
        adj[a].add(b)
        adj[b].add(a)
    seen = {0}
    queue = deque([0])
    while queue:
        for j in adj[queue.popleft()]:
            if j not in seen:
                seen.add(j)
                queue.append(j)
    if len(seen) != len(F.crossing_circles):
        raise LinkError("diagram is not connected")


def trace_components(F: FALDiagram) -> ComponentPartition:
    """Follow strands through crossing circles until each closes up."""
    partner: dict[End, End] = {}
    for c in F.crossing_circles:
        for x, y in c.connections():
            partner[x] = y
            partner[y] = x
    nodes = {s.arc: s.nodes for s in F.strand_arcs}
    comp: dict[int, int] = {}
    blocks = []
    for s in F.strand_arcs:
        if s.arc in comp:
            continue
        block = []
        arc, node = s.arc, s.nodes[0]
        while arc not in comp:
            comp[arc] = len(blocks)
            block.append(arc)
            # leave through the far end of this arc, cross the circle there
            a, b = nodes[arc]
            far = b if a == node else a
            arc, node = partner[(arc, far)]
        blocks.append(tuple(sorted(block)))
    return ComponentPartition(tuple(blocks), comp)


def toggle_twist(F: FALDiagram, i: int, sign: int = 1) -> FALDiagram:
    c = F.crossing_circles[i]
    circles = list(F.crossing_circles)
    circles[i] = replace(c, half_twist=not c.half_twist, twist_sign=sign)
    return replace(F, crossing_circles=tuple(circles))


def merging_circles(F: FALDiagram, P: Optional[ComponentPartition] = None) -> list[int]:
    """Crossing circles met by two distinct components."""
    P = P or trace_components(F)
    out = []
    for i, c in enumerate(F.crossing_circles):
        if len({P.component_of[arc] for arc, _ in c.ends}) > 1:
            out.append(i)
    return out


def reduce_to_knot(F: FALDiagram) -> FALDiagram:
    """Add half-twists at the lowest-indexed merging circles until one strand component is left."""
    _check_connected(F)
    toggles = list(F.toggles)
    P = trace_components(F)
    while P.count > 1:
        cands = merging_circles(F, P)
        # a connected diagram always has a circle joining two components
        assert cands, "connected diagram without a merging crossing circle"
        F = toggle_twist(F, cands[0])
        toggles.append(cands[0])
        P = trace_components(F)
    return replace(F, toggles=tuple(toggles))


def render_diagram(F: FALDiagram, Lyt: Layout, title: Optional[str] = None) -> str:
    """Crossing circles at the tangency points of coloured edges, strands along dual arcs."""
    if not F.crossing_circles:
        raise LinkError("empty diagram")
    N = Lyt.nerve
    canvas = Canvas()

    def node_center(f: int) -> complex:
        D = Lyt.global_dual(f)
        if D.is_line():
            return Lyt.chart_maps[f](Lyt.tangency[N.face_edge_ids[f][0]]).z
        return D.center

    def tangency_in(e: int, f: int) -> complex:
        # tangency point of edge e seen from the chart of face f
        f0, g0 = N.edge_faces[e]
        p = Lyt.tangency[e] if f == f0 else Lyt.transitions[e].inverse()(Lyt.tangency[e])
        return Lyt.chart_maps[f](p).z

    for s in F.strand_arcs:
        for f in s.nodes:
            canvas.segment(node_center(f), tangency_in(s.arc, f), "strand")
    for c in F.crossing_circles:
        f, g = c.nodes
        t = tangency_in(c.arc, f)
        r = 0.4 * min(abs(node_center(f) - t), abs(node_center(g) - tangency_in(c.arc, g)))
        for node in c.nodes:
            canvas.segment(node_center(node), tangency_in(c.arc, node), "strand")
        canvas.circle(t, r, "crossing-circle")
        if c.half_twist:
            d = r * 0.5
            canvas.segment(t - d - 1j * d, t + d + 1j * d, "half-twist")
            canvas.segment(t - d + 1j * d, t + d - 1j * d, "half-twist")
    styles = [
        ".strand{stroke:#000;stroke-width:1.5}",
        ".crossing-circle{fill:none;stroke:#b00;stroke-width:1.5}",
        ".half-twist{stroke:#b00;stroke-width:1}",
    ]
    return canvas.render(title, styles)
