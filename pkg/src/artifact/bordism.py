"""PLCW decompositions of surfaces with area, optionally decorated by defect
lines, together with elementary moves, normal forms and gluing.

Conventions
-----------
* A face lists its sides counterclockwise as ``(edge_id, sign)``; ``sign=+1``
  means the edge is traversed from tail to head.  The first side is the
  marked side.  Interior edges are traversed once with each sign.
* A defect crosses a face once, entering through side ``entry`` and leaving
  through side ``exit``.  The sides met counterclockwise after ``exit`` and
  before ``entry`` lie to the left of the defect (phase ``t``), the remaining
  ones to the right (phase ``s``).
* A defect face carries the triple ``(a_t, l, a_s)``: area to its left, length
  of the segment, area to its right.  A crossed edge carries the same kind of
  triple.
* Boundary circles list their edges along the circle orientation.  For an
  outgoing circle this is the direction in which the faces traverse it, for an
  ingoing circle the opposite direction.  The first edge is the basepoint.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Sequence

Zero = Fraction(0)


def _q(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(x)


def _triple(x) -> tuple:
    return tuple(_q(v) for v in x)


class BordismError(ValueError):
    pass


class MoveError(BordismError):
    pass


@dataclass(frozen=True)
class DefectConditions:
    """Phase labels, defect labels and source/target maps."""

    phases: frozenset
    defects: frozenset
    source: dict
    target: dict

    @classmethod
    def from_lines(cls, lines: dict, phases: Iterable = ()):
        """``lines`` maps a defect label to ``(t, s)`` = (left phase, right phase)."""
        t = {k: v[0] for k, v in lines.items()}
        s = {k: v[1] for k, v in lines.items()}
        ph = set(phases) | set(t.values()) | set(s.values())
        return cls(frozenset(ph), frozenset(lines), s, t)


@dataclass(frozen=True)
class Crossing:
    label: str
    position: Fraction = Fraction(1, 2)
    area: tuple = (Zero, Zero, Zero)


@dataclass(frozen=True)
class Edge:
    tail: int
    head: int
    area: Fraction = Zero
    crossing: Crossing | None = None


@dataclass(frozen=True)
class FaceDefect:
    label: str
    entry: int
    exit: int


@dataclass(frozen=True)
class Face:
    sides: tuple
    area: Fraction | tuple = Zero
    phase: str = "A"
    defect: FaceDefect | None = None


@dataclass(frozen=True)
class Circle:
    direction: str
    edges: tuple
    index: int = 0


@dataclass(frozen=True)
class PlcwComplex:
    vertices: dict
    edges: dict
    faces: dict
    circles: tuple
    conditions: DefectConditions | None = None

    # derived data ----------------------------------------------------------
    @property
    def euler(self) -> int:
        return len(self.vertices) - len(self.edges) + len(self.faces)

    @property
    def has_defects(self) -> bool:
        return any(f.defect is not None for f in self.faces.values())

    def inputs(self) -> list[Circle]:
        return sorted([c for c in self.circles if c.direction == "in"], key=lambda c: c.index)

    def outputs(self) -> list[Circle]:
        return sorted([c for c in self.circles if c.direction == "out"], key=lambda c: c.index)

    def sides_of(self, e) -> list[tuple]:
        """All ``(face, position, sign)`` referencing edge ``e``."""
        out = []
        for fid in sorted(self.faces):
            for k, (eid, sg) in enumerate(self.faces[fid].sides):
                if eid == e:
                    out.append((fid, k, sg))
        return out

    def side_index(self) -> dict:
        idx: dict = {}
        for fid in sorted(self.faces):
            for k, (eid, sg) in enumerate(self.faces[fid].sides):
                idx.setdefault(eid, []).append((fid, k, sg))
        return idx

    def circle_of_edge(self) -> dict:
        return {e: c for c in self.circles for e in c.edges}

    def side_start(self, side) -> int:
        e, sg = side
        ed = self.edges[e]
        return ed.tail if sg > 0 else ed.head

    def side_end(self, side) -> int:
        e, sg = side
        ed = self.edges[e]
        return ed.head if sg > 0 else ed.tail

    def valence(self, v) -> int:
        n = 0
        for ed in self.edges.values():
            n += (ed.tail == v) + (ed.head == v)
        return n

    def summary(self) -> str:
        return (f"PLCW(V={len(self.vertices)}, E={len(self.edges)}, F={len(self.faces)}, "
                f"chi={self.euler}, in={len(self.inputs())}, out={len(self.outputs())})")

    def total_area(self) -> Fraction:
        tot = sum((_v for _v in self.vertices.values()), Zero)
        for ed in self.edges.values():
            tot += ed.area
            if ed.crossing is not None:
                tot += ed.crossing.area[0] + ed.crossing.area[2]
        for f in self.faces.values():
            tot += (f.area[0] + f.area[2]) if f.defect is not None else f.area
        return tot


def _sorted_dict(d: dict) -> dict:
    return {k: d[k] for k in sorted(d)}


def make_complex(vertices, edges, faces, circles, conditions=None) -> PlcwComplex:
    return PlcwComplex(_sorted_dict(dict(vertices)), _sorted_dict(dict(edges)), _sorted_dict(dict(faces)),
                       tuple(circles), conditions)


# sides of defect faces --------------------------------------------------------

def face_side_kinds(f: Face) -> list[str]:
    """Per side: 'entry', 'exit', 't', 's' (defect faces) or 'plain'."""
    n = len(f.sides)
    if f.defect is None:
        return ["plain"] * n
    p, q = f.defect.entry, f.defect.exit
    kinds = [""] * n
    kinds[p] = "entry"
    kinds[q] = "exit"
    k = (q + 1) % n
    while k != p:
        kinds[k] = "t"
        k = (k + 1) % n
    k = (p + 1) % n
    while k != q:
        kinds[k] = "s"
        k = (k + 1) % n
    return kinds


def side_phase(c: PlcwComplex, f: Face, k: int) -> str:
    kind = face_side_kinds(f)[k]
    if kind == "plain":
        return f.phase
    if kind == "t":
        return c.conditions.target[f.defect.label]
    if kind == "s":
        return c.conditions.source[f.defect.label]
    return f.defect.label


def crossed_edge_vertices(c: PlcwComplex, e) -> tuple[int, int]:
    """(t-side vertex, s-side vertex) of a crossed edge."""
    for fid, k, sg in c.sides_of(e):
        f = c.faces[fid]
        if f.defect is None:
            continue
        side = f.sides[k]
        if k == f.defect.exit:
            return c.side_end(side), c.side_start(side)
        if k == f.defect.entry:
            return c.side_start(side), c.side_end(side)
    raise BordismError(f"edge {e} is not crossed by any face defect")


def defect_list(c: PlcwComplex, circ: Circle) -> tuple:
    """Boundary objects along a circle: ``(label, bar)`` per crossed edge or ``('phase', p)``."""
    sidx = c.side_index()
    out = []
    for e in circ.edges:
        (fid, k, _), = sidx[e]
        f = c.faces[fid]
        kind = face_side_kinds(f)[k]
        if kind in ("entry", "exit"):
            leg_bar = kind == "exit"
            bar = leg_bar if circ.direction == "out" else not leg_bar
            out.append((f.defect.label, bar))
        else:
            out.append(("phase", side_phase(c, f, k)))
    return tuple(out)


# validation ------------------------------------------------------------------

@dataclass
class ValidationReport:
    errors: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def add(self, msg: str):
        self.errors.append(msg)

    def __str__(self) -> str:
        return "ok" if self.ok else "\n".join(self.errors)


class _UF:
    def __init__(self):
        self.p = {}

    def find(self, x):
        self.p.setdefault(x, x)
        while self.p[x] != x:
            self.p[x] = self.p[self.p[x]]
            x = self.p[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            if repr(ra) < repr(rb):
                self.p[rb] = ra
            else:
                self.p[ra] = rb


def topological_components(c: PlcwComplex) -> list[set]:
    uf = _UF()
    for fid, f in c.faces.items():
        uf.find(("F", fid))
        for e, _ in f.sides:
            uf.union(("F", fid), ("E", e))
    for e, ed in c.edges.items():
        uf.union(("E", e), ("V", ed.tail))
        uf.union(("E", e), ("V", ed.head))
    for v in c.vertices:
        uf.find(("V", v))
    groups: dict = {}
    for x in list(uf.p):
        groups.setdefault(uf.find(x), set()).add(x)
    return sorted(groups.values(), key=lambda g: sorted(map(repr, g)))


def _region_elements(c: PlcwComplex):
    """Union-find over region pieces, with areas and phases per piece."""
    uf = _UF()
    area: dict = {}
    phase: dict = {}
    for v, a in c.vertices.items():
        area[("V", v)] = a
    for e, ed in c.edges.items():
        if ed.crossing is None:
            area[("E", e)] = ed.area
        else:
            area[("Et", e)] = ed.crossing.area[0]
            area[("Es", e)] = ed.crossing.area[2]
    crossed_vs = {}
    for e, ed in c.edges.items():
        if ed.crossing is None:
            uf.union(("E", e), ("V", ed.tail))
            uf.union(("E", e), ("V", ed.head))
        else:
            try:
                tv, sv = crossed_edge_vertices(c, e)
            except BordismError:
                continue
            crossed_vs[e] = (tv, sv)
            uf.union(("Et", e), ("V", tv))
            uf.union(("Es", e), ("V", sv))
    for fid, f in c.faces.items():
        if f.defect is None:
            key = ("F", fid)
            area[key] = f.area
            phase[key] = f.phase
            uf.find(key)
            for e, sg in f.sides:
                if c.edges[e].crossing is None:
                    uf.union(key, ("E", e))
                uf.union(key, ("V", c.side_start((e, sg))))
        else:
            kt, ks = ("Ft", fid), ("Fs", fid)
            area[kt], area[ks] = f.area[0], f.area[2]
            if c.conditions is not None:
                phase[kt] = c.conditions.target.get(f.defect.label)
                phase[ks] = c.conditions.source.get(f.defect.label)
            uf.find(kt)
            uf.find(ks)
            kinds = face_side_kinds(f)
            for k, (e, sg) in enumerate(f.sides):
                kind = kinds[k]
                if kind in ("t", "s"):
                    key = kt if kind == "t" else ks
                    if c.edges[e].crossing is None:
                        uf.union(key, ("E", e))
                    uf.union(key, ("V", c.side_start((e, sg))))
                    uf.union(key, ("V", c.side_end((e, sg))))
                else:
                    uf.union(kt, ("Et", e))
                    uf.union(ks, ("Es", e))
    return uf, area, phase


def area_components(c: PlcwComplex) -> list[tuple]:
    """Sorted list of ``(phase, total area)`` per connected region."""
    uf, area, phase = _region_elements(c)
    tot: dict = {}
    ph: dict = {}
    for k, a in area.items():
        r = uf.find(k)
        tot[r] = tot.get(r, Zero) + a
        if k in phase:
            ph.setdefault(r, set()).add(phase[k])
    out = []
    for r, a in tot.items():
        p = ph.get(r, {None})
        out.append((sorted(map(str, p))[0] if p else "", a))
    return sorted(out, key=lambda t: (t[0], t[1]))


def defect_line_lengths(c: PlcwComplex) -> list[tuple]:
    uf = _UF()
    length: dict = {}
    label: dict = {}
    for e, ed in c.edges.items():
        if ed.crossing is not None:
            length[("Lx", e)] = ed.crossing.area[1]
            label[("Lx", e)] = ed.crossing.label
            uf.find(("Lx", e))
    for fid, f in c.faces.items():
        if f.defect is None:
            continue
        key = ("L", fid)
        length[key] = f.area[1]
        label[key] = f.defect.label
        uf.find(key)
        uf.union(key, ("Lx", f.sides[f.defect.entry][0]))
        uf.union(key, ("Lx", f.sides[f.defect.exit][0]))
    tot: dict = {}
    lab: dict = {}
    for k, l in length.items():
        r = uf.find(k)
        tot[r] = tot.get(r, Zero) + l
        lab[r] = label[k]
    return sorted(((lab[r], tot[r]) for r in tot), key=lambda t: (t[0], t[1]))


def validate(c: PlcwComplex) -> ValidationReport:
    rep = ValidationReport()
    V, E, F = c.vertices, c.edges, c.faces
    for e, ed in E.items():
        if ed.tail not in V or ed.head not in V:
            rep.add(f"edge {e}: endpoint not a vertex")
    if rep.errors:
        return rep
    sidx = c.side_index()
    circ_of = {}
    for ci, circ in enumerate(c.circles):
        if circ.direction not in ("in", "out"):
            rep.add(f"circle {ci}: direction must be 'in' or 'out'")
        if not circ.edges:
            rep.add(f"circle {ci}: no edges")
        for e in circ.edges:
            if e in circ_of:
                rep.add(f"edge {e} lies on two boundary circles")
            circ_of[e] = ci
    for fid, f in F.items():
        if not f.sides:
            rep.add(f"face {fid}: no sides")
            continue
        n = len(f.sides)
        for k in range(n):
            e, sg = f.sides[k]
            if e not in E:
                rep.add(f"face {fid}: unknown edge {e}")
                break
            if sg not in (1, -1):
                rep.add(f"face {fid}: side sign must be +-1")
        else:
            for k in range(n):
                if c.side_end(f.sides[k]) != c.side_start(f.sides[(k + 1) % n]):
                    rep.add(f"face {fid}: sides {k},{(k + 1) % n} do not meet at a vertex")
    if rep.errors:
        return rep
    for e in E:
        ss = sidx.get(e, [])
        if len(ss) == 0:
            rep.add(f"edge {e}: bounds no face")
        elif len(ss) > 2:
            rep.add(f"edge {e}: bounds {len(ss)} face sides")
        elif len(ss) == 2:
            if ss[0][2] == ss[1][2]:
                rep.add(f"edge {e}: both sides traverse it in the same direction (non-orientable)")
            if e in circ_of:
                rep.add(f"edge {e}: interior edge declared on a boundary circle")
        else:
            if e not in circ_of:
                rep.add(f"edge {e}: boundary edge not on a declared circle")
    used_v = set()
    for ed in E.values():
        used_v.update((ed.tail, ed.head))
    for v in V:
        if v not in used_v:
            rep.add(f"vertex {v}: isolated")
    # circles
    for ci, circ in enumerate(c.circles):
        es = circ.edges
        if any(len(sidx.get(e, [])) != 1 for e in es):
            continue
        trav = []
        for e in es:
            (fid, k, sg), = sidx[e]
            trav.append((e, sg))
        for k in range(len(es)):
            a, b = trav[k], trav[(k + 1) % len(es)]
            if circ.direction == "out":
                okk = c.side_end(a) == c.side_start(b)
            else:
                okk = c.side_start(a) == c.side_end(b)
            if not okk:
                rep.add(f"circle {ci}: edges not listed along the circle orientation")
        crossed = [E[e].crossing is not None for e in es]
        if not any(crossed) and len(es) != 1:
            rep.add(f"circle {ci}: a circle without defect points must consist of one edge")
        if any(crossed) and not all(crossed):
            rep.add(f"circle {ci}: every edge of a circle with defect points must be crossed")
        for e in es:
            if c.edges[e].area != 0 and circ.direction == "out":
                rep.add(f"edge {e}: outgoing boundary cells carry no area")
            ed = c.edges[e]
            if circ.direction == "out" and ed.crossing is not None and any(ed.crossing.area):
                rep.add(f"edge {e}: outgoing boundary cells carry no area")
            for v in (ed.tail, ed.head):
                if circ.direction == "out" and c.vertices[v] != 0:
                    rep.add(f"vertex {v}: outgoing boundary cells carry no area")
    idx = sorted(c.index for c in c.inputs()), sorted(c.index for c in c.outputs())
    for group in idx:
        if group != list(range(len(group))):
            rep.add("circle indices must be 0..n-1 per direction")
    # defects
    for e, ed in E.items():
        if ed.crossing is not None:
            cr = ed.crossing
            if not (0 < cr.position < 1):
                rep.add(f"edge {e}: defect point meets a vertex")
            if c.conditions is None or cr.label not in c.conditions.defects:
                rep.add(f"edge {e}: unknown defect label {cr.label!r}")
            if any(x < 0 for x in cr.area):
                rep.add(f"edge {e}: negative area or length")
            uses = []
            for fid, k, _ in sidx.get(e, []):
                f = F[fid]
                if f.defect is None:
                    rep.add(f"edge {e}: crossed edge bounds a face without a defect")
                    continue
                if k == f.defect.entry:
                    uses.append("entry")
                elif k == f.defect.exit:
                    uses.append("exit")
                else:
                    rep.add(f"edge {e}: crossed edge is neither entry nor exit of face {fid}")
                if f.defect.label != cr.label:
                    rep.add(f"edge {e}: defect label differs from face {fid}")
            if len(uses) == 2 and sorted(uses) != ["entry", "exit"]:
                rep.add(f"edge {e}: defect must leave one face and enter the other")
        elif ed.area < 0:
            rep.add(f"edge {e}: negative area")
    for v, a in V.items():
        if a < 0:
            rep.add(f"vertex {v}: negative area")
    for fid, f in F.items():
        if f.defect is None:
            for e, _ in f.sides:
                if E[e].crossing is not None:
                    rep.add(f"face {fid}: crossed edge {e} on a face without a defect")
            if not isinstance(f.area, Fraction):
                rep.add(f"face {fid}: plain face needs a scalar area")
            elif f.area < 0:
                rep.add(f"face {fid}: negative area")
            if c.conditions is not None and f.phase not in c.conditions.phases:
                rep.add(f"face {fid}: unknown phase {f.phase!r}")
        else:
            d = f.defect
            n = len(f.sides)
            if not (0 <= d.entry < n and 0 <= d.exit < n) or d.entry == d.exit:
                rep.add(f"face {fid}: defect must enter and leave through two different sides")
                continue
            for k in (d.entry, d.exit):
                if E[f.sides[k][0]].crossing is None:
                    rep.add(f"face {fid}: defect side {k} is not a crossed edge")
            for k, kind in enumerate(face_side_kinds(f)):
                if kind in ("t", "s") and E[f.sides[k][0]].crossing is not None:
                    rep.add(f"face {fid}: edge {f.sides[k][0]} crossed twice by the face's defect")
            if f.sides[d.entry][0] == f.sides[d.exit][0]:
                rep.add(f"face {fid}: defect enters and leaves through the same edge")
            if not isinstance(f.area, tuple) or len(f.area) != 3:
                rep.add(f"face {fid}: defect face needs an (a_t, l, a_s) triple")
            elif f.area[0] < 0 or f.area[2] < 0 or f.area[1] < 0:
                rep.add(f"face {fid}: negative area or length")
    if rep.errors:
        return rep
    # phase compatibility across uncrossed edges
    if c.conditions is not None or c.has_defects:
        if c.conditions is None:
            rep.add("defect decoration without defect conditions")
            return rep
        for e, ss in sidx.items():
            if len(ss) == 2 and E[e].crossing is None:
                p1 = side_phase(c, F[ss[0][0]], ss[0][1])
                p2 = side_phase(c, F[ss[1][0]], ss[1][1])
                if p1 != p2:
                    rep.add(f"edge {e}: phases {p1!r} and {p2!r} meet without a defect")
        uf, _, phase = _region_elements(c)
        seen: dict = {}
        for k, p in phase.items():
            r = uf.find(k)
            if r in seen and seen[r] != p:
                rep.add(f"region of {k}: phases {seen[r]!r} and {p!r} (s/t mismatch)")
            seen[r] = p
    # zero areas
    comps = topological_components(c)
    _, area, _ = _region_elements(c)
    face_area = {}
    for fid, f in F.items():
        face_area[fid] = (f.area[0], f.area[2]) if f.defect is not None else (f.area,)
    for comp in comps:
        fids = [x[1] for x in comp if x[0] == "F"]
        zero = [fid for fid in fids if any(a == 0 for a in face_area[fid])]
        if not zero:
            continue
        total = Zero
        for fid in fids:
            total += sum(face_area[fid], Zero)
        eids = {x[1] for x in comp if x[0] == "E"}
        vids = {x[1] for x in comp if x[0] == "V"}
        for e in eids:
            ed = E[e]
            total += ed.area + (ed.crossing.area[0] + ed.crossing.area[2] if ed.crossing else 0)
        total += sum((V[v] for v in vids), Zero)
        dirs = sorted(circ.direction for circ in c.circles if circ.edges[0] in eids)
        chi = len(vids) - len(eids) + len(fids)
        if total != 0 or dirs != ["in", "out"] or chi != 0:
            rep.add(f"face {zero[0]}: zero area outside an in-out cylinder component")
    return rep


def require_valid(c: PlcwComplex) -> PlcwComplex:
    rep = validate(c)
    if not rep.ok:
        raise BordismError("invalid PLCW complex:\n" + str(rep))
    return c


# builders --------------------------------------------------------------------

def normal_form(g: int, b_in: int, b_out: int, area=1, phase: str = "A") -> PlcwComplex:
    """One (4g+3b)-gon for genus g with b = b_in + b_out boundary circles.

    The sphere uses two monogons on a loop edge.  Area is spread evenly over
    all cells that carry area (faces, non-outgoing edges and vertices)."""
    if g < 0 or b_in < 0 or b_out < 0:
        raise BordismError("genus and boundary counts must be >= 0")
    area = _q(area)
    if area < 0:
        raise BordismError("area must be >= 0")
    b = b_in + b_out
    if g == 0 and b == 0:
        verts = {0: Zero}
        edges = {0: Edge(0, 0)}
        faces = {0: Face(((0, 1),), Zero, phase), 1: Face(((0, -1),), Zero, phase)}
        return spread_area(make_complex(verts, edges, faces, ()), area)
    verts = {0: Zero}
    edges = {}
    sides = []
    eid = 0
    for _ in range(g):
        a_, b_ = eid, eid + 1
        eid += 2
        edges[a_] = Edge(0, 0)
        edges[b_] = Edge(0, 0)
        sides += [(a_, 1), (b_, 1), (a_, -1), (b_, -1)]
    circles = []
    for j in range(b):
        w = j + 1
        verts[w] = Zero
        cj, ej = eid, eid + 1
        eid += 2
        edges[cj] = Edge(0, w)
        edges[ej] = Edge(w, w)
        direction = "in" if j < b_in else "out"
        index = j if j < b_in else j - b_in
        sides += [(cj, 1), (ej, 1), (cj, -1)]
        circles.append(Circle(direction, (ej,), index))
    faces = {0: Face(tuple(sides), Zero, phase)}
    return spread_area(make_complex(verts, edges, faces, circles), area)


def _area_cells(c: PlcwComplex):
    out_edges = {e for circ in c.circles if circ.direction == "out" for e in circ.edges}
    out_verts = set()
    for e in out_edges:
        out_verts.update((c.edges[e].tail, c.edges[e].head))
    cells = [("F", f) for f in c.faces]
    cells += [("E", e) for e in c.edges if e not in out_edges]
    cells += [("V", v) for v in c.vertices if v not in out_verts]
    return cells


def spread_area(c: PlcwComplex, area) -> PlcwComplex:
    """Distribute ``area`` evenly over the area-carrying cells of a plain complex."""
    area = _q(area)
    if c.has_defects:
        raise BordismError("spread_area is for complexes without defects")
    cells = _area_cells(c)
    share = area / len(cells)
    faces = dict(c.faces)
    edges = dict(c.edges)
    verts = dict(c.vertices)
    for kind, x in cells:
        if kind == "F":
            faces[x] = replace(faces[x], area=share)
        elif kind == "E":
            edges[x] = replace(edges[x], area=share)
        else:
            verts[x] = share
    return make_complex(verts, edges, faces, c.circles, c.conditions)


def set_areas(c: PlcwComplex, weights: dict) -> PlcwComplex:
    """Replace areas cell by cell; keys are ``('F', id)``, ``('E', id)``, ``('V', id)``."""
    faces, edges, verts = dict(c.faces), dict(c.edges), dict(c.vertices)
    for (kind, x), a in weights.items():
        if kind == "F":
            a = _triple(a) if faces[x].defect is not None else _q(a)
            faces[x] = replace(faces[x], area=a)
        elif kind == "E":
            if edges[x].crossing is not None:
                edges[x] = replace(edges[x], crossing=replace(edges[x].crossing, area=_triple(a)))
            else:
                edges[x] = replace(edges[x], area=_q(a))
        else:
            verts[x] = _q(a)
    return make_complex(verts, edges, faces, c.circles, c.conditions)


def cylinder(area=1, phase: str = "A") -> PlcwComplex:
    return normal_form(0, 1, 1, area, phase)


def disc(direction: str = "out", area=1, phase: str = "A") -> PlcwComplex:
    return normal_form(0, 1, 0, area, phase) if direction == "in" else normal_form(0, 0, 1, area, phase)


def defect_cylinder(points: Sequence[tuple], conditions: DefectConditions, *, face_area=(1, 0, 1),
                    edge_area=0, vertex_area=0) -> PlcwComplex:
    """In-out cylinder crossed by parallel defect lines running between the circles.

    ``points`` lists ``(label, bar)`` along the circle orientation; ``bar``
    True means the line runs from the ingoing to the outgoing circle (boundary
    object X-bar), False the opposite direction.  Face ``i`` is crossed by line
    ``i``; its right side is the vertical edge shared with face ``i+1``."""
    k = len(points)
    if k == 0:
        raise BordismError("use normal_form for a cylinder without defects")
    verts, edges, faces = {}, {}, {}
    # vertices: bottom b_i = i, top w_i = k + i (left corner of face i)
    for i in range(k):
        verts[i] = _q(vertex_area)
        verts[k + i] = Zero
    # edges: bottom_i = i, top_i = k+i, vertical_i = 2k+i (left side of face i, from b_i to w_i)
    fa = _triple(face_area)
    # the circles run right to left, so face i carries point k-1-i
    on_face = [points[k - 1 - i] for i in range(k)]
    for i, (lab, bar) in enumerate(on_face):
        j = (i + 1) % k
        edges[i] = Edge(i, j, Zero, Crossing(lab, Fraction(1, 2), _triple((0, 0, 0))))
        edges[k + i] = Edge(k + i, k + j, Zero, Crossing(lab, Fraction(1, 2), _triple((0, 0, 0))))
        edges[2 * k + i] = Edge(i, k + i, _q(edge_area))
    for i, (lab, bar) in enumerate(on_face):
        j = (i + 1) % k
        # bottom is side 0, right 1, top 2, left 3
        sides = ((i, 1), (2 * k + j, 1), (k + i, -1), (2 * k + i, -1))
        fd = FaceDefect(lab, entry=0, exit=2) if bar else FaceDefect(lab, entry=2, exit=0)
        faces[i] = Face(sides, fa, "", fd)
    # circle orientation: out follows traversal (top traversed right-to-left),
    # in is opposite to traversal (bottom traversed left-to-right)
    top = tuple(k + i for i in reversed(range(k)))
    bottom = tuple(i for i in reversed(range(k)))
    circles = (Circle("in", bottom, 0), Circle("out", top, 0))
    c = make_complex(verts, edges, faces, circles, conditions)
    return require_valid(c)


def phase_of_points_between(points, conditions, i):
    """Phase between line i and line i+1 along the circle."""
    lab, bar = points[i]
    return conditions.source[lab] if bar else conditions.target[lab]


def _loop_strips(loops, halves, conditions, closed):
    """Strips between horizontal loop edges, each cut into a square and a bigon.

    ``halves[i] = (above, below)`` are the areas of strip i on the two sides
    of its loop."""
    n = len(loops)
    nh = n if closed else n + 1
    verts, edges, faces = {}, {}, {}
    for i in range(nh):
        verts[i] = Zero
        edges[i] = Edge(i, i, Zero)
    half = Fraction(1, 2)
    for i, (lab, length) in enumerate(loops):
        j = (i + 1) % nh
        nxt = loops[(i + 1) % n][0] if (closed or i + 1 < n) else None
        if nxt is not None and conditions.target[lab] != conditions.source[nxt]:
            raise BordismError(f"phase mismatch between loops {i} and {(i + 1) % n}")
        ca, cb = nh + 2 * i, nh + 2 * i + 1
        for e in (ca, cb):
            edges[e] = Edge(i, j, Zero, Crossing(lab, Fraction(1, 2), _triple((0, 0, 0))))
        above, below = halves[i]
        tri = (above * half, _q(length) * half, below * half)
        # square: bottom, right, top, left; the loop runs left to right
        faces[2 * i] = Face(((i, 1), (cb, 1), (j, -1), (ca, -1)), tri, "", FaceDefect(lab, entry=3, exit=1))
        faces[2 * i + 1] = Face(((ca, 1), (cb, -1)), tri, "", FaceDefect(lab, entry=1, exit=0))
    return verts, edges, faces


def loop_cylinder(loops: Sequence[tuple], region_areas: Sequence, conditions: DefectConditions, *,
                  directions=("in", "in")) -> PlcwComplex:
    """Cylinder with parallel defect loops around its core.

    ``loops`` lists ``(label, length)`` from the first circle to the second;
    ``region_areas`` has ``len(loops)+1`` entries, region 0 touching the first
    circle.  Each loop has its left (t) side towards the second circle.
    Intermediate regions are split evenly between the two adjacent strips."""
    n = len(loops)
    if len(region_areas) != n + 1:
        raise BordismError("need one region area per strip")
    if n == 0:
        raise BordismError("use normal_form for a cylinder without loops")
    ra = [_q(a) for a in region_areas]
    halves = []
    for i in range(n):
        below = ra[i] if i == 0 else ra[i] / 2
        above = ra[i + 1] if i == n - 1 else ra[i + 1] / 2
        halves.append((above, below))
    verts, edges, faces = _loop_strips(loops, halves, conditions, closed=False)
    d0, d1 = directions
    circles = (Circle(d0, (0,), 0), Circle(d1, (n,), 1 if d1 == d0 else 0))
    return require_valid(make_complex(verts, edges, faces, circles, conditions))


def loop_torus(loops: Sequence[tuple], region_areas: Sequence, conditions: DefectConditions) -> PlcwComplex:
    """Torus with parallel non-contractible defect loops; region i lies above loop i."""
    n = len(loops)
    if len(region_areas) != n or n == 0:
        raise BordismError("a torus with n >= 1 loops has n regions")
    ra = [_q(a) for a in region_areas]
    halves = [(ra[i] / 2, ra[(i - 1) % n] / 2) for i in range(n)]
    verts, edges, faces = _loop_strips(loops, halves, conditions, closed=True)
    return require_valid(make_complex(verts, edges, faces, (), conditions))


# relabelling, disjoint union, gluing ------------------------------------------

def _shift(c: PlcwComplex, dv: int, de: int, df: int) -> PlcwComplex:
    verts = {v + dv: a for v, a in c.vertices.items()}
    edges = {e + de: replace(ed, tail=ed.tail + dv, head=ed.head + dv) for e, ed in c.edges.items()}
    faces = {f + df: replace(fc, sides=tuple((e + de, s) for e, s in fc.sides)) for f, fc in c.faces.items()}
    circles = tuple(replace(ci, edges=tuple(e + de for e in ci.edges)) for ci in c.circles)
    return PlcwComplex(verts, edges, faces, circles, c.conditions)


def _merge_conditions(a, b):
    if a is None:
        return b
    if b is None or a == b:
        return a
    lines = {k: (a.target[k], a.source[k]) for k in a.defects}
    for k in b.defects:
        if k in lines and lines[k] != (b.target[k], b.source[k]):
            raise BordismError(f"defect label {k!r} has different phases in the two complexes")
        lines[k] = (b.target[k], b.source[k])
    return DefectConditions.from_lines(lines, a.phases | b.phases)


def _offsets(x: PlcwComplex):
    dv = max(x.vertices, default=-1) + 1
    de = max(x.edges, default=-1) + 1
    df = max(x.faces, default=-1) + 1
    return dv, de, df


def disjoint_union(x: PlcwComplex, y: PlcwComplex) -> PlcwComplex:
    ys = _shift(y, *_offsets(x))
    nin = len(x.inputs())
    nout = len(x.outputs())
    circles = list(x.circles)
    for ci in ys.circles:
        circles.append(replace(ci, index=ci.index + (nin if ci.direction == "in" else nout)))
    return make_complex({**x.vertices, **ys.vertices}, {**x.edges, **ys.edges}, {**x.faces, **ys.faces},
                        circles, _merge_conditions(x.conditions, y.conditions))


def glue(x: PlcwComplex, y: PlcwComplex, matching: Sequence[tuple[int, int]] | None = None) -> PlcwComplex:
    """Glue outgoing circles of ``x`` to ingoing circles of ``y``.

    ``matching`` lists ``(output index of x, input index of y)``; by default
    all outputs of x are glued to all inputs of y in order.  Remaining inputs
    are ordered x-first, remaining outputs y-first."""
    xo = x.outputs()
    yi = y.inputs()
    if matching is None:
        if len(xo) != len(yi):
            raise BordismError(f"cannot glue {len(xo)} outgoing to {len(yi)} ingoing circles")
        matching = [(k, k) for k in range(len(xo))]
    ys = _shift(y, *_offsets(x))
    yi = ys.inputs()
    xo_by = {c.index: c for c in xo}
    yi_by = {c.index: c for c in yi}
    vmap: dict = {}
    emap: dict = {}
    flip: set = set()
    for a, b in matching:
        cx, cy = xo_by[a], yi_by[b]
        lx, ly = defect_list(x, cx), defect_list(ys, cy)
        if len(lx) != len(ly) or lx != ly:
            for k in range(max(len(lx), len(ly))):
                px = lx[k] if k < len(lx) else None
                py = ly[k] if k < len(ly) else None
                if px != py:
                    raise BordismError(f"defect mismatch at point {k}: {px} vs {py}")
        sx, sy = x.side_index(), ys.side_index()
        for ex, ey in zip(cx.edges, cy.edges):
            (_, _, sgx), = sx[ex]
            (_, _, sgy), = sy[ey]
            edx, edy = x.edges[ex], ys.edges[ey]
            same = sgx == -sgy
            emap[ey] = ex
            if not same:
                flip.add(ey)
            ys_tail, ys_head = (edy.tail, edy.head) if same else (edy.head, edy.tail)
            for u, w in ((ys_tail, edx.tail), (ys_head, edx.head)):
                if vmap.get(u, w) != w:
                    raise BordismError("inconsistent vertex identification while gluing")
                vmap[u] = w
    verts = dict(x.vertices)
    for v, a in ys.vertices.items():
        if v in vmap:
            verts[vmap[v]] = verts[vmap[v]] + a
        else:
            verts[v] = a
    edges = dict(x.edges)
    for e, ed in ys.edges.items():
        if e in emap:
            tgt = emap[e]
            old = edges[tgt]
            if ed.crossing is not None:
                cr = ed.crossing
                pos = cr.position if e not in flip else 1 - cr.position
                area = cr.area
                edges[tgt] = replace(old, crossing=replace(old.crossing, position=pos, area=area))
            else:
                edges[tgt] = replace(old, area=old.area + ed.area)
        else:
            edges[e] = replace(ed, tail=vmap.get(ed.tail, ed.tail), head=vmap.get(ed.head, ed.head))
    faces = dict(x.faces)
    for f, fc in ys.faces.items():
        sides = []
        for e, s in fc.sides:
            if e in emap:
                sides.append((emap[e], -s if e in flip else s))
            else:
                sides.append((e, s))
        faces[f] = replace(fc, sides=tuple(sides))
    used_x = {a for a, _ in matching}
    used_y = {b for _, b in matching}
    ins = [c for c in x.inputs()] + [c for c in yi if c.index not in used_y]
    outs = [c for c in ys.outputs()] + [c for c in xo if c.index not in used_x]
    circles = [replace(c, index=k) for k, c in enumerate(ins)] + [replace(c, index=k) for k, c in enumerate(outs)]
    return make_complex(verts, edges, faces, circles, _merge_conditions(x.conditions, y.conditions))


# elementary moves --------------------------------------------------------------

MOVE_KINDS = ("add_edge", "remove_edge", "add_bivalent_vertex", "remove_bivalent_vertex",
              "defect_split_edge", "defect_remove_edge", "defect_remove_plain_edge")


@dataclass(frozen=True)
class ElementaryMove:
    kind: str
    target: tuple
    data: tuple = ()


def _new_id(d: dict) -> int:
    return max(d, default=-1) + 1


def _rotate(sides, k):
    return sides[k:] + sides[:k]


def _remove_edge(c: PlcwComplex, e, mode: str) -> PlcwComplex:
    if e not in c.edges:
        raise MoveError(f"no edge {e}")
    ss = c.sides_of(e)
    if len(ss) != 2:
        raise MoveError(f"edge {e} is a boundary edge")
    (f1, i1, _), (f2, i2, _) = ss
    if f1 == f2:
        raise MoveError(f"edge {e} has the same face on both sides")
    A, B = c.faces[f1], c.faces[f2]
    ed = c.edges[e]
    crossed = ed.crossing is not None
    if mode == "plain" and (crossed or A.defect or B.defect):
        raise MoveError("remove_edge needs an uncrossed edge between two faces without defects")
    if mode == "crossed" and not crossed:
        raise MoveError("defect_remove_edge needs a crossed edge")
    if mode == "mixed" and (crossed or not ((A.defect is None) ^ (B.defect is None))):
        raise MoveError("defect_remove_plain_edge needs an uncrossed edge between a defect face and a plain face")
    n1, n2 = len(A.sides), len(B.sides)
    if n1 + n2 - 2 == 0:
        raise MoveError("removing the edge would leave a face without sides")
    # new side list: A after e, then B after e
    sa = [k % n1 for k in range(i1 + 1, i1 + n1)]
    sb = [k % n2 for k in range(i2 + 1, i2 + n2)]
    sides = tuple(A.sides[k] for k in sa) + tuple(B.sides[k] for k in sb)
    pos_a = {k: p for p, k in enumerate(sa)}
    pos_b = {k: len(sa) + p for p, k in enumerate(sb)}
    if mode == "plain":
        face = Face(sides, A.area + B.area + ed.area, A.phase)
    elif mode == "mixed":
        D, P, pos_d, k_d = (A, B, pos_a, i1) if A.defect else (B, A, pos_b, i2)
        kind = face_side_kinds(D)[k_d]
        extra = P.area + ed.area
        at, l, as_ = D.area
        if kind == "t":
            at += extra
        else:
            as_ += extra
        fd = FaceDefect(D.defect.label, pos_d[D.defect.entry], pos_d[D.defect.exit])
        face = Face(sides, (at, l, as_), "", fd)
    else:
        # A and B both defect faces; e is exit of one and entry of the other
        if A.defect is None or B.defect is None:
            raise MoveError("crossed edge without defect faces")
        if i1 == A.defect.exit and i2 == B.defect.entry:
            X, Y, px, py = A, B, pos_a, pos_b
        elif i2 == B.defect.exit and i1 == A.defect.entry:
            X, Y, px, py = B, A, pos_b, pos_a
        else:
            raise MoveError("crossed edge is not an exit/entry pair")
        cr = ed.crossing
        area = tuple(X.area[k] + Y.area[k] + cr.area[k] for k in range(3))
        fd = FaceDefect(X.defect.label, px[X.defect.entry], py[Y.defect.exit])
        face = Face(sides, area, "", fd)
    faces = dict(c.faces)
    del faces[f1], faces[f2]
    faces[min(f1, f2)] = face
    edges = dict(c.edges)
    del edges[e]
    out = make_complex(c.vertices, edges, faces, c.circles, c.conditions)
    for v in {ed.tail, ed.head}:
        if out.valence(v) == 0:
            raise MoveError(f"removing edge {e} isolates vertex {v}")
    return out


def _add_edge(c: PlcwComplex, f, i: int, j: int) -> PlcwComplex:
    if f not in c.faces:
        raise MoveError(f"no face {f}")
    F = c.faces[f]
    n = len(F.sides)
    i, j = i % n, j % n
    if i == j:
        raise MoveError("add_edge needs two distinct corners")
    if i > j:
        i, j = j, i
    u = c.side_start(F.sides[i])
    w = c.side_start(F.sides[j])
    e = _new_id(c.edges)
    s1 = F.sides[i:j] + ((e, -1),)
    s2 = F.sides[j:] + F.sides[:i] + ((e, 1),)
    pos1 = {k: k - i for k in range(i, j)}
    pos2 = {k: (k - j) % n for k in list(range(j, n)) + list(range(0, i))}
    half = Fraction(1, 2)
    f2 = _new_id(c.faces)
    edges = dict(c.edges)
    faces = dict(c.faces)
    if F.defect is None:
        edges[e] = Edge(u, w, Zero)
        faces[f] = Face(s1, F.area * half, F.phase)
        faces[f2] = Face(s2, F.area * half, F.phase)
    else:
        d = F.defect
        in1 = {d.entry in pos1, d.exit in pos1}
        at, l, as_ = F.area
        if in1 == {True} or in1 == {False}:
            # the new edge does not cross the defect
            kinds = face_side_kinds(F)
            other = [k for k in (pos1 if in1 == {False} else pos2)]
            side_kind = {kinds[k] for k in other}
            if side_kind != {"t"} and side_kind != {"s"}:
                raise MoveError("new edge would separate the defect from its sides")
            plain_phase = side_phase(c, F, other[0])
            edges[e] = Edge(u, w, Zero)
            if in1 == {True}:
                Dside, Pside, pd = s1, s2, pos1
            else:
                Dside, Pside, pd = s2, s1, pos2
            if side_kind == {"t"}:
                new_area = (at * half, l, as_)
                plain_area = at * half
            else:
                new_area = (at, l, as_ * half)
                plain_area = as_ * half
            faces[f] = Face(Dside, new_area, "", FaceDefect(d.label, pd[d.entry], pd[d.exit]))
            faces[f2] = Face(Pside, plain_area, plain_phase)
        else:
            edges[e] = Edge(u, w, Zero, Crossing(d.label, Fraction(1, 2), (Zero, Zero, Zero)))
            tri = (at * half, l * half, as_ * half)
            # face containing the entry leaves through e; the other enters through e
            if d.entry in pos1:
                fd1 = FaceDefect(d.label, pos1[d.entry], len(s1) - 1)
                fd2 = FaceDefect(d.label, len(s2) - 1, pos2[d.exit])
            else:
                fd1 = FaceDefect(d.label, len(s1) - 1, pos1[d.exit])
                fd2 = FaceDefect(d.label, pos2[d.entry], len(s2) - 1)
            faces[f] = Face(s1, tri, "", fd1)
            faces[f2] = Face(s2, tri, "", fd2)
    return make_complex(c.vertices, edges, faces, c.circles, c.conditions)


def _add_bivalent_vertex(c: PlcwComplex, e, crossed_part: int = 0) -> PlcwComplex:
    if e not in c.edges:
        raise MoveError(f"no edge {e}")
    if e in c.circle_of_edge() and c.edges[e].crossing is None:
        raise MoveError("a boundary circle without defect points keeps exactly one edge")
    if e in c.circle_of_edge():
        raise MoveError("boundary edges are not subdivided")
    ed = c.edges[e]
    v = _new_id(c.vertices)
    e1, e2 = e, _new_id(c.edges)
    half = Fraction(1, 2)
    edges = dict(c.edges)
    if ed.crossing is None:
        edges[e1] = Edge(ed.tail, v, ed.area * half)
        edges[e2] = Edge(v, ed.head, ed.area * half)
    else:
        cr = ed.crossing
        tv, sv = crossed_edge_vertices(c, e)
        # crossed_part 0 keeps the crossing on the tail half
        if crossed_part == 0:
            edges[e1] = Edge(ed.tail, v, Zero, replace(cr, position=Fraction(1, 2)))
            edges[e2] = Edge(v, ed.head, Zero)
        else:
            edges[e1] = Edge(ed.tail, v, Zero)
            edges[e2] = Edge(v, ed.head, Zero, replace(cr, position=Fraction(1, 2)))
    faces = dict(c.faces)
    for fid, F in c.faces.items():
        if all(x != e for x, _ in F.sides):
            continue
        new_sides = []
        remap = {}
        for k, (x, s) in enumerate(F.sides):
            remap[k] = len(new_sides)
            if x != e:
                new_sides.append((x, s))
            elif s > 0:
                new_sides += [(e1, 1), (e2, 1)]
            else:
                new_sides += [(e2, -1), (e1, -1)]
        d = F.defect
        if d is not None:
            def _pos(k):
                x, s = F.sides[k]
                base = remap[k]
                if x != e:
                    return base
                keep_first = (crossed_part == 0) == (s > 0)
                return base if keep_first else base + 1
            d = FaceDefect(d.label, _pos(d.entry), _pos(d.exit))
            if ed.crossing is None:
                pass
        faces[fid] = replace(F, sides=tuple(new_sides), defect=d)
    verts = dict(c.vertices)
    verts[v] = Zero
    out = make_complex(verts, edges, faces, c.circles, c.conditions)
    return out


def _remove_bivalent_vertex(c: PlcwComplex, v) -> PlcwComplex:
    if v not in c.vertices:
        raise MoveError(f"no vertex {v}")
    inc = [(e, ed) for e, ed in c.edges.items() if ed.tail == v or ed.head == v]
    if len(inc) != 2 or any(ed.tail == ed.head for _, ed in inc):
        raise MoveError(f"vertex {v} is not bivalent with two distinct edges")
    oncirc = c.circle_of_edge()
    if any(e in oncirc for e, _ in inc):
        raise MoveError(f"vertex {v} lies on a boundary circle")
    (ea, eda), (eb, edb) = inc
    if eda.crossing is not None and edb.crossing is not None:
        raise MoveError("merging would produce an edge crossed twice")
    # orient: e1 ends at v, e2 starts at v
    s1 = 1 if eda.head == v else -1
    s2 = 1 if edb.tail == v else -1
    u = eda.tail if s1 > 0 else eda.head
    w = edb.head if s2 > 0 else edb.tail
    if u == v or w == v:
        raise MoveError("degenerate bivalent vertex")
    keep = min(ea, eb)
    area = Zero
    crossing = None
    extra = c.vertices[v]
    for ed in (eda, edb):
        if ed.crossing is None:
            extra += ed.area
        else:
            crossing = ed.crossing
    edges = dict(c.edges)
    del edges[ea], edges[eb]
    if crossing is None:
        edges[keep] = Edge(u, w, extra)
        newcross = None
    else:
        # uncrossed piece and v lie on one side of the defect
        tv, sv = crossed_edge_vertices(c, ea if eda.crossing is not None else eb)
        at, l, as_ = crossing.area
        if tv == v:
            at += extra
        else:
            as_ += extra
        newcross = replace(crossing, area=(at, l, as_))
        edges[keep] = Edge(u, w, Zero, newcross)
    faces = dict(c.faces)
    for fid, F in c.faces.items():
        n = len(F.sides)
        if all(x not in (ea, eb) for x, _ in F.sides):
            continue
        # sides along the orientation u -> v -> w are (ea,s1),(eb,s2); reversed: (eb,-s2),(ea,-s1)
        fwd = ((ea, s1), (eb, s2))
        bwd = ((eb, -s2), (ea, -s1))
        new = []
        remap = {}
        k = 0
        # rotate so that no pair straddles the end of the list
        start = 0
        for t in range(n):
            if (F.sides[t], F.sides[(t + 1) % n]) in (fwd, bwd):
                start = t
                break
        rot = list(range(start, n)) + list(range(start))
        while k < n:
            cur = F.sides[rot[k]]
            nxt = F.sides[rot[(k + 1) % n]] if n > 1 else None
            if k + 1 < n and (cur, nxt) == fwd:
                remap[rot[k]] = remap[rot[k + 1]] = len(new)
                new.append((keep, 1))
                k += 2
            elif k + 1 < n and (cur, nxt) == bwd:
                remap[rot[k]] = remap[rot[k + 1]] = len(new)
                new.append((keep, -1))
                k += 2
            elif cur[0] in (ea, eb):
                raise MoveError("bivalent vertex sides are not consecutive")
            else:
                remap[rot[k]] = len(new)
                new.append(cur)
                k += 1
        d = F.defect
        if d is not None:
            d = FaceDefect(d.label, remap[d.entry], remap[d.exit])
        faces[fid] = replace(F, sides=tuple(new), defect=d)
    verts = dict(c.vertices)
    del verts[v]
    return make_complex(verts, edges, faces, c.circles, c.conditions)


def apply_move(c: PlcwComplex, m: ElementaryMove) -> PlcwComplex:
    k = m.kind
    if k == "remove_edge":
        out = _remove_edge(c, m.target[0], "plain")
    elif k == "defect_remove_edge":
        out = _remove_edge(c, m.target[0], "crossed")
    elif k == "defect_remove_plain_edge":
        out = _remove_edge(c, m.target[0], "mixed")
    elif k == "add_edge":
        f, i, j = m.target
        out = _add_edge(c, f, i, j)
    elif k == "add_bivalent_vertex":
        if c.edges.get(m.target[0]) is not None and c.edges[m.target[0]].crossing is not None:
            raise MoveError("use defect_split_edge on a crossed edge")
        out = _add_bivalent_vertex(c, m.target[0])
    elif k == "defect_split_edge":
        e = m.target[0]
        if e not in c.edges or c.edges[e].crossing is None:
            raise MoveError("defect_split_edge needs a crossed edge")
        part = m.data[0] if m.data else 0
        out = _add_bivalent_vertex(c, e, part)
    elif k == "remove_bivalent_vertex":
        out = _remove_bivalent_vertex(c, m.target[0])
    else:
        raise MoveError(f"unknown move kind {k!r}")
    rep = validate(out)
    if not rep.ok:
        raise MoveError(f"{k} produced an invalid complex:\n{rep}")
    return out


def applicable_moves(c: PlcwComplex) -> list[ElementaryMove]:
    """All elementary moves whose combinatorial preconditions hold."""
    moves = []
    sidx = c.side_index()
    circ = c.circle_of_edge()
    for e, ed in c.edges.items():
        ss = sidx.get(e, [])
        if len(ss) == 2 and ss[0][0] != ss[1][0]:
            A, B = c.faces[ss[0][0]], c.faces[ss[1][0]]
            if ed.crossing is not None:
                moves.append(ElementaryMove("defect_remove_edge", (e,)))
            elif A.defect is None and B.defect is None:
                moves.append(ElementaryMove("remove_edge", (e,)))
            elif (A.defect is None) ^ (B.defect is None):
                moves.append(ElementaryMove("defect_remove_plain_edge", (e,)))
        if e not in circ:
            if ed.crossing is None:
                moves.append(ElementaryMove("add_bivalent_vertex", (e,)))
            else:
                moves.append(ElementaryMove("defect_split_edge", (e,), (0,)))
                moves.append(ElementaryMove("defect_split_edge", (e,), (1,)))
    for v in c.vertices:
        inc = [ed for ed in c.edges.values() if ed.tail == v or ed.head == v]
        if len(inc) == 2 and all(ed.tail != ed.head for ed in inc):
            moves.append(ElementaryMove("remove_bivalent_vertex", (v,)))
    for f, F in c.faces.items():
        n = len(F.sides)
        for i in range(n):
            for j in range(i + 1, n):
                moves.append(ElementaryMove("add_edge", (f, i, j)))
    return moves


def random_move(c: PlcwComplex, rng, kinds: Sequence[str] | None = None, max_faces: int = 8):
    """A random applicable move (validated), or ``None``."""
    cand = applicable_moves(c)
    if kinds is not None:
        cand = [m for m in cand if m.kind in kinds]
    if len(c.faces) >= max_faces:
        cand = [m for m in cand if m.kind != "add_edge"] or cand
    if len(c.vertices) >= 2 * max_faces:
        grow = ("add_bivalent_vertex", "defect_split_edge")
        cand = [m for m in cand if m.kind not in grow] or cand
    grouped: dict = {}
    for m in cand:
        grouped.setdefault(m.kind, []).append(m)
    kinds_avail = sorted(grouped)
    for _ in range(20):
        if not kinds_avail:
            return None
        kind = kinds_avail[int(rng.integers(len(kinds_avail)))]
        opts = grouped[kind]
        m = opts[int(rng.integers(len(opts)))]
        try:
            out = apply_move(c, m)
        except MoveError:
            continue
        return m, out
    return None


def invariants(c: PlcwComplex) -> dict:
    return {
        "euler": c.euler,
        "circles": (len(c.inputs()), len(c.outputs())),
        "areas": tuple(area_components(c)),
        "lengths": tuple(defect_line_lengths(c)),
        "defect_lists": tuple(defect_list(c, ci) for ci in c.inputs() + c.outputs()),
    }


# document parsing ----------------------------------------------------------------

class ParseError(BordismError):
    pass


def _num(doc, path, *, allow_zero=True):
    if not isinstance(doc, (int, float, str)) or isinstance(doc, bool):
        raise ParseError(f"{path}: expected a number")
    try:
        v = _q(doc)
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"{path}: {exc}") from None
    if v < 0:
        raise ParseError(f"{path}: negative value {doc}")
    if not allow_zero and v == 0:
        raise ParseError(f"{path}: must be positive")
    return v


def parse_bordism(doc) -> PlcwComplex:
    """Build a complex from a document (dict or JSON text)."""
    if isinstance(doc, str):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise ParseError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ParseError("document must be an object")
    conditions = None
    if "defects" in doc and isinstance(doc["defects"], dict) and "lines" in doc["defects"]:
        lines = doc["defects"]["lines"]
        conditions = DefectConditions.from_lines({k: (v["t"], v["s"]) for k, v in lines.items()})
    if "surface" in doc:
        s = doc["surface"]
        if not isinstance(s, dict):
            raise ParseError("surface: expected an object")
        g = s.get("genus", 0)
        if not isinstance(g, int) or g < 0:
            raise ParseError("surface.genus: expected a non-negative integer")
        bd = s.get("boundaries", {})
        b_in, b_out = bd.get("in", 0), bd.get("out", 0)
        for nm, v in (("in", b_in), ("out", b_out)):
            if not isinstance(v, int) or v < 0:
                raise ParseError(f"surface.boundaries.{nm}: expected a non-negative integer")
        area = _num(s.get("area", 1), "surface.area")
        loops = doc.get("defects", {}).get("loops") if isinstance(doc.get("defects"), dict) else None
        if loops:
            if conditions is None:
                raise ParseError("defects.loops needs defects.lines")
            ls = [(lp["label"], _num(lp.get("length", 0), f"defects.loops[{k}].length")) for k, lp in enumerate(loops)]
            regions = [_num(r, f"defects.regions[{k}]") for k, r in enumerate(doc["defects"].get("regions", []))]
            if g == 1 and b_in + b_out == 0:
                return loop_torus(ls, regions, conditions)
            if g == 0 and b_in + b_out == 2:
                dirs = tuple(["in"] * b_in + ["out"] * b_out)
                return loop_cylinder(ls, regions, conditions, directions=dirs)
            raise ParseError("defects.loops supported on tori and cylinders")
        return require_valid(normal_form(g, b_in, b_out, area, s.get("phase", "A")))
    if "plcw" in doc:
        p = doc["plcw"]
        try:
            verts = {int(v["id"]): _num(v.get("area", 0), f"plcw.vertices[{k}].area") for k, v in enumerate(p["vertices"])}
            edges = {}
            for k, e in enumerate(p["edges"]):
                cross = None
                if "crossing" in e:
                    cr = e["crossing"]
                    cross = Crossing(cr["label"], _q(cr.get("position", "1/2")),
                                     tuple(_num(x, f"plcw.edges[{k}].crossing.area") for x in cr.get("area", (0, 0, 0))))
                edges[int(e["id"])] = Edge(int(e["tail"]), int(e["head"]), _num(e.get("area", 0), f"plcw.edges[{k}].area"), cross)
            faces = {}
            for k, f in enumerate(p["faces"]):
                sides = tuple((int(x), int(s)) for x, s in f["sides"])
                if "defect" in f:
                    dd = f["defect"]
                    area = tuple(_num(x, f"plcw.faces[{k}].area") for x in f["area"])
                    faces[int(f["id"])] = Face(sides, area, "", FaceDefect(dd["label"], int(dd["entry"]), int(dd["exit"])))
                else:
                    faces[int(f["id"])] = Face(sides, _num(f.get("area", 0), f"plcw.faces[{k}].area"), f.get("phase", "A"))
            circles = [Circle(ci["direction"], tuple(int(x) for x in ci["edges"]), int(ci.get("index", 0)))
                       for ci in p.get("circles", [])]
        except (KeyError, TypeError) as exc:
            raise ParseError(f"plcw: missing or malformed field {exc}") from None
        c = make_complex(verts, edges, faces, circles, conditions)
        rep = validate(c)
        if not rep.ok:
            raise ParseError("plcw: validation failed:\n" + str(rep))
        return c
    raise ParseError("document needs a 'surface' or 'plcw' stanza")


def to_document(c: PlcwComplex) -> dict:
    """Inverse of the explicit-cell branch of :func:`parse_bordism`."""
    def num(x):
        return str(x)
    doc = {"plcw": {
        "vertices": [{"id": v, "area": num(a)} for v, a in c.vertices.items()],
        "edges": [],
        "faces": [],
        "circles": [{"direction": ci.direction, "edges": list(ci.edges), "index": ci.index} for ci in c.circles],
    }}
    for e, ed in c.edges.items():
        item = {"id": e, "tail": ed.tail, "head": ed.head, "area": num(ed.area)}
        if ed.crossing is not None:
            item["crossing"] = {"label": ed.crossing.label, "position": num(ed.crossing.position),
                                "area": [num(x) for x in ed.crossing.area]}
        doc["plcw"]["edges"].append(item)
    for f, F in c.faces.items():
        item = {"id": f, "sides": [list(s) for s in F.sides]}
        if F.defect is not None:
            item["defect"] = {"label": F.defect.label, "entry": F.defect.entry, "exit": F.defect.exit}
            item["area"] = [num(x) for x in F.area]
        else:
            item["area"] = num(F.area)
            item["phase"] = F.phase
        doc["plcw"]["faces"].append(item)
    if c.conditions is not None:
        doc["defects"] = {"lines": {k: {"t": c.conditions.target[k], "s": c.conditions.source[k]}
                                    for k in sorted(c.conditions.defects)}}
    return doc
