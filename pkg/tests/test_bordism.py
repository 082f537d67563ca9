import json
from dataclasses import replace
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from artifact import bordism as bd
from artifact import state_sum as ss

from conftest import group


def wilson_conditions():
    return ss.gauge_defect_data(group("cyclic:3"), None, {"V": ("wilson", 1), "W": ("wilson", 2)}).conditions


def shape(c):
    return (len(c.vertices), len(c.edges), sorted(len(f.sides) for f in c.faces.values()),
            bd.invariants(c))


def crossed_faces(c):
    return sum(f.defect is not None for f in c.faces.values())


class TestNormalForm:
    def test_cylinder(self):
        c = bd.normal_form(0, 1, 1, 1)
        assert c.euler == 0 and (len(c.inputs()), len(c.outputs())) == (1, 1)
        assert bd.validate(c).ok

    def test_torus(self):
        c = bd.normal_form(1, 0, 0, 2)
        assert c.euler == 0 and len(c.faces) == 1 and len(c.faces[0].sides) == 4

    def test_single_eleven_gon(self):
        c = bd.normal_form(2, 0, 1, 1)
        assert len(c.faces) == 1 and len(c.faces[0].sides) == 11
        assert c.euler == -3

    def test_sphere(self):
        c = bd.normal_form(0, 0, 0, 1)
        assert c.euler == 2 and bd.validate(c).ok

    @pytest.mark.parametrize("g,b_in,b_out", [(g, i, o) for g in range(4) for i in range(4) for o in range(4 - i)])
    def test_valid_grid(self, g, b_in, b_out):
        c = bd.normal_form(g, b_in, b_out, Fraction(3, 2))
        assert bd.validate(c).ok
        assert c.euler == 2 - 2 * g - b_in - b_out
        assert c.total_area() == Fraction(3, 2)

    def test_negative_counts(self):
        with pytest.raises(bd.BordismError):
            bd.normal_form(-1, 0, 0)


class TestValidate:
    def test_zero_area_cylinder_allowed(self):
        assert bd.validate(bd.normal_form(0, 1, 1, 0)).ok

    def test_zero_area_torus_refused(self):
        t = bd.normal_form(1, 0, 0, 1)
        zero = {("F", 0): 0, **{("E", e): 0 for e in t.edges}, **{("V", v): 0 for v in t.vertices}}
        rep = bd.validate(bd.set_areas(t, zero))
        assert not rep.ok
        assert any("zero area" in e for e in rep.errors)

    def test_defect_through_vertex(self):
        c = bd.defect_cylinder([("V", True)], wilson_conditions())
        e = c.edges[0]
        bad = replace(e, crossing=replace(e.crossing, position=Fraction(0)))
        c2 = bd.make_complex(c.vertices, {**c.edges, 0: bad}, c.faces, c.circles, c.conditions)
        rep = bd.validate(c2)
        assert not rep.ok and any("vertex" in x for x in rep.errors)

    def test_require_valid_raises(self):
        t = bd.normal_form(1, 0, 0, 1)
        with pytest.raises(bd.BordismError):
            bd.require_valid(bd.set_areas(t, {("F", 0): 0, **{("E", e): 0 for e in t.edges},
                                              **{("V", v): 0 for v in t.vertices}}))

    def test_loop_torus_needs_area(self):
        with pytest.raises(bd.BordismError):
            bd.loop_torus([("V", 0)], [0], wilson_conditions())


class TestMoves:
    def test_remove_edge_counts(self):
        c = bd.apply_move(bd.normal_form(1, 0, 0, 1), bd.ElementaryMove("add_edge", (0, 0, 2)))
        assert len(c.faces) == 2
        e = next(m for m in bd.applicable_moves(c) if m.kind == "remove_edge").target[0]
        out = bd.apply_move(c, bd.ElementaryMove("remove_edge", (e,)))
        assert len(out.faces) == len(c.faces) - 1
        assert len(out.edges) == len(c.edges) - 1

    def test_add_bivalent_vertex_counts(self):
        c = bd.normal_form(1, 0, 0, 1)
        out = bd.apply_move(c, bd.ElementaryMove("add_bivalent_vertex", (0,)))
        assert len(out.vertices) == len(c.vertices) + 1
        assert len(out.edges) == len(c.edges) + 1

    def test_defect_remove_edge(self):
        c = bd.loop_cylinder([("V", Fraction(1, 5))], [1, 1], wilson_conditions())
        # a loop through two faces cannot lose an edge; split the square first
        c = bd.apply_move(c, bd.ElementaryMove("add_edge", (0, 0, 2)))
        out = bd.apply_move(c, bd.ElementaryMove("defect_remove_edge", (2,)))
        assert crossed_faces(c) == 3
        assert crossed_faces(out) == crossed_faces(c) - 1
        assert bd.invariants(out) == bd.invariants(c)

    def test_inapplicable(self):
        c = bd.normal_form(1, 0, 0, 1)
        with pytest.raises(bd.MoveError):
            bd.apply_move(c, bd.ElementaryMove("remove_bivalent_vertex", (0,)))
        with pytest.raises(bd.MoveError):
            bd.apply_move(c, bd.ElementaryMove("defect_split_edge", (0,)))
        with pytest.raises(bd.MoveError):
            bd.apply_move(c, bd.ElementaryMove("teleport", ()))

    @given(seed=st.integers(0, 2 ** 32 - 1), which=st.integers(0, 4), steps=st.integers(1, 6))
    def test_invariants_preserved(self, seed, which, steps):
        cond = wilson_conditions()
        seeds = [
            bd.normal_form(0, 1, 1, 1),
            bd.normal_form(1, 1, 0, Fraction(2, 3)),
            bd.loop_torus([("V", Fraction(1, 3)), ("W", 1)], [1, Fraction(1, 2)], cond),
            bd.loop_cylinder([("V", Fraction(1, 5))], [Fraction(2, 5), 1], cond),
            bd.defect_cylinder([("V", True), ("W", False)], cond, face_area=(1, Fraction(1, 4), 2)),
        ]
        c = seeds[which]
        ref = bd.invariants(c)
        rng = np.random.default_rng(seed)
        for _ in range(steps):
            r = bd.random_move(c, rng, max_faces=6)
            if r is None:
                break
            c = r[1]
            assert bd.invariants(c) == ref
            assert bd.validate(c).ok


class TestGlue:
    def test_cylinders(self):
        c = bd.glue(bd.cylinder(Fraction(1, 3)), bd.cylinder(Fraction(1, 2)))
        inv = bd.invariants(c)
        assert inv["euler"] == 0 and inv["circles"] == (1, 1)
        assert inv["areas"] == (("A", Fraction(5, 6)),)

    def test_cap_and_cylinder(self):
        c = bd.glue(bd.disc("out", 1), bd.cylinder(2))
        assert bd.invariants(c) == bd.invariants(bd.disc("out", 3))

    def test_pants_after_cap_and_cylinder(self):
        x = bd.disjoint_union(bd.disc("out", 1), bd.cylinder(1))
        c = bd.glue(x, bd.normal_form(0, 2, 1, 1))
        inv = bd.invariants(c)
        assert inv["euler"] == 0 and inv["circles"] == (1, 1)
        assert inv["areas"] == (("A", Fraction(3)),)
        assert bd.validate(c).ok

    def test_defect_mismatch(self):
        cond = wilson_conditions()
        x = bd.defect_cylinder([("V", True)], cond)
        y = bd.defect_cylinder([("W", True)], cond)
        with pytest.raises(bd.BordismError, match="mismatch"):
            bd.glue(x, y)

    def test_defect_lengths_add(self):
        cond = wilson_conditions()
        x = bd.defect_cylinder([("V", True)], cond, face_area=(1, Fraction(1, 3), 1))
        y = bd.defect_cylinder([("V", True)], cond, face_area=(1, Fraction(1, 2), 1))
        c = bd.glue(x, y)
        assert bd.invariants(c)["lengths"] == (("V", Fraction(5, 6)),)

    def test_count_mismatch(self):
        with pytest.raises(bd.BordismError):
            bd.glue(bd.cylinder(1), bd.normal_form(0, 2, 1, 1))

    @given(st.lists(st.fractions(Fraction(1, 10), 3), min_size=3, max_size=3))
    def test_associative(self, a):
        x, y, z = bd.cylinder(a[0]), bd.normal_form(0, 1, 2, a[1]), bd.normal_form(1, 2, 1, a[2])
        left = bd.glue(bd.glue(x, y), z)
        right = bd.glue(x, bd.glue(y, z))
        assert shape(left) == shape(right)


class TestParse:
    def test_surface_stanza(self):
        c = bd.parse_bordism({"surface": {"genus": 1, "area": 2.0}})
        assert c.euler == 0 and not c.circles and c.total_area() == 2

    def test_explicit_cells_round_trip(self):
        c = bd.cylinder(Fraction(3, 4))
        doc = json.loads(json.dumps(bd.to_document(c)))
        back = bd.parse_bordism(doc)
        assert back == c

    def test_defect_round_trip(self):
        c = bd.loop_cylinder([("V", Fraction(1, 5))], [Fraction(2, 5), 1], wilson_conditions())
        assert bd.parse_bordism(json.dumps(bd.to_document(c))) == c

    def test_negative_area(self):
        with pytest.raises(bd.ParseError, match="negative"):
            bd.parse_bordism({"surface": {"genus": 0, "boundaries": {"in": 1, "out": 1}, "area": -1}})

    def test_bad_json_reports_position(self):
        with pytest.raises(bd.ParseError, match="line 1"):
            bd.parse_bordism('{"surface": ')

    def test_missing_stanza(self):
        with pytest.raises(bd.ParseError):
            bd.parse_bordism({"job": {}})

    def test_bad_genus(self):
        with pytest.raises(bd.ParseError):
            bd.parse_bordism({"surface": {"genus": -2}})

    def test_invalid_cells(self):
        doc = bd.to_document(bd.normal_form(1, 0, 0, 1))
        for x in doc["plcw"]["faces"] + doc["plcw"]["edges"] + doc["plcw"]["vertices"]:
            x["area"] = "0"
        with pytest.raises(bd.ParseError, match="validation"):
            bd.parse_bordism(doc)

    def test_loops_on_torus(self):
        doc = {"surface": {"genus": 1}, "defects": {"lines": {"V": {"t": "A", "s": "A"}},
                                                   "loops": [{"label": "V", "length": 0}], "regions": [1]}}
        c = bd.parse_bordism(doc)
        assert c.has_defects and c.euler == 0


class TestAreaDistribution:
    @given(st.fractions(Fraction(1, 100), 5), st.integers(0, 2), st.integers(0, 2), st.integers(0, 2))
    def test_spread_total(self, a, g, bi, bo):
        c = bd.normal_form(g, bi, bo, 1)
        assert bd.spread_area(c, a).total_area() == a
