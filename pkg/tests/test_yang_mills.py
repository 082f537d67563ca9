import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from artifact import rfa
from artifact import yang_mills as ym

from conftest import group

PRESETS = ["su2", "u1", "s3", "su3", "cyclic:2", "cyclic:3", "cyclic:4"]
PRESET_TRUNC = {"su2": 6, "u1": 3}


class TestTables:
    @pytest.mark.parametrize("name", PRESETS)
    def test_invariants(self, name):
        assert ym.check_table(group(name), PRESET_TRUNC.get(name)) == []

    def test_su2_fusion(self):
        G = group("su2")
        assert [G.fusion(2, 2, W) for W in (1, 2, 3)] == [1, 0, 1]

    def test_s3_fusion(self):
        G = group("s3")
        assert [G.dim(U) for U in G.labels()] == [1, 1, 2]
        assert [G.fusion("std", "std", W) for W in G.labels()] == [1, 1, 1]

    def test_z2_group_law(self):
        G = group("cyclic:2")
        for u in range(2):
            for v in range(2):
                assert [G.fusion(u, v, w) for w in range(2)] == [int((u + v) % 2 == w) for w in range(2)]

    def test_z3_inversion(self):
        G = group("cyclic:3")
        f = G.automorphism("inv")
        assert [f(U) for U in G.labels()] == [0, 2, 1]

    def test_sigma_conventions(self):
        assert group("su2").sigma(3) == 2.0
        assert group("u1").sigma(-2) == 4.0
        assert group("s3").sigma("std") == 0.0

    def test_sigma_override(self):
        G = ym.builtin_group("s3", sigma_override={"std": 0.5})
        assert G.sigma("std") == 0.5 and G.sigma("triv") == 0.0

    def test_unknown_group(self):
        with pytest.raises(ym.GroupError):
            ym.builtin_group("e8")

    def test_custom_table(self):
        doc = {"name": "z2t", "irreps": [["e", 1, 0], ["x", 1, 0]],
               "fusion": [["x", "x", "e", 1], ["e", "x", "x", 1]], "trivial": "e",
               "complete": [["x", "x"]]}
        G = ym.parse_group_table(doc)
        assert G.fusion("x", "x", "e") == 1 and G.fusion("x", "e", "x") == 1

    @pytest.mark.parametrize("bad", [
        {"irreps": [["e", 1, 0], ["x", 1, 0]], "fusion": [["x", "x", "x", 2]], "trivial": "e",
         "complete": [["x", "x"]]},
        {"irreps": [["e", 1, 0], ["x", 2, 0]], "dual": {"x": "y"}, "trivial": "e"},
        {"irreps": [["e", 1, 0]], "fusion": [["e"]]},
    ])
    def test_malformed_table(self, bad):
        with pytest.raises(ym.GroupError):
            ym.parse_group_table(bad)

    @given(st.integers(1, 12), st.integers(1, 12))
    def test_su2_dimension_count(self, U, V):
        G = group("su2")
        assert sum(G.fusion(U, V, W) * W for W in range(1, U + V)) == U * V

    @given(st.integers(1, 8), st.integers(1, 8), st.integers(1, 16))
    def test_su2_character_integral(self, U, V, W):
        assert ym.character_integral_multiplicity(U, V, W) == pytest.approx(group("su2").fusion(U, V, W), abs=1e-9)

    def test_truncation_closed_under_duals(self):
        G = ym.parse_group_table({"irreps": [["e", 1, 0], ["x", 1, 0], ["y", 1, 0]],
                                  "dual": {"x": "y", "y": "x"}, "trivial": "e",
                                  "fusion": [["x", "y", "e", 1], ["x", "x", "y", 1], ["y", "y", "x", 1]],
                                  "complete": [["x", "y"], ["x", "x"], ["y", "y"]]})
        assert G.truncation() == ["e", "x", "y"]


class TestBlockModel:
    @pytest.mark.parametrize("name,trunc", [("su2", 4), ("s3", None), ("cyclic:4", None), ("u1", 2)])
    def test_axioms_and_hermitian(self, name, trunc):
        A = group(name).block_rfa(trunc)
        assert rfa.check_axioms(A, [(0.3, 0.4), (0.0, 0.9)], 1e-10).ok
        assert rfa.is_hermitian(A, 0.7)

    @pytest.mark.parametrize("name,trunc", [("su2", 4), ("s3", None), ("u1", 2)])
    def test_centre_blocks(self, name, trunc):
        G = group(name)
        Z, _, _ = rfa.center(G.block_rfa(trunc))
        labs = G.truncation(trunc)
        np.testing.assert_allclose([e.real for e, _ in Z.blocks], [G.dim(U) for U in labs], atol=1e-10)
        np.testing.assert_allclose([s for _, s in Z.blocks], [G.sigma(U) for U in labs], atol=1e-10)


class TestAmplitude:
    def test_zeta_two(self):
        v, tail = ym.partition_function(group("su2"), 10_000, 2, 0.0)
        assert abs(v - math.pi ** 2 / 6) <= 1e-4
        assert tail >= math.pi ** 2 / 6 - v

    def test_s3_genus_two(self):
        for a in (0.0, 0.3, 5.0):
            assert ym.partition_function(group("s3"), None, 2, a)[0] == pytest.approx(2.25, abs=1e-12)

    def test_torus_with_input(self):
        G = group("su2")
        a = 0.6
        amp = ym.amplitude(G, 4, 1, 1, 1, a, in_labels=[3])
        want = np.zeros(4)
        want[2] = math.exp(-a * 2.0) * 3.0 ** -2
        np.testing.assert_allclose(amp.value, want, atol=1e-15)

    def test_mismatched_inputs_give_zero(self):
        amp = ym.amplitude(group("su2"), 4, 0, 2, 0, 0.5, in_labels=[2, 3])
        assert complex(amp.value) == 0

    def test_input_count(self):
        with pytest.raises(ym.GroupError):
            ym.amplitude(group("su2"), 4, 0, 2, 0, 0.5, in_labels=[2])

    @pytest.mark.parametrize("g,b", [(0, 0), (1, 0), (1, 1), (0, 3)])
    def test_divergent_zero_area(self, g, b):
        with pytest.raises(ym.DivergentAmplitude):
            ym.amplitude(group("su2"), 50, g, 0, b, 0.0)

    def test_u1_zero_area_refused(self):
        with pytest.raises(ym.DivergentAmplitude):
            ym.amplitude(group("u1"), 5, 2, 0, 0, 0.0)

    @given(g=st.integers(0, 3), a=st.floats(0.05, 2.0))
    def test_cutting_out_a_disc(self, g, a):
        G = group("su2")
        closed = ym.partition_function(G, 12, g, a)[0]
        vec = ym.amplitude(G, 12, g, 0, 1, a).value
        dims = np.array([G.dim(U) for U in G.truncation(12)], dtype=float)
        assert closed == pytest.approx(float(np.real(vec @ dims)), rel=1e-12)

    @given(g1=st.integers(0, 2), g2=st.integers(0, 2), bo=st.integers(0, 2),
           a=st.floats(0.05, 1.5), b=st.floats(0.05, 1.5))
    def test_gluing(self, g1, g2, bo, a, b):
        G = group("su2")
        N = 8
        labs = G.truncation(N)
        first = ym.amplitude(G, N, g1, 0, 1, a).value
        glued = sum(first[i] * ym.amplitude(G, N, g2, 1, bo, b, in_labels=[U]).value for i, U in enumerate(labs))
        direct = ym.amplitude(G, N, g1 + g2, 0, bo, a + b).value
        np.testing.assert_allclose(glued, direct, atol=1e-9)


class TestWilson:
    def test_trivial_line(self):
        G = group("su2")
        a, b = 0.3, 0.5
        M = ym.wilson_cylinder(G, 4, 1, a, b).to_matrix().reshape(4, 4)
        s = np.array([G.sigma(U) for U in range(1, 5)])
        np.testing.assert_allclose(M, np.diag(np.exp(-(a + b) * s)), atol=1e-15)

    def test_fundamental_line(self):
        G = group("su2")
        M = ym.wilson_cylinder(G, 4, 2, 0.3, 0.5).to_matrix().reshape(4, 4)
        assert M[0, 1] == pytest.approx(math.exp(-0.5 * G.sigma(2)))
        assert M[0, 0] == 0 and M[0, 2] == 0

    def test_unknown_label(self):
        with pytest.raises(ym.GroupError):
            ym.wilson_cylinder(group("s3"), None, "nope", 0.1, 0.1)

    def test_trivial_loop_on_torus(self):
        G = group("su2")
        v = ym.loop_amplitude(G, 6, ym.torus_with_loops([1], [0.8]))
        assert v == pytest.approx(ym.partition_function(G, 6, 1, 0.8)[0])

    def test_contractible_loop_on_sphere(self):
        G = group("su2")
        a, b, V = 0.4, 0.7, 2
        surf = ym.LoopSurface([(a, 1), (b, 1)], [(V, 0, 1)])
        want = sum(math.exp(-a * G.sigma(U) - b * G.sigma(W)) * U * W * G.fusion(U, V, W)
                   for U in range(1, 5) for W in range(1, 5))
        assert ym.wilson_closed(G, 4, surf) == pytest.approx(want, rel=1e-12)

    def test_divergent_region(self):
        with pytest.raises(ym.DivergentAmplitude):
            ym.loop_amplitude(group("su2"), 6, ym.LoopSurface([(0.0, 0)], []))


class TestTwist:
    def test_identity_twist(self):
        G = group("su2")
        assert ym.twist_amplitude(G, 5, "id", ym.torus_with_loops([None], [0.4])) == pytest.approx(
            ym.partition_function(G, 5, 1, 0.4)[0])

    def test_su2_conjugation(self):
        G = group("su2")
        v = ym.twist_amplitude(G, 8, "conj", ym.torus_with_loops([None], [0.4]))
        assert abs(v - ym.partition_function(G, 8, 1, 0.4)[0]) <= 1e-12

    def test_su3_conjugation_keeps_self_dual(self):
        G = group("su3")
        a = 0.3
        v = ym.twist_amplitude(G, None, "conj", ym.torus_with_loops([None], [a]))
        want = sum(math.exp(-a * G.sigma(U)) for U in G.labels() if G.dual(U) == U)
        assert v == pytest.approx(want, rel=1e-12)

    def test_z3_inversion(self):
        v = ym.twist_amplitude(group("cyclic:3"), None, "inv", ym.torus_with_loops([None], [1.0]))
        assert v == 1

    def test_unknown_twist(self):
        with pytest.raises(ym.GroupError):
            ym.twist_amplitude(group("su2"), 4, "outer", ym.torus_with_loops([None], [1.0]))


class TestWittenZeta:
    def test_exponent_two(self):
        r = ym.witten_zeta(group("su2"), 2)
        assert abs(r.value - math.pi ** 2 / 6) <= max(r.error, 1e-8)

    def test_exponent_four(self):
        r = ym.witten_zeta(group("su2"), 4)
        assert r.value == pytest.approx(math.pi ** 4 / 90, abs=1e-10)

    def test_exponent_one_refused(self):
        with pytest.raises(ym.DivergentAmplitude):
            ym.witten_zeta(group("su2"), 1)

    def test_finite_group(self):
        assert ym.witten_zeta(group("s3"), 2).value == pytest.approx(2.25)

    def test_partial_sums_increase(self):
        r = ym.witten_zeta(group("su2"), 2, (100, 1000, 10000))
        sums = [s for _, s in r.partial_sums]
        assert sums == sorted(sums)
