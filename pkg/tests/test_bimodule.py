import numpy as np
import pytest
from hypothesis import given, strategies as st

from artifact import bimodule as bm

from conftest import block, group

area = st.floats(0.0, 1.0)


def automorphism(name, auto):
    return bm.group_automorphism_matrix(group(name), block(name), auto)


def wilson(name, V, trunc=None):
    return bm.wilson(group(name), V, block(name, trunc))


class TestSemigroup:
    def test_zero_is_identity(self):
        M = wilson("su2", 2, 4)
        np.testing.assert_allclose(M.Q(0, 0, 0), np.eye(M.dim), atol=1e-15)

    @given(st.tuples(area, area, area), st.tuples(area, area, area))
    def test_additive(self, p, q):
        M = wilson("su2", 3, 4)
        s = tuple(x + y for x, y in zip(p, q))
        np.testing.assert_allclose(M.Q(*p) @ M.Q(*q), M.Q(*s), atol=1e-12)

    @pytest.mark.parametrize("name,V,trunc", [("su2", 2, 4), ("s3", "std", None), ("cyclic:4", 1, None)])
    def test_axioms(self, name, V, trunc):
        assert bm.check_bimodule(wilson(name, V, trunc)).ok

    def test_broken_action_detected(self):
        M = wilson("s3", "std")
        rho = M.rho0.to_dense().copy()
        rho[0, 1, 0, 0] += 0.1
        with pytest.raises(bm.BimoduleError):
            bm.Bimodule(M.left, M.right, rho)


class TestTwisted:
    def test_identity_twist_is_regular(self):
        A = block("s3")
        assert bm.is_isomorphic(bm.twisted(A, np.eye(A.dim)), bm.regular_bimodule(A))

    @pytest.mark.parametrize("name,auto,trunc", [("s3", "inner01", None), ("su2", "conj", 4)])
    def test_inner_twist_is_regular(self, name, auto, trunc):
        A = block(name, trunc)
        alpha = bm.group_automorphism_matrix(group(name), A, auto)
        assert bm.is_isomorphic(bm.twisted(A, alpha), bm.regular_bimodule(A))

    def test_outer_twist_is_not_regular(self):
        L = bm.twisted(block("cyclic:3"), automorphism("cyclic:3", "inv"))
        assert not bm.is_isomorphic(L, bm.regular_bimodule(block("cyclic:3")))

    def test_conj_maps_labels_to_duals(self):
        G, A = group("cyclic:3"), block("cyclic:3")
        alpha = automorphism("cyclic:3", "inv")
        for U in A.labels:
            e = np.zeros(A.dim)
            e[A.index(U, 0, 0)] = 1
            assert (alpha @ e)[A.index(G.dual(U), 0, 0)] == pytest.approx(1)

    def test_composition(self):
        A = block("cyclic:5")
        a2, a3 = automorphism("cyclic:5", "mul2"), automorphism("cyclic:5", "mul3")
        T, _, _ = bm.tensor_product(bm.twisted(A, a2), bm.twisted(A, a3))
        assert bm.is_isomorphic(T, bm.twisted(A, a3 @ a2))
        assert bm.is_isomorphic(T, bm.regular_bimodule(A))

    def test_involution(self):
        A = block("cyclic:3")
        L = bm.twisted(A, automorphism("cyclic:3", "inv"))
        T, _, _ = bm.tensor_product(L, L)
        assert bm.is_isomorphic(T, bm.regular_bimodule(A))

    def test_not_an_automorphism(self):
        A = block("s3")
        assert not bm.check_automorphism(A, 2 * np.eye(A.dim)).ok
        with pytest.raises(bm.BimoduleError):
            bm.twisted(A, 2 * np.eye(A.dim))

    def test_block_dimension_mismatch(self):
        with pytest.raises(bm.BimoduleError):
            bm.label_permutation(block("s3"), {"triv": "std"})


class TestWilson:
    def test_sizes(self):
        assert wilson("su2", 2, 4).dim == 40

    def test_trivial_line_is_regular(self):
        A = block("s3")
        assert bm.is_isomorphic(wilson("s3", "triv"), bm.regular_bimodule(A))

    def test_empty_on_truncation(self):
        with pytest.raises(bm.BimoduleError):
            bm.wilson(group("su2"), 9, block("su2", 3))

    def test_fusion(self):
        T, _, _ = bm.tensor_product(wilson("s3", "std"), wilson("s3", "std"))
        S = bm.direct_sum_bimodule([wilson("s3", U) for U in ("triv", "sign", "std")])
        assert T.dim == S.dim
        assert bm.is_isomorphic(T, S)

    def test_fusion_abelian(self):
        T, _, _ = bm.tensor_product(wilson("cyclic:4", 1), wilson("cyclic:4", 3))
        assert bm.is_isomorphic(T, wilson("cyclic:4", 0))

    def test_associative(self):
        V, W, X = wilson("s3", "std"), wilson("s3", "sign"), wilson("s3", "std")
        VW, _, _ = bm.tensor_product(V, W)
        WX, _, _ = bm.tensor_product(W, X)
        left, _, _ = bm.tensor_product(VW, X)
        right, _, _ = bm.tensor_product(V, WX)
        assert bm.is_isomorphic(left, right)

    def test_unit_for_tensor(self):
        M = wilson("s3", "std")
        T, _, _ = bm.tensor_product(M, bm.regular_bimodule(block("s3")))
        assert bm.is_isomorphic(T, M)
        T, _, _ = bm.tensor_product(bm.regular_bimodule(block("s3")), M)
        assert bm.is_isomorphic(T, M)

    @pytest.mark.parametrize("name,trunc", [("s3", None), ("su2", 4), ("cyclic:4", None)])
    def test_cyclic_tensor_counts(self, name, trunc):
        G, A = group(name), block(name, trunc)
        for V in A.labels:
            if not any(G.fusion(V, W, U) for U in A.labels for W in A.labels):
                continue
            want = sum(G.fusion(V, U, U) for U in A.labels)
            assert bm.cyclic_tensor(bm.wilson(G, V, A))[0] == want

    def test_cyclic_tensor_of_algebra_is_centre(self):
        A = block("s3")
        assert bm.cyclic_tensor(bm.regular_bimodule(A))[0] == 3

    def test_cyclic_tensor_of_outer_twist(self):
        L = bm.twisted(block("cyclic:3"), automorphism("cyclic:3", "inv"))
        assert bm.cyclic_tensor(L)[0] == 1


class TestDuals:
    def test_twisted_pair(self):
        assert bm.check_dual_pair(bm.twisted_pair(block("cyclic:3"), automorphism("cyclic:3", "inv"))).ok

    @pytest.mark.parametrize("name,V,trunc", [("s3", "std", None), ("su2", 2, 3)])
    def test_wilson_pair(self, name, V, trunc):
        assert bm.check_dual_pair(bm.wilson_pair(group(name), V, block(name, trunc))).ok

    def test_literal_pair(self):
        p = bm.wilson_literal(group("s3"), "std")
        assert bm.check_dual_pair(p).ok
        assert bm.check_bimodule(p.U).ok and bm.check_bimodule(p.V).ok

    def test_literal_matches_block_model(self):
        # same carrier dimension and cyclic tensor rank on both routes
        lit = bm.wilson_literal(group("s3"), "std").U
        blk = wilson("s3", "std")
        assert lit.dim == blk.dim
        assert bm.cyclic_tensor(lit)[0] == bm.cyclic_tensor(blk)[0]

    def test_perturbed_copairing(self):
        p = bm.wilson_pair(group("s3"), "std", block("s3"))
        bad = bm.DualPair(p.U, p.V, p.beta0, 1.01 * p.gamma0)
        rep = bm.check_dual_pair(bad)
        assert not rep.ok and "zigzag_U" in rep.failures()

    def test_mismatched_algebras(self):
        p = bm.wilson_pair(group("s3"), "std", block("s3"))
        q = bm.wilson_pair(group("cyclic:3"), 1, block("cyclic:3"))
        with pytest.raises(bm.BimoduleError):
            bm.check_dual_pair(bm.DualPair(p.U, q.V, p.beta0, p.gamma0))


class TestTransmissive:
    def test_twists(self):
        A = block("su2", 4)
        assert bm.is_transmissive(bm.twisted(A, bm.group_automorphism_matrix(group("su2"), A, "conj")))

    def test_wilson(self):
        assert bm.is_transmissive(wilson("su2", 1, 4))
        assert not bm.is_transmissive(wilson("su2", 2, 4))

    def test_closed_under_tensor(self):
        A = block("su2", 4)
        c = bm.group_automorphism_matrix(group("su2"), A, "conj")
        T, _, _ = bm.tensor_product(bm.twisted(A, c), bm.regular_bimodule(A))
        assert bm.is_transmissive(T)


class TestSingular:
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_is_a_bimodule(self, n):
        _, _, M = bm.singular_example(n)
        assert bm.check_bimodule(M, tol=1e-8 * np.exp(n * n)).ok

    @pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
    def test_lower_bound(self, n):
        _, _, M = bm.singular_example(n)
        assert bm.attempted_left_action_norm(M, 1, 1) ** 2 >= bm.singular_lower_bound(n, 1, 1) * (1 - 1e-12)

    def test_index_guard(self):
        with pytest.raises(bm.BimoduleError):
            bm.singular_example(bm.MAX_SINGULAR_INDEX + 1)
        with pytest.raises(bm.BimoduleError):
            bm.singular_example(0)
