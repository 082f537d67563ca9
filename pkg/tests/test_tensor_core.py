import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from artifact.tensor_core import (
    DimensionMismatch,
    IndexSpace,
    LinearMap,
    NotIdempotentError,
    Tensor,
    TensorError,
    contract,
    dense_map_distance,
    operator_norm,
    outer,
    split_idempotent,
    split_sparse_idempotent,
)

from conftest import block

finite = st.floats(-3, 3, allow_nan=False, allow_infinity=False)


def cmatrix(rows, cols):
    return st.builds(lambda re, im: re + 1j * im,
                     hnp.arrays(float, (rows, cols), elements=finite),
                     hnp.arrays(float, (rows, cols), elements=finite))


def space(label, n):
    return IndexSpace(label, n)


class TestIndexSpace:
    def test_rejects_zero_dim(self):
        with pytest.raises(ValueError):
            IndexSpace("v", 0)

    def test_rejects_wrong_tag_count(self):
        with pytest.raises(ValueError):
            IndexSpace("v", 2, ("a",))

    def test_rejects_repeated_tags(self):
        with pytest.raises(ValueError):
            IndexSpace("v", 2, ("a", "a"))

    def test_tag_lookup(self):
        s = IndexSpace("v", 3, (("U", 0, 0), ("U", 0, 1), ("W", 0, 0)))
        assert s.index(("W", 0, 0)) == 2


class TestTensor:
    def test_pruning(self):
        t = Tensor.from_dense(np.array([1.0, 1e-16, 0.0]), [space("v", 3)])
        assert t.nnz == 1

    def test_out_of_bounds(self):
        with pytest.raises(TensorError):
            Tensor.from_entries([space("v", 2)], {(2,): 1.0})

    def test_entries_round_trip(self):
        t = Tensor.from_entries([space("v", 2), space("w", 3)], {(1, 2): 2.0, (0, 0): -1j})
        assert t.entries() == {(0, 0): -1j, (1, 2): 2.0}
        np.testing.assert_array_equal(Tensor.from_dense(t.to_dense(), t.spaces).to_dense(), t.to_dense())

    def test_trace(self):
        m = np.arange(9.0).reshape(3, 3)
        t = Tensor.from_dense(m, [space("v", 3), space("v", 3)])
        assert complex(t.trace(0, 1).to_dense()) == np.trace(m)


class TestContract:
    def test_identity_composition(self):
        s = space("v", 2)
        idt = LinearMap.identity(s).tensor
        out = contract(idt, idt, [(1, 0)])
        np.testing.assert_array_equal(out.to_dense(), np.eye(2))

    def test_outer_product(self):
        v = np.array([1.0, 2.0])
        w = np.array([3.0, -1j, 0.5])
        t = outer(Tensor.from_dense(v, [space("v", 2)]), Tensor.from_dense(w, [space("w", 3)]))
        np.testing.assert_allclose(t.to_dense(), np.outer(v, w))

    def test_unit_then_multiply_is_semigroup_matrix(self):
        A = block("cyclic:2")
        a = 0.4
        S = A.space
        mu = Tensor.from_dense(A.mu(a / 2), [S, S, S])
        eta = Tensor.from_dense(A.eta(a / 2), [S])
        P = contract(mu, eta, [(2, 0)]).to_dense()
        np.testing.assert_allclose(P, A.P(a), atol=1e-14)

    def test_dimension_mismatch_names_labels(self):
        a = Tensor.zeros([space("left", 2)])
        b = Tensor.zeros([space("right", 3)])
        with pytest.raises(DimensionMismatch) as info:
            contract(a, b, [(0, 0)])
        assert "left" in str(info.value) and "right" in str(info.value)

    def test_repeated_leg(self):
        a = Tensor.zeros([space("v", 2), space("v", 2)])
        with pytest.raises(TensorError):
            contract(a, a, [(0, 0), (0, 1)])

    def test_dense_fallback_matches_einsum(self, rng):
        # large joins take the dense branch
        n = 70
        x = rng.standard_normal((n, n, n))
        y = rng.standard_normal((n, n))
        sx = [space("a", n), space("b", n), space("c", n)]
        sy = [space("c", n), space("d", n)]
        t = contract(Tensor.from_dense(x, sx), Tensor.from_dense(y, sy), [(2, 0)])
        np.testing.assert_allclose(t.to_dense(), np.einsum("abc,cd->abd", x, y), atol=1e-10)

    def test_deterministic(self, rng):
        x = rng.standard_normal((4, 5)) + 1j * rng.standard_normal((4, 5))
        y = rng.standard_normal((5, 3))
        sx, sy = [space("a", 4), space("b", 5)], [space("b", 5), space("c", 3)]
        r1 = contract(Tensor.from_dense(x, sx), Tensor.from_dense(y, sy), [(1, 0)]).to_dense()
        r2 = contract(Tensor.from_dense(x, sx), Tensor.from_dense(y, sy), [(1, 0)]).to_dense()
        assert r1.tobytes() == r2.tobytes()

    @given(cmatrix(3, 4), cmatrix(4, 2), cmatrix(2, 3))
    def test_associative(self, x, y, z):
        a, b, c, d = space("a", 3), space("b", 4), space("c", 2), space("d", 3)
        X, Y, Z = Tensor.from_dense(x, [a, b]), Tensor.from_dense(y, [b, c]), Tensor.from_dense(z, [c, d])
        left = contract(contract(X, Y, [(1, 0)]), Z, [(1, 0)]).to_dense()
        right = contract(X, contract(Y, Z, [(1, 0)]), [(1, 0)]).to_dense()
        np.testing.assert_allclose(left, right, atol=1e-10)

    @given(cmatrix(3, 4))
    def test_identity_is_neutral(self, x):
        a, b = space("a", 3), space("b", 4)
        X = Tensor.from_dense(x, [a, b])
        out = contract(X, LinearMap.identity(b).tensor, [(1, 0)])
        assert out.entries() == X.entries()


class TestLinearMap:
    def test_compose_checks_spaces(self):
        f = LinearMap.identity(space("a", 2))
        g = LinearMap.identity(space("b", 2))
        with pytest.raises(DimensionMismatch):
            f.compose(g)

    def test_otimes_is_kron(self, rng):
        x = rng.standard_normal((2, 3))
        y = rng.standard_normal((4, 2))
        f = LinearMap.from_matrix(x, [space("a", 2)], [space("b", 3)])
        g = LinearMap.from_matrix(y, [space("c", 4)], [space("d", 2)])
        np.testing.assert_allclose(f.otimes(g).to_matrix(), np.kron(x, y))

    @given(cmatrix(3, 5))
    def test_adjoint_involution_and_norm(self, x):
        f = LinearMap.from_matrix(x, [space("o", 3)], [space("i", 5)])
        np.testing.assert_array_equal(f.adjoint().adjoint().to_matrix(), f.to_matrix())
        n1, n2 = operator_norm(f), operator_norm(f.adjoint())
        assert abs(n1 - n2) <= 1e-12 * max(1.0, n1)


class TestOperatorNorm:
    def test_identity(self):
        assert operator_norm(LinearMap.identity(space("v", 7))) == pytest.approx(1.0, abs=1e-12)

    def test_diagonal(self):
        assert operator_norm(np.diag([3.0, -4j])) == pytest.approx(4.0, rel=1e-10)

    def test_zero(self):
        assert operator_norm(np.zeros((3, 3))) == 0.0

    def test_block_coproduct_norm(self):
        # Delta_a restricted to one matrix block has norm e^{-a sigma}
        A = block("su2", 3)
        a = 0.8
        d, sig = 3, 2.0
        idx = [A.index(3, i, j) for i in range(d) for j in range(d)]
        D = A.delta(a)[np.ix_(idx, idx, idx)].reshape(d ** 4, d * d)
        assert operator_norm(D) == pytest.approx(np.exp(-a * sig), rel=1e-10)

    @given(cmatrix(4, 3))
    def test_matches_svd(self, x):
        ref = np.linalg.norm(x, 2)
        assert operator_norm(x) == pytest.approx(ref, rel=1e-9, abs=1e-12)


class TestSplitIdempotent:
    def test_identity(self):
        s = space("v", 5)
        proj, inj, r = split_idempotent(LinearMap.identity(s))
        assert r == 5
        np.testing.assert_allclose(np.abs(inj.to_matrix() @ proj.to_matrix()), np.eye(5), atol=1e-12)

    def test_zero(self):
        s = space("v", 4)
        proj, inj, r = split_idempotent(LinearMap.from_matrix(np.zeros((4, 4)), [s], [s]))
        assert r == 0 and proj is None and inj is None

    def test_not_idempotent_carries_defect(self):
        s = space("v", 2)
        with pytest.raises(NotIdempotentError) as info:
            split_idempotent(LinearMap.from_matrix(2 * np.eye(2), [s], [s]))
        assert info.value.defect == pytest.approx(2.0)

    def test_group_algebra_centre_rank(self):
        # brute-force centre of L2(S3): solutions of z x = x z
        A = block("s3")
        mu = A.mu(0.0)
        rows = np.concatenate([mu[:, :, x] - mu[:, x, :] for x in range(A.dim)])
        brute = A.dim - np.linalg.matrix_rank(rows, tol=1e-9)
        from artifact.rfa import cylinder_idempotent_matrix
        D0 = cylinder_idempotent_matrix(A, 0.0)
        _, _, r = split_idempotent(LinearMap.from_matrix(D0, [A.space], [A.space]))
        assert r == brute == 3

    def test_oblique(self):
        s = space("v", 2)
        D = np.array([[1.0, 1.0], [0.0, 0.0]])
        proj, inj, r = split_idempotent(LinearMap.from_matrix(D, [s], [s]))
        assert r == 1
        np.testing.assert_allclose(inj.to_matrix() @ proj.to_matrix(), D, atol=1e-12)
        np.testing.assert_allclose(proj.to_matrix() @ inj.to_matrix(), [[1.0]], atol=1e-12)

    @given(hnp.arrays(float, (5, 5), elements=finite), st.integers(0, 5))
    def test_round_trip(self, x, r):
        # oblique idempotent S diag(1..1,0..0) S^{-1}
        S = x + 7 * np.eye(5)
        D = S @ np.diag([1.0] * r + [0.0] * (5 - r)) @ np.linalg.inv(S)
        s = space("v", 5)
        tol = 1e-9
        proj, inj, rank = split_idempotent(LinearMap.from_matrix(D, [s], [s]), tol)
        assert rank == r
        if r:
            assert dense_map_distance(inj.compose(proj), LinearMap.from_matrix(D, [s], [s])) <= 10 * tol
            np.testing.assert_allclose(proj.to_matrix() @ inj.to_matrix(), np.eye(r), atol=10 * tol)

    def test_sparse_split(self, rng):
        S = rng.standard_normal((6, 6)) + 6 * np.eye(6)
        D = S @ np.diag([1, 1, 0, 1, 0, 0.0]) @ np.linalg.inv(S)
        P, I, r = split_sparse_idempotent(D)
        assert r == 3
        np.testing.assert_allclose(I @ P, D, atol=1e-10)
        np.testing.assert_allclose(P @ I, np.eye(3), atol=1e-10)
