"""Bimodules over regularised algebras in the finite-dimensional model.

A bimodule is an ordinary bimodule ``rho0: A (x) M (x) B -> M`` together with
three commuting generators ``(H_A, H_M, H_B)`` on M; the area-dependent
action is ``rho_{a,l,b} = Q_{a,l,b} rho0`` with ``Q = exp(a H_A + l H_M + b H_B)``.

Base actions are stored as sparse tensors with legs ``(out, a, in, b)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .rfa import (RFA, AxiomReport, BlockRFA, FiniteRFA, NotStronglySeparable, RFAError,
                  polynomial_rfa, window_inverse)
from .tensor_core import (IndexSpace, LinearMap, NotIdempotentError, Tensor, contract, operator_norm,
                          split_idempotent, split_sparse_idempotent)


class BimoduleError(ValueError):
    pass


def _vec_tensor(v, space):
    return Tensor.from_dense(np.asarray(v, dtype=np.complex128), [space])


class Bimodule:
    """An A-B bimodule with semigroup generated by commuting endomorphisms."""

    def __init__(self, left: RFA, right: RFA, rho0, *, HM=None, generators=None,
                 name: str = "M", basis_tags=None, validate: bool = True, tol: float = 1e-10):
        self.left = left
        self.right = right
        self.name = name
        if isinstance(rho0, Tensor):
            m = rho0.dims[0]
            t = rho0
        else:
            arr = np.asarray(rho0, dtype=np.complex128)
            m = arr.shape[0]
            t = None
        self.space = IndexSpace(name, m, basis_tags)
        spaces = [self.space, left.space, self.space, right.space]
        self.rho0 = t.relabel(spaces) if t is not None else Tensor.from_dense(arr, spaces)
        self._L: dict = {}
        self._R: dict = {}
        if generators is None:
            HA = self.left_matrix(left.H) if isinstance(left, FiniteRFA) else np.zeros((m, m))
            HB = self.right_matrix(right.H) if isinstance(right, FiniteRFA) else np.zeros((m, m))
            generators = (HA, np.zeros((m, m)) if HM is None else HM, HB)
        self.generators = tuple(np.asarray(g, dtype=np.complex128) for g in generators)
        self._diag = all(not np.any(g - np.diag(np.diag(g))) for g in self.generators)
        if validate:
            rep = check_bimodule(self, tol=tol)
            if not rep.ok:
                raise BimoduleError(f"{name}: bimodule axioms fail: {rep.failures()}")

    @property
    def dim(self) -> int:
        return self.space.dim

    def __repr__(self) -> str:
        return f"Bimodule({self.name!r}, dim={self.dim}, {self.left.name}-{self.right.name})"

    # representation matrices ----------------------------------------------
    def left_matrix(self, x) -> np.ndarray:
        """Matrix of ``m -> rho0(x (x) m (x) 1)``."""
        x = np.asarray(x, dtype=np.complex128)
        t = contract(self.rho0, _vec_tensor(x, self.left.space), [(1, 0)])
        t = contract(t, _vec_tensor(self.right.eta(0.0), self.right.space), [(2, 0)])
        return t.to_dense()

    def right_matrix(self, y) -> np.ndarray:
        """Matrix of ``m -> rho0(1 (x) m (x) y)``."""
        y = np.asarray(y, dtype=np.complex128)
        t = contract(self.rho0, _vec_tensor(self.left.eta(0.0), self.left.space), [(1, 0)])
        t = contract(t, _vec_tensor(y, self.right.space), [(2, 0)])
        return t.to_dense()

    def left_stack(self) -> np.ndarray:
        """``L[p]`` = left action of basis element p, shape (nA, m, m)."""
        if "stack" not in self._L:
            t = contract(self.rho0, _vec_tensor(self.right.eta(0.0), self.right.space), [(3, 0)])
            self._L["stack"] = t.to_dense().transpose(1, 0, 2)
        return self._L["stack"]

    def right_stack(self) -> np.ndarray:
        if "stack" not in self._R:
            t = contract(self.rho0, _vec_tensor(self.left.eta(0.0), self.left.space), [(1, 0)])
            self._R["stack"] = t.to_dense().transpose(2, 0, 1)
        return self._R["stack"]

    # semigroup and actions ----------------------------------------------------
    def Q(self, a: float = 0.0, l: float = 0.0, b: float = 0.0) -> np.ndarray:
        HA, HM, HB = self.generators
        X = a * HA + l * HM + b * HB
        if self._diag:
            return np.diag(np.exp(np.diag(X)))
        return sla.expm(X)

    def action(self, a: float = 0.0, l: float = 0.0, b: float = 0.0) -> Tensor:
        """rho_{a,l,b} as a tensor with legs (out, a, in, b)."""
        Q = Tensor.from_dense(self.Q(a, l, b), [self.space, self.space])
        return contract(Q, self.rho0, [(1, 0)])

    def action_map(self, a: float = 0.0, l: float = 0.0, b: float = 0.0) -> LinearMap:
        t = self.action(a, l, b).transpose([0, 1, 2, 3])
        return LinearMap((self.space,), (self.left.space, self.space, self.right.space), t)


def _probes(n: int, big: bool, rng) -> np.ndarray:
    if not big:
        return np.eye(n, dtype=np.complex128)
    return rng.standard_normal((3, n)) + 1j * rng.standard_normal((3, n))


def check_bimodule(M: Bimodule, samples: Sequence[tuple] = ((0.3, 0.2, 0.1), (0.05, 0.0, 0.4)),
                   tol: float = 1e-10, seed: int = 0) -> AxiomReport:
    """Bimodule axioms on basis elements, or on seeded random probes for large carriers."""
    rep = AxiomReport(tol)
    m = M.dim
    L, R = M.left_stack(), M.right_stack()
    A, B = M.left, M.right
    muA, muB = A.mu(0.0), B.mu(0.0)
    eye = np.eye(m)
    big = max(A.dim, B.dim) ** 2 * m ** 3 > 2e7
    rng = np.random.default_rng(seed)
    X, Y = _probes(A.dim, big, rng), _probes(B.dim, big, rng)
    LX = np.einsum("kp,pij->kij", X, L)
    RY = np.einsum("kp,pij->kij", Y, R)
    rep.record("left_unit", np.abs(np.einsum("p,pij->ij", A.eta(0.0), L) - eye).max())
    rep.record("right_unit", np.abs(np.einsum("p,pij->ij", B.eta(0.0), R) - eye).max())
    # L(x)L(y) = L(xy); R(y)R(x) = R(xy) on column vectors
    lhs = np.einsum("xij,yjk->xyik", LX, LX)
    rhs = np.einsum("oxy,ax,by,oik->abik", muA, X, X, L, optimize=True)
    rep.record("left_assoc", np.abs(lhs - rhs).max())
    lhs = np.einsum("yij,xjk->xyik", RY, RY)
    rhs = np.einsum("oxy,ax,by,oik->abik", muB, Y, Y, R, optimize=True)
    rep.record("right_assoc", np.abs(lhs - rhs).max())
    rep.record("left_right_commute", np.abs(np.einsum("xij,yjk->xyik", LX, RY) - np.einsum("yij,xjk->xyik", RY, LX)).max())
    base = np.einsum("xij,yjk->xyik", LX, RY)
    direct = np.einsum("oxiy,kx,ly->kloi", M.rho0.to_dense(), X, Y, optimize=True)
    rep.record("two_sided", np.abs(base - direct).max())
    comm = 0.0
    scale = max([1.0] + [float(np.abs(g).max()) for g in M.generators]) ** 2
    for g in M.generators:
        for h in M.generators:
            comm = max(comm, np.abs(g @ h - h @ g).max())
        comm = max(comm, np.abs(np.einsum("ij,xjk->xik", g, LX) - np.einsum("xij,jk->xik", LX, g)).max())
        comm = max(comm, np.abs(np.einsum("ij,xjk->xik", g, RY) - np.einsum("xij,jk->xik", RY, g)).max())
    rep.record("generators_commute", comm / scale)
    # Q_{a,0,0} rho0 = rho0 (P_a (x) id (x) id) and likewise on the right
    for a, l, b in samples:
        QA = M.Q(a, 0, 0)
        lhs = np.einsum("ij,xjk->xik", QA, LX)
        rep.record("left_semigroup", np.abs(lhs - np.einsum("kx,px,pij->kij", X, A.P(a), L, optimize=True)).max()
                   / max(1.0, np.abs(lhs).max()))
        QB = M.Q(0, 0, b)
        lhs = np.einsum("ij,xjk->xik", QB, RY)
        rep.record("right_semigroup", np.abs(lhs - np.einsum("kx,px,pij->kij", Y, B.P(b), R, optimize=True)).max()
                   / max(1.0, np.abs(lhs).max()))
        q1 = M.Q(a, l, b) @ M.Q(b, a, l)
        rep.record("Q_additive", np.abs(q1 - M.Q(a + b, l + a, b + l)).max() / max(1.0, np.abs(q1).max()))
    rep.record("Q_zero", np.abs(M.Q(0, 0, 0) - eye).max())
    return rep


# duals ------------------------------------------------------------------------

@dataclass
class DualPair:
    """(U, V) with U an A-B bimodule, V a B-A bimodule, pairing U (x) V -> I and copairing I -> V (x) U."""

    U: Bimodule
    V: Bimodule
    beta0: np.ndarray
    gamma0: np.ndarray
    name: str = "pair"

    def beta(self, a: float = 0.0, l: float = 0.0, b: float = 0.0) -> np.ndarray:
        """Matrix ``B[u, v]`` of beta0(Q^U u, v)."""
        return self.U.Q(a, l, b).T @ self.beta0

    def gamma(self, a: float = 0.0, l: float = 0.0, b: float = 0.0) -> np.ndarray:
        """Array ``G[v, u]`` of the copairing (V leg first)."""
        return self.gamma0 @ self.U.Q(a, l, b).T


def dual_bimodule(U: Bimodule, name: str | None = None) -> DualPair:
    """The dual vector space with ``(y.phi.x)(u) = phi(x.u.y)`` and the evaluation pairing."""
    rho = U.rho0
    rhoV = rho.transpose([2, 3, 0, 1])
    HA, HM, HB = U.generators
    V = Bimodule(U.right, U.left, rhoV, generators=(HB.T, HM.T, HA.T), name=name or U.name + "*", validate=False)
    m = U.dim
    return DualPair(U, V, np.eye(m, dtype=np.complex128), np.eye(m, dtype=np.complex128), name=f"({U.name},{V.name})")


def check_dual_pair(p: DualPair, samples: Sequence[tuple] = ((0.2, 0.1, 0.3), (0.0, 0.5, 0.05)),
                    tol: float = 1e-10) -> AxiomReport:
    rep = AxiomReport(tol)
    U, V = p.U, p.V
    if U.left.dim != V.right.dim or U.right.dim != V.left.dim:
        raise BimoduleError("dual pair: algebras do not match")
    for (a, l, b) in samples:
        for s in (0.0, 0.5):
            p1 = (a * s, l * s, b * s)
            p2 = (a * (1 - s), l * (1 - s), b * (1 - s))
            zz_u = (p.beta(*p1) @ p.gamma(*p2)).T
            rep.record("zigzag_U", np.abs(zz_u - U.Q(a, l, b)).max())
            zz_v = p.gamma(*p2) @ p.beta(*p1)
            rep.record("zigzag_V", np.abs(zz_v - V.Q(b, l, a)).max())
        rep.record("Q_compatible", np.abs(U.Q(a, l, b).T @ p.beta0 - p.beta0 @ V.Q(b, l, a)).max())
    LU, RU, LV, RV = U.left_stack(), U.right_stack(), V.left_stack(), V.right_stack()
    # beta(x.u.y, v) = beta(u, y.v.x)
    lhs = np.einsum("xkj,yji,kv->xyiv", LU, RU, p.beta0, optimize=True)
    rhs = np.einsum("iw,ywk,xkv->xyiv", p.beta0, LV, RV, optimize=True)
    rep.record("pairing_balanced", np.abs(lhs - rhs).max())
    # the action on V is recovered from the action on U through the duality maps
    rec = np.einsum("wi,xkj,yji,kv->yxwv", p.gamma0, LU, RU, p.beta0, optimize=True)
    rep.record("dual_action", np.abs(rec - np.einsum("ywk,xkv->yxwv", LV, RV)).max())
    return rep


def is_transmissive(M: Bimodule, tol: float = 1e-10) -> bool:
    HA, _, HB = M.generators
    return float(np.abs(HA - HB).max()) <= tol


# tensor products ------------------------------------------------------------------

def separability_idempotent(A: RFA) -> np.ndarray:
    """``e[p, q]`` with ``e = Delta_0(tau_0^{-1})``."""
    z = window_inverse(A, 0.0)
    if z is None:
        raise NotStronglySeparable(f"{A.name}: window element is not invertible")
    return np.einsum("pqm,m->pq", A.delta(0.0), z)


def _kron_sum(e: np.ndarray, X: np.ndarray, Y: np.ndarray) -> sp.csr_matrix:
    """sum_{p,q} e[p, q] X[p] (x) Y[q] as a sparse matrix."""
    n = X.shape[1] * Y.shape[1]
    out = sp.csr_matrix((n, n), dtype=np.complex128)
    Xs = {}
    Ys = {}
    for p, q in zip(*np.nonzero(np.abs(e) > 1e-15)):
        if p not in Xs:
            Xs[p] = sp.csr_matrix(X[p])
        if q not in Ys:
            Ys[q] = sp.csr_matrix(Y[q])
        out = out + e[p, q] * sp.kron(Xs[p], Ys[q], format="csr")
    return out


def tensor_idempotent(M: Bimodule, N: Bimodule) -> sp.csr_matrix:
    """D_0 on M (x) N: m (x) n -> sum m.e' (x) e''.n."""
    if M.right.dim != N.left.dim:
        raise BimoduleError("tensor_product: middle algebras differ")
    return _kron_sum(separability_idempotent(M.right), M.right_stack(), N.left_stack())


def tensor_product(M: Bimodule, N: Bimodule, tol: float = 1e-9, name: str | None = None):
    """M (x)_A N as the image of D_0; returns (bimodule, proj, inj)."""
    D = tensor_idempotent(M, N)
    P, I, r = split_sparse_idempotent(D, tol)
    if r == 0:
        raise BimoduleError("tensor product is zero")
    LM, RN = M.left_stack(), N.right_stack()
    eyeM, eyeN = np.eye(M.dim), np.eye(N.dim)
    # rho(b (x) w (x) c) = pi (L^M(b) (x) R^N(c)) iota w
    rho = np.einsum("rik,xij,ykl,jlu->rxuy", P.reshape(r, M.dim, N.dim), LM, RN, I.reshape(M.dim, N.dim, r),
                    optimize=True)
    HA_M, HM_M, _ = M.generators
    _, HM_N, HB_N = N.generators
    gens = (_sandwich(P, HA_M, None, I), _sandwich(P, HM_M, None, I) + _sandwich(P, None, HM_N, I),
            _sandwich(P, None, HB_N, I))
    out = Bimodule(M.left, N.right, rho, generators=gens, name=name or f"{M.name}⊗{N.name}", validate=False)
    return out, P, I


def _sandwich(P, X, Y, I):
    """P (X (x) Y) I with None meaning the identity, without forming the Kronecker product."""
    r = P.shape[0]
    m = X.shape[0] if X is not None else None
    n = Y.shape[0] if Y is not None else None
    if m is None:
        m = P.shape[1] // n
    if n is None:
        n = P.shape[1] // m
    Iv = I.reshape(m, n, r)
    if X is not None:
        Iv = np.einsum("ij,jlu->ilu", X, Iv)
    if Y is not None:
        Iv = np.einsum("kl,ilu->iku", Y, Iv)
    return P @ Iv.reshape(m * n, r)


def cyclic_tensor(M: Bimodule, tol: float = 1e-9):
    """Image of u -> e''.u.e'; returns (dim, proj, inj)."""
    if M.left.dim != M.right.dim:
        raise BimoduleError("cyclic tensor needs an A-A bimodule")
    e = separability_idempotent(M.left)
    L, R = M.left_stack(), M.right_stack()
    D = np.einsum("pq,qij,pjk->ik", e, L, R, optimize=True)
    sp_ = IndexSpace("cyc", M.dim)
    proj, inj, r = split_idempotent(LinearMap.from_matrix(D, (sp_,), (sp_,)), tol)
    if r == 0:
        return 0, None, None
    return r, proj.to_matrix(), inj.to_matrix()


def bimodule_character(M: Bimodule, x, y, a=0.0, l=0.0, b=0.0) -> complex:
    return complex(np.trace(M.Q(a, l, b) @ M.left_matrix(x) @ M.right_matrix(y)))


def is_isomorphic(M: Bimodule, N: Bimodule, *, samples: int = 6, seed: int = 0, tol: float = 1e-8,
                  support=None) -> bool:
    """Character comparison; valid for bimodules over separable algebras.

    ``support`` optionally restricts both actions to a subset of basis
    indices of the algebras, which compares the corners e M e only."""
    if M.left.dim != N.left.dim or M.right.dim != N.right.dim:
        return False
    if support is None and M.dim != N.dim:
        return False
    rng = np.random.default_rng(seed)
    maskA = np.ones(M.left.dim) if support is None else np.isin(np.arange(M.left.dim), support).astype(float)
    maskB = np.ones(M.right.dim) if support is None else np.isin(np.arange(M.right.dim), support).astype(float)
    for k in range(samples):
        x = (rng.standard_normal(M.left.dim) + 1j * rng.standard_normal(M.left.dim)) * maskA
        y = (rng.standard_normal(M.right.dim) + 1j * rng.standard_normal(M.right.dim)) * maskB
        prm = (0.0, 0.0, 0.0) if k == 0 else tuple(rng.uniform(0, 0.5, 3))
        c1, c2 = bimodule_character(M, x, y, *prm), bimodule_character(N, x, y, *prm)
        if abs(c1 - c2) > tol * max(1.0, abs(c1)):
            return False
    return True


# constructions ------------------------------------------------------------------------

def regular_bimodule(A: RFA, name: str | None = None) -> Bimodule:
    return twisted(A, np.eye(A.dim), name=name or f"{A.name}")


def check_automorphism(A: RFA, alpha: np.ndarray, tol: float = 1e-10) -> AxiomReport:
    rep = AxiomReport(tol)
    mu, eta, delta, eps = A.mu(0.0), A.eta(0.0), A.delta(0.0), A.eps(0.0)
    rep.record("mu", np.abs(np.einsum("om,mxy->oxy", alpha, mu) - np.einsum("oxy,xi,yj->oij", mu, alpha, alpha, optimize=True)).max())
    rep.record("eta", np.abs(alpha @ eta - eta).max())
    rep.record("eps", np.abs(eps @ alpha - eps).max())
    rep.record("delta", np.abs(np.einsum("pqm,mi->pqi", delta, alpha) - np.einsum("pm,qn,mni->pqi", alpha, alpha, delta, optimize=True)).max())
    rep.record("semigroup", np.abs(alpha @ A.P(0.5) - A.P(0.5) @ alpha).max())
    return rep


def twisted(A: RFA, alpha: np.ndarray, name: str | None = None, tol: float = 1e-10) -> Bimodule:
    """The bimodule _alpha A_id with rho(x (x) m (x) y) = alpha(x) m y."""
    alpha = np.asarray(alpha, dtype=np.complex128)
    rep = check_automorphism(A, alpha, tol)
    if not rep.ok:
        raise BimoduleError(f"not an RFA automorphism: {rep.failures()}")
    mu = A.mu(0.0)
    rho = np.einsum("oky,zx,kzi->oxiy", mu, alpha, mu, optimize=True)
    H = A.Hop if isinstance(A, FiniteRFA) else np.zeros((A.dim, A.dim))
    return Bimodule(A, A, rho, generators=(H, np.zeros_like(H), H), name=name or f"L[{A.name}]", validate=False)


def twisted_pair(A: RFA, alpha: np.ndarray, name: str = "α") -> DualPair:
    """(L_alpha, L_alpha^{-1}) with beta = eps mu (id (x) alpha), gamma = (alpha^{-1} (x) id) Delta eta."""
    alpha = np.asarray(alpha, dtype=np.complex128)
    ainv = np.linalg.inv(alpha)
    U = twisted(A, alpha, name=f"L_{name}")
    V = twisted(A, ainv, name=f"L_{name}^-1")
    mu, delta, eps, eta = A.mu(0.0), A.delta(0.0), A.eps(0.0), A.eta(0.0)
    beta0 = np.einsum("o,ouw,wv->uv", eps, mu, alpha, optimize=True)
    gamma0 = np.einsum("vp,pum,m->vu", ainv, delta, eta, optimize=True)
    return DualPair(U, V, beta0, gamma0, name=f"(L_{name},L_{name}^-1)")


def block_support(A: BlockRFA, labels) -> list:
    """Basis indices of the blocks with the given labels."""
    return [A.index(U, i, j) for U in labels for i in range(A.block(U)[1]) for j in range(A.block(U)[1])]


def label_permutation(A: BlockRFA, perm: dict, intertwiners: dict | None = None) -> np.ndarray:
    """Algebra map f^U_pq -> sum J_pr f^{perm U}_rs (J^-1)_sq on a block model (J = 1 by default)."""
    n = A.dim
    alpha = np.zeros((n, n), dtype=np.complex128)
    for lab, d, _ in A.blocks:
        tgt = perm.get(lab, lab)
        if A.block(tgt)[1] != d:
            raise BimoduleError(f"automorphism maps {lab!r} to a block of different dimension")
        J = np.eye(d) if intertwiners is None or lab not in intertwiners else np.asarray(intertwiners[lab])
        Ji = np.linalg.inv(J)
        for p in range(d):
            for q in range(d):
                for r in range(d):
                    for s in range(d):
                        c = J[p, r] * Ji[s, q]
                        if c != 0:
                            alpha[A.index(tgt, r, s), A.index(lab, p, q)] += c
    return alpha


def group_automorphism_matrix(G, A: BlockRFA, name: str) -> np.ndarray:
    """The block-model automorphism of a named group automorphism."""
    f = G.automorphism(name)
    perm = {U: f(U) for U in A.labels}
    return label_permutation(A, perm, {U: G.intertwiner(name, U) for U in A.labels})


def direct_sum_bimodule(parts: Sequence[Bimodule], name: str = "sum") -> Bimodule:
    if not parts:
        raise BimoduleError("empty direct sum")
    A, B = parts[0].left, parts[0].right
    m = sum(p.dim for p in parts)
    rho = np.zeros((m, A.dim, m, B.dim), dtype=np.complex128)
    gens = [np.zeros((m, m), dtype=np.complex128) for _ in range(3)]
    o = 0
    for p in parts:
        if p.left.dim != A.dim or p.right.dim != B.dim:
            raise BimoduleError("direct sum: algebras differ")
        k = p.dim
        rho[o:o + k, :, o:o + k, :] = p.rho0.to_dense()
        for g, h in zip(gens, p.generators):
            g[o:o + k, o:o + k] = h
        o += k
    return Bimodule(A, B, rho, generators=gens, name=name, validate=False)


def wilson(G, V, A: BlockRFA | None = None, trunc=None, name: str | None = None) -> Bimodule:
    """Block model of V (x) L^2(G) restricted to the truncation.

    Blocks ``(U, k, W)`` run over ``N_{V,W}^U`` copies of ``U (x) W*`` with
    ``U, W`` in the truncation; f^U_pq acts from the left by
    ``d_U^{-1/2} E_pq`` and f^W_rs from the right by ``d_W^{-1/2} E_rs``."""
    if A is None:
        A = G.block_rfa(trunc)
    labels = A.labels
    blocks = []
    for U in labels:
        for W in labels:
            for k in range(G.fusion(V, W, U)):
                blocks.append((U, k, W))
    if not blocks:
        raise BimoduleError(f"Wilson bimodule for {V!r} is empty on this truncation")
    offs = []
    m = 0
    tags = []
    for U, k, W in blocks:
        dU, dW = A.block(U)[1], A.block(W)[1]
        offs.append(m)
        tags.extend((U, k, W, p, r) for p in range(dU) for r in range(dW))
        m += dU * dW
    n = A.dim
    entries: dict = {}
    HA = np.zeros(m)
    HB = np.zeros(m)
    for (U, k, W), o in zip(blocks, offs):
        dU, sU = A.block(U)[1], A.block(U)[2]
        dW, sW = A.block(W)[1], A.block(W)[2]
        HA[o:o + dU * dW] = -sU
        HB[o:o + dU * dW] = -sW
        c = (dU * dW) ** -0.5
        for p in range(dU):
            for q in range(dU):
                for r in range(dW):
                    for s in range(dW):
                        entries[(o + p * dW + s, A.index(U, p, q), o + q * dW + r, A.index(W, r, s))] = c
    spaces = [IndexSpace("w", m), A.space, IndexSpace("w", m), A.space]
    rho = Tensor.from_entries(spaces, entries)
    return Bimodule(A, A, rho, generators=(np.diag(HA), np.zeros((m, m)), np.diag(HB)),
                    name=name or f"W[{V}]", basis_tags=tuple(tags), validate=False)


def wilson_pair(G, V, A: BlockRFA | None = None, trunc=None) -> DualPair:
    U = wilson(G, V, A, trunc)
    return dual_bimodule(U, name=f"W[{V}]*")


# group-algebra model in the delta basis ------------------------------------------------

def group_algebra(G) -> FiniteRFA:
    """L^2(G) of a finite group in the orthonormal basis e_g = sqrt|G| delta_g (sigma = 0)."""
    els = G.elements
    n = len(els)
    idx = {g: k for k, g in enumerate(els)}
    mu = np.zeros((n, n, n))
    delta = np.zeros((n, n, n))
    r = n ** -0.5
    for g in els:
        for h in els:
            gh = idx[G.multiply(g, h)]
            mu[gh, idx[g], idx[h]] = r
            delta[idx[g], idx[h], gh] = r
    eta = np.zeros(n)
    eps = np.zeros(n)
    e = idx[G.identity]
    eta[e] = n ** 0.5
    eps[e] = n ** 0.5
    return FiniteRFA(mu, eta, delta, eps, np.zeros(n), name=f"L2({G.name})",
                     basis_tags=tuple(("g", g) for g in els))


def wilson_literal(G, V, A: FiniteRFA | None = None) -> DualPair:
    """V (x) L^2(G) and L^2(G) (x) V* for a finite group with the pairings written
    directly in the delta basis (the independent route to :func:`wilson`)."""
    if A is None:
        A = group_algebra(G)
    els = G.elements
    n = len(els)
    idx = {g: k for k, g in enumerate(els)}
    rep = {g: np.asarray(G.rep_matrix(V, g), dtype=np.complex128) for g in els}
    dV = rep[G.identity].shape[0]
    m = dV * n
    r = n ** -0.5
    # carrier index v*n + a for v (x) e_a
    rho = np.zeros((m, n, m, n), dtype=np.complex128)
    for c in els:
        for a_ in els:
            for b in els:
                ca = idx[G.multiply(c, a_)]
                cab = idx[G.multiply(G.multiply(c, a_), b)]
                Rc = rep[c]
                for v in range(dV):
                    for w in range(dV):
                        if Rc[w, v] != 0:
                            rho[w * n + cab, idx[c], v * n + idx[a_], idx[b]] += r * r * Rc[w, v]
                del ca
    U = Bimodule(A, A, rho, name=f"V{V}⊗L2", validate=False)
    # dual carrier index a*dV + i for e_a (x) theta_i
    rhoD = np.zeros((m, n, m, n), dtype=np.complex128)
    for c in els:
        for a_ in els:
            for b in els:
                cab = idx[G.multiply(G.multiply(c, a_), b)]
                Rb = rep[G.inverse(b)]
                # (theta . b^{-1})_j = sum_i theta_i (b^{-1} action on dual): theta o rep(b)
                Rt = rep[b].T
                for i in range(dV):
                    for j in range(dV):
                        if Rt[j, i] != 0:
                            rhoD[cab * dV + j, idx[c], idx[a_] * dV + i, idx[b]] += r * r * Rt[j, i]
                del Rb
    Vb = Bimodule(A, A, rhoD, name=f"L2⊗V{V}*", validate=False)
    beta0 = np.zeros((m, m), dtype=np.complex128)
    gamma0 = np.zeros((m, m), dtype=np.complex128)
    for a_ in els:
        for b in els:
            if G.multiply(a_, b) == G.identity:
                for i in range(dV):
                    beta0[i * n + idx[a_], idx[b] * dV + i] = 1.0
    for g in els:
        gi = idx[G.inverse(g)]
        for i in range(dV):
            gamma0[idx[g] * dV + i, i * n + gi] = 1.0
    return DualPair(U, Vb, beta0, gamma0, name=f"(V{V}⊗L2, L2⊗V{V}*)")


# singular limits -------------------------------------------------------------------------

MAX_SINGULAR_INDEX = 26


def singular_example(n: int):
    """The pair C[x]/x^2 with H = x - n and x - n^3 and the two-dim bimodule x.v0 = e^{n^2} v1."""
    if n < 1:
        raise BimoduleError("n must be >= 1")
    if n > MAX_SINGULAR_INDEX:
        raise BimoduleError(f"e^(n^2) overflows double precision for n > {MAX_SINGULAR_INDEX}")
    AL = polynomial_rfa(2, [-n, 1.0], name=f"AL_{n}")
    AR = polynomial_rfa(2, [-float(n) ** 3, 1.0], name=f"AR_{n}")
    big = np.exp(float(n) ** 2)
    X = np.array([[0.0, 0.0], [big, 0.0]])
    Lx = [np.eye(2), X]
    rho = np.einsum("pij,qjk->ipkq", np.array(Lx), np.array(Lx))
    M = Bimodule(AL, AR, rho, name=f"M_{n}", validate=False)
    return AL, AR, M


def attempted_left_action_norm(M: Bimodule, a: float, b: float) -> float:
    """Operator norm of p (x) m -> rho_{a,0,b}(p (x) m (x) 1)."""
    # dense on purpose: entries far below the sparse pruning threshold matter here
    L = M.left_stack()
    mat = np.einsum("ij,pjk->ipk", M.Q(a, 0.0, b), L).reshape(M.dim, -1)
    return float(np.linalg.norm(mat, 2))


def singular_lower_bound(n: int, a: float, b: float) -> float:
    """Closed-form lower bound for the squared norm of the attempted left action."""
    e = np.exp(float(n) ** 2)
    return float(np.exp(-2 * a * n - 2 * b * n ** 3) * 0.5 * ((1 + (a + b) * e) ** 2 + 1 + e * e))
