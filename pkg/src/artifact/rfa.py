"""Regularised Frobenius algebras in finite dimension.

Every model stores base structure constants (at zero area) and a generator
``Hop`` of the area semigroup, ``P_a = exp(a * Hop)``.  The structure maps at
area ``a`` are

    mu_a = P_a mu_0,   eta_a = P_a eta_0,   delta_a = delta_0 P_a,   eps_a = eps_0 P_a.

Array conventions: ``mu`` has shape ``(d, d, d)`` indexed ``[out, x, y]`` and
``delta`` has shape ``(d, d, d)`` indexed ``[out1, out2, in]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np
import scipy.linalg as sla

from .tensor_core import IndexSpace, LinearMap, operator_norm, split_idempotent

KINDS = ("mu", "eta", "delta", "eps", "P")


class RFAError(ValueError):
    pass


class NoZeroAreaLimit(RFAError):
    def __init__(self, kind: str, model: str):
        super().__init__(f"no zero-area limit for {kind} in {model}")


class NotStronglySeparable(RFAError):
    pass


class NotHermitian(RFAError):
    pass


def _ro(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr, dtype=np.complex128)
    arr.setflags(write=False)
    return arr


class RFA:
    """Uniform interface shared by all models (the 'handle')."""

    name: str = "rfa"
    space: IndexSpace
    zero_area_kinds: frozenset = frozenset(KINDS)

    @property
    def dim(self) -> int:
        return self.space.dim

    @property
    def gram(self) -> np.ndarray | None:
        return None

    def mu(self, a: float) -> np.ndarray:
        raise NotImplementedError

    def eta(self, a: float) -> np.ndarray:
        raise NotImplementedError

    def delta(self, a: float) -> np.ndarray:
        raise NotImplementedError

    def eps(self, a: float) -> np.ndarray:
        raise NotImplementedError

    def P(self, a: float) -> np.ndarray:
        raise NotImplementedError

    def center_basis(self) -> np.ndarray | None:
        """Preferred orthonormal basis of the centre (columns), if known."""
        return None

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name!r}, dim={self.dim})"


class FiniteRFA(RFA):
    """Frobenius algebra with a central element ``H``; ``P_a`` multiplies by ``exp(aH)``."""

    def __init__(self, mu, eta, delta, eps, H, *, gram=None, name: str = "finite",
                 basis_tags=None, validate: bool = True, tol: float = 1e-10):
        mu = np.asarray(mu, dtype=np.complex128)
        d = mu.shape[0]
        self.name = name
        self.space = IndexSpace(name, d, basis_tags)
        self._mu0 = _ro(mu.reshape(d, d, d))
        self._eta0 = _ro(np.asarray(eta).reshape(d))
        self._delta0 = _ro(np.asarray(delta, dtype=np.complex128).reshape(d, d, d))
        self._eps0 = _ro(np.asarray(eps).reshape(d))
        self._H = _ro(np.asarray(H).reshape(d))
        self._Hop = _ro(np.einsum("oxy,x->oy", self._mu0, self._H))
        self._gram = None if gram is None else _ro(np.asarray(gram))
        self._zero_cache: dict = {}
        if validate:
            right = np.einsum("oxy,y->ox", self._mu0, self._H)
            if np.abs(right - self._Hop).max() > tol:
                raise RFAError(f"{name}: H is not central")
            rep = check_axioms(self, [(0.0, 0.0)], tol)
            if not rep.ok:
                raise RFAError(f"{name}: Frobenius axioms fail at zero area: {rep.failures()}")

    # base data -------------------------------------------------------------
    @property
    def gram(self):
        return self._gram

    @property
    def H(self) -> np.ndarray:
        return self._H

    @property
    def Hop(self) -> np.ndarray:
        return self._Hop

    def base(self):
        return self._mu0, self._eta0, self._delta0, self._eps0

    _diag = None

    def _is_diag(self) -> bool:
        if self._diag is None:
            off = self._Hop - np.diag(np.diag(self._Hop))
            self._diag = not np.any(off)
        return self._diag

    def P(self, a: float) -> np.ndarray:
        return _semigroup(self, float(a))

    def mu(self, a: float) -> np.ndarray:
        if a == 0:
            return self._mu0
        return np.einsum("om,mxy->oxy", self.P(a), self._mu0)

    def eta(self, a: float) -> np.ndarray:
        return self.P(a) @ self._eta0 if a else self._eta0

    def delta(self, a: float) -> np.ndarray:
        if a == 0:
            return self._delta0
        return np.einsum("pqm,mi->pqi", self._delta0, self.P(a))

    def eps(self, a: float) -> np.ndarray:
        return self._eps0 @ self.P(a) if a else self._eps0


_P_CACHE: dict = {}


def _semigroup(A: FiniteRFA, a: float) -> np.ndarray:
    key = (id(A), a)
    hit = _P_CACHE.get(key)
    if hit is not None and hit[0] is A:
        return hit[1]
    if a == 0:
        out = np.eye(A.dim, dtype=np.complex128)
    elif A._is_diag():
        out = np.diag(np.exp(a * np.diag(A.Hop)))
    else:
        out = sla.expm(a * A.Hop)
    out = _ro(out)
    if len(_P_CACHE) > 4096:
        _P_CACHE.clear()
    _P_CACHE[key] = (A, out)
    return out


class SpectralRFA(FiniteRFA):
    """Direct sum of one-dimensional blocks.

    ``convention='hermitian'`` gives the blocks C_{eps,sigma}
    (mu = e^{-a sigma}/conj(eps), delta = e^{-a sigma}/eps);
    ``convention='example'`` gives the family A_{eps,sigma}
    (mu = eps e^{-a sigma}, eta = e^{-a sigma}/eps, delta = e^{-a sigma}/eps, counit eps e^{-a sigma}).
    """

    zero_area_kinds = frozenset({"mu", "delta", "P"})

    def __init__(self, blocks: Sequence[tuple[complex, float]], *, convention: str = "hermitian",
                 truncation_note: str = "", name: str = "spectral"):
        blocks = [(complex(e), float(s)) for e, s in blocks]
        if not blocks:
            raise RFAError("SpectralRFA needs at least one block")
        for k, (e, _) in enumerate(blocks):
            if e == 0:
                raise RFAError(f"block {k}: eps must be nonzero")
        if convention not in ("hermitian", "example"):
            raise RFAError(f"unknown convention {convention!r}")
        self.blocks = tuple(blocks)
        self.convention = convention
        self.truncation_note = truncation_note
        n = len(blocks)
        mu = np.zeros((n, n, n), dtype=np.complex128)
        delta = np.zeros((n, n, n), dtype=np.complex128)
        eta = np.zeros(n, dtype=np.complex128)
        eps = np.zeros(n, dtype=np.complex128)
        H = np.zeros(n, dtype=np.complex128)
        for k, (e, s) in enumerate(blocks):
            if convention == "hermitian":
                mu[k, k, k] = 1 / np.conj(e)
                eta[k] = np.conj(e)
            else:
                mu[k, k, k] = e
                eta[k] = 1 / e
            delta[k, k, k] = 1 / e
            eps[k] = e
            # mu_0(H (x) e_k) = -sigma e_k
            H[k] = -s / mu[k, k, k]
        super().__init__(mu, eta, delta, eps, H, name=name,
                         basis_tags=tuple(("block", k) for k in range(n)), validate=False)

    def center_basis(self):
        return np.eye(self.dim)


class BlockRFA(FiniteRFA):
    """Truncated direct sum of matrix blocks M_V in the matrix-element basis f^V_ij."""

    zero_area_kinds = frozenset({"mu", "delta", "P"})

    def __init__(self, blocks: Sequence[tuple], *, name: str = "block"):
        blocks = [(lab, int(d), float(s)) for lab, d, s in blocks]
        labels = [b[0] for b in blocks]
        if len(set(labels)) != len(labels):
            raise RFAError("block labels must be distinct")
        for lab, d, _ in blocks:
            if d < 1:
                raise RFAError(f"block {lab!r}: dim must be >= 1")
        self.blocks = tuple(blocks)
        self.offsets = {}
        tags = []
        off = 0
        for lab, d, _ in blocks:
            self.offsets[lab] = off
            tags.extend((lab, i, j) for i in range(d) for j in range(d))
            off += d * d
        n = off
        mu = np.zeros((n, n, n), dtype=np.complex128)
        delta = np.zeros((n, n, n), dtype=np.complex128)
        eta = np.zeros(n, dtype=np.complex128)
        eps = np.zeros(n, dtype=np.complex128)
        H = np.zeros(n, dtype=np.complex128)
        for lab, d, s in blocks:
            o = self.offsets[lab]
            r = d ** -0.5
            for i in range(d):
                eta[o + i * d + i] = d ** 0.5
                eps[o + i * d + i] = d ** 0.5
                H[o + i * d + i] = -s * d ** 0.5
                for j in range(d):
                    for l in range(d):
                        mu[o + i * d + l, o + i * d + j, o + j * d + l] = r
                        delta[o + i * d + j, o + j * d + l, o + i * d + l] = r
        super().__init__(mu, eta, delta, eps, H, name=name, basis_tags=tuple(tags), validate=False)

    @property
    def labels(self):
        return [b[0] for b in self.blocks]

    def block(self, label):
        for b in self.blocks:
            if b[0] == label:
                return b
        raise KeyError(label)

    def index(self, label, i: int, j: int) -> int:
        d = self.block(label)[1]
        return self.offsets[label] + i * d + j

    def character(self, label) -> np.ndarray:
        """chi_V = d^{-1/2} sum_i f^V_ii (unit norm)."""
        _, d, _ = self.block(label)
        v = np.zeros(self.dim, dtype=np.complex128)
        for i in range(d):
            v[self.index(label, i, i)] = d ** -0.5
        return v

    def center_basis(self):
        return np.stack([self.character(lab) for lab in self.labels], axis=1)


def polynomial_rfa(d: int, h: Sequence[complex] | None = None, name: str | None = None) -> FiniteRFA:
    """C[x]/<x^d> with counit eps(x^k) = delta_{k,d-1}; ``h`` are coefficients of H in 1, x, ..."""
    if d < 1:
        raise RFAError("d must be >= 1")
    mu = np.zeros((d, d, d))
    delta = np.zeros((d, d, d))
    for i in range(d):
        for j in range(d):
            if i + j < d:
                mu[i + j, i, j] = 1.0
    for k in range(d):
        for i in range(d):
            j = k + d - 1 - i
            if 0 <= j < d:
                delta[i, j, k] = 1.0
    eta = np.zeros(d)
    eta[0] = 1.0
    eps = np.zeros(d)
    eps[d - 1] = 1.0
    H = np.zeros(d, dtype=np.complex128)
    if h is not None:
        H[: len(h)] = h
    return FiniteRFA(mu, eta, delta, eps, H, name=name or f"C[x]/x^{d}",
                     basis_tags=tuple(("x", k) for k in range(d)))


def nonhermitian_example(kmax: int) -> FiniteRFA:
    """Idempotents f_k with |f_k|^2 = k^2 and P_a f_k = e^{-a k^2} f_k, k <= kmax."""
    n = kmax
    mu = np.zeros((n, n, n))
    delta = np.zeros((n, n, n))
    for k in range(n):
        mu[k, k, k] = 1.0
        delta[k, k, k] = 1.0
    ks = np.arange(1, n + 1, dtype=float)
    gram = np.diag(ks ** 2)
    return FiniteRFA(mu, np.ones(n), delta, np.ones(n), -ks ** 2, gram=gram, name=f"F(k<={kmax})",
                     basis_tags=tuple(("f", int(k)) for k in ks))


def trivial_rfa() -> SpectralRFA:
    return SpectralRFA([(1.0, 0.0)], name="trivial")


def direct_sum(parts: Sequence[FiniteRFA], name: str = "sum") -> FiniteRFA:
    dims = [p.dim for p in parts]
    n = sum(dims)
    mu = np.zeros((n, n, n), dtype=np.complex128)
    delta = np.zeros((n, n, n), dtype=np.complex128)
    eta = np.zeros(n, dtype=np.complex128)
    eps = np.zeros(n, dtype=np.complex128)
    H = np.zeros(n, dtype=np.complex128)
    grams = []
    off = 0
    for p in parts:
        m0, e0, d0, c0 = p.base()
        s = slice(off, off + p.dim)
        mu[s, s, s] = m0
        delta[s, s, s] = d0
        eta[s] = e0
        eps[s] = c0
        H[s] = p.H
        grams.append(np.eye(p.dim) if p.gram is None else p.gram)
        off += p.dim
    gram = None if all(p.gram is None for p in parts) else sla.block_diag(*grams)
    return FiniteRFA(mu, eta, delta, eps, H, gram=gram, name=name, validate=False)


# structure maps -----------------------------------------------------------

def structure_map(A: RFA, kind: str, a: float) -> LinearMap:
    if kind not in KINDS:
        raise RFAError(f"unknown structure map {kind!r}")
    if a < 0:
        raise RFAError("area must be non-negative")
    if a == 0 and kind not in A.zero_area_kinds:
        raise NoZeroAreaLimit(kind, A.name)
    S = A.space
    d = A.dim
    if kind == "mu":
        return LinearMap.from_matrix(A.mu(a).reshape(d, d * d), (S,), (S, S))
    if kind == "eta":
        return LinearMap.from_matrix(A.eta(a).reshape(d, 1), (S,), ())
    if kind == "delta":
        return LinearMap.from_matrix(A.delta(a).reshape(d * d, d), (S, S), (S,))
    if kind == "eps":
        return LinearMap.from_matrix(A.eps(a).reshape(1, d), (), (S,))
    return LinearMap.from_matrix(A.P(a), (S,), (S,))


# axiom checking ------------------------------------------------------------

@dataclass
class AxiomReport:
    tol: float
    defects: dict = field(default_factory=dict)

    def record(self, name: str, value: float):
        self.defects[name] = max(self.defects.get(name, 0.0), float(value))

    @property
    def ok(self) -> bool:
        return all(v <= self.tol for v in self.defects.values())

    def failures(self) -> dict:
        return {k: v for k, v in self.defects.items() if v > self.tol}

    def __str__(self) -> str:
        lines = [f"{'PASS' if v <= self.tol else 'FAIL'} {k}: {v:.3e}" for k, v in sorted(self.defects.items())]
        return "\n".join(lines)


def _mx(x: np.ndarray) -> float:
    return float(np.abs(x).max()) if x.size else 0.0


def check_axioms(A: RFA, areas: Iterable[tuple[float, float]], tol: float = 1e-10) -> AxiomReport:
    """Verify the regularised Frobenius relations on sampled area splittings.

    Each sample ``(a1, a2)`` is compared against the swapped splitting
    ``(a2, a1)`` of the same total, so area additivity is exercised too.
    """
    rep = AxiomReport(tol)
    d = A.dim
    eye = np.eye(d)
    areas = list(areas)
    if not areas:
        raise RFAError("check_axioms needs at least one area sample")
    for a1, a2 in areas:
        b1, b2 = a2, a1
        s = a1 + a2
        Ps = A.P(s)
        mu1, mu2, mb1, mb2 = A.mu(a1), A.mu(a2), A.mu(b1), A.mu(b2)
        de1, de2, db1, db2 = A.delta(a1), A.delta(a2), A.delta(b1), A.delta(b2)
        et2, ep1 = A.eta(a2), A.eps(a1)
        rep.record("unit_left", _mx(np.einsum("oxy,x->oy", mu1, et2) - Ps))
        rep.record("unit_right", _mx(np.einsum("oxy,y->ox", mu1, et2) - Ps))
        lhs = np.einsum("omz,mxy->oxyz", mu1, mu2)
        rhs = np.einsum("oxm,myz->oxyz", mb1, mb2)
        rep.record("associativity", _mx(lhs - rhs))
        lhs = np.einsum("pqm,mri->pqri", de2, de1)
        rhs = np.einsum("pmi,qrm->pqri", db2, db1)
        rep.record("coassociativity", _mx(lhs - rhs))
        rep.record("counit_left", _mx(np.einsum("p,pqi->qi", ep1, de2) - Ps))
        rep.record("counit_right", _mx(np.einsum("q,pqi->pi", ep1, de2) - Ps))
        f1 = np.einsum("pmx,qmy->pqxy", de2, mu1)
        f2 = np.einsum("pqm,mxy->pqxy", db1, mb2)
        f3 = np.einsum("pxm,mqy->pqxy", mu1, de2)
        rep.record("frobenius", max(_mx(f1 - f2), _mx(f3 - f2)))
        rep.record("semigroup", _mx(A.P(a1) @ A.P(a2) - Ps))
    rep.record("zero_limit", _mx(A.P(1e-13) - eye))
    return rep


def _adjoint(T: np.ndarray, g_in, g_out) -> np.ndarray:
    """Adjoint of a matrix T: V -> W with metrics g_in on V and g_out on W."""
    Th = T.conj().T
    if g_in is None and g_out is None:
        return Th
    gi = np.eye(T.shape[1]) if g_in is None else g_in
    go = np.eye(T.shape[0]) if g_out is None else g_out
    return np.linalg.solve(gi, Th @ go)


def check_hermitian(A: RFA, a: float, tol: float = 1e-12) -> dict:
    """Defects of mu_a^dagger = delta_a and eta_a^dagger = eps_a."""
    d = A.dim
    g = A.gram
    g2 = None if g is None else np.kron(g, g)
    mu = A.mu(a).reshape(d, d * d)
    de = A.delta(a).reshape(d * d, d)
    mud = _adjoint(mu, g2, g)
    eta = A.eta(a).reshape(d, 1)
    etad = _adjoint(eta, np.eye(1), g)
    P = A.P(a)
    return {
        "mu_dagger": _mx(mud - de),
        "eta_dagger": _mx(etad.reshape(-1) - A.eps(a)),
        "P_dagger": _mx(_adjoint(P, g, g) - P),
    }


def is_hermitian(A: RFA, a: float = 0.5, tol: float = 1e-10) -> bool:
    return max(check_hermitian(A, a, tol).values()) <= tol


def check_morphism(f: np.ndarray, A: RFA, B: RFA, a: float, tol: float = 1e-10) -> AxiomReport:
    """Defects of f: A -> B being an RFA morphism at area a."""
    rep = AxiomReport(tol)
    f = np.asarray(f, dtype=np.complex128)
    lhs = np.einsum("om,mxy->oxy", f, A.mu(a))
    rhs = np.einsum("omn,mx,ny->oxy", B.mu(a), f, f)
    rep.record("mu", _mx(lhs - rhs))
    rep.record("eta", _mx(f @ A.eta(a) - B.eta(a)))
    lhs = np.einsum("pqm,mi->pqi", B.delta(a), f)
    rhs = np.einsum("pm,qn,mni->pqi", f, f, A.delta(a))
    rep.record("delta", _mx(lhs - rhs))
    rep.record("eps", _mx(B.eps(a) @ f - A.eps(a)))
    return rep


def is_symmetric(A: RFA, a: float = 0.5, tol: float = 1e-10) -> bool:
    pair = np.einsum("m,mxy->xy", A.eps(a), A.mu(0.0))
    return _mx(pair - pair.T) <= tol


# window element and centre ------------------------------------------------

def window_element(A: RFA, a: float) -> np.ndarray:
    """tau_a = mu_{a/3} delta_{a/3} eta_{a/3}."""
    t = a / 3.0
    return np.einsum("oxy,xym,m->o", A.mu(t), A.delta(t), A.eta(t))


def left_multiplication(A: RFA, z: np.ndarray, a: float = 0.0) -> np.ndarray:
    return np.einsum("oxy,x->oy", A.mu(a), z)


def window_inverse(A: RFA, a: float = 0.0, tol: float = 1e-10) -> np.ndarray | None:
    """z_a = P_a(tau_0^{-1}); ``None`` if tau_0 is not invertible."""
    tau0 = window_element(A, 0.0)
    L = left_multiplication(A, tau0)
    eta0 = A.eta(0.0)
    z, *_ = np.linalg.lstsq(L, eta0, rcond=None)
    resid = np.linalg.norm(L @ z - eta0)
    if not np.isfinite(resid) or resid > tol * max(1.0, np.linalg.norm(eta0)):
        return None
    # uniqueness: tau_0 invertible means L is invertible
    if np.linalg.matrix_rank(L, tol=1e-9 * max(1.0, np.abs(L).max())) < A.dim:
        return None
    return A.P(a) @ z if a else z


def is_strongly_separable(A: RFA) -> bool:
    return window_inverse(A) is not None


ZERO_LIMIT_SAMPLES = (1e-3, 1e-4, 1e-5)


@dataclass
class LimitReport:
    samples: tuple
    differences: tuple
    limit_gap: float

    @property
    def cauchy(self) -> bool:
        d = self.differences
        return all(d[k + 1] <= d[k] * 1.0000001 + 1e-15 for k in range(len(d) - 1))


def zero_limit(fn: Callable[[float], np.ndarray], samples=ZERO_LIMIT_SAMPLES):
    """Sample ``fn`` on a decreasing area schedule, check Cauchy behaviour,
    and return the exact value at zero with the report.

    In the finite models every map is an entire function of the areas, so the
    zero-area value is the limit; the samples certify convergence."""
    vals = [np.asarray(fn(s)) for s in samples]
    diffs = tuple(_mx(vals[k] - vals[k + 1]) for k in range(len(vals) - 1))
    v0 = np.asarray(fn(0.0))
    rep = LimitReport(tuple(samples), diffs, _mx(vals[-1] - v0))
    if not rep.cauchy:
        raise RFAError(f"zero-area limit is not Cauchy on the sample schedule: {diffs}")
    return v0, rep


def cylinder_idempotent_matrix(A: RFA, a: float) -> np.ndarray:
    """D_a = zeta_{a/3} mu_{a/3} swap delta_{a/3}."""
    t = a / 3.0
    z = window_inverse(A, t)
    if z is None:
        raise NotStronglySeparable(f"{A.name}: window element is not invertible")
    zeta = left_multiplication(A, z)
    return np.einsum("om,myz,zyx->ox", zeta, A.mu(t), A.delta(t))


def restrict(A: RFA, inj: np.ndarray, proj: np.ndarray, name: str, a_ref: float = 1.0) -> FiniteRFA:
    """Restrict the structure maps of A to the image of ``inj`` (with left inverse ``proj``)."""
    mu0 = np.einsum("om,mxy,xi,yj->oij", proj, A.mu(0.0), inj, inj)
    delta0 = np.einsum("pm,qn,mni,ij->pqj", proj, proj, A.delta(0.0), inj)
    eta0 = proj @ A.eta(0.0)
    eps0 = A.eps(0.0) @ inj
    if isinstance(A, FiniteRFA):
        H = proj @ A.H
    else:
        Hop = proj @ ((A.P(a_ref) - A.P(0.0)) / a_ref) @ inj
        H = Hop @ eta0
    g = inj.conj().T @ (np.eye(A.dim) if A.gram is None else A.gram) @ inj
    gram = None if np.abs(g - np.eye(len(g))).max() < 1e-12 else g
    out = FiniteRFA(mu0, eta0, delta0, eps0, H, gram=gram, name=name, validate=False)
    out.embedding = (np.asarray(inj), np.asarray(proj))
    return out


def _minimal_idempotents(Z: FiniteRFA, seed: int = 0, tol: float = 1e-9):
    """Minimal idempotents of a commutative semisimple algebra (columns)."""
    r = Z.dim
    mu0 = Z.base()[0]
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(r) + 1j * rng.standard_normal(r)
    L = np.einsum("oxy,x->oy", mu0, c)
    w, V = np.linalg.eig(L)
    out = []
    for k in range(r):
        u = V[:, k]
        uu = np.einsum("oxy,x,y->o", mu0, u, u)
        j = int(np.argmax(np.abs(u)))
        lam = uu[j] / u[j]
        if abs(lam) < tol:
            raise RFAError("centre is not semisimple")
        p = u / lam
        pp = np.einsum("oxy,x,y->o", mu0, p, p)
        if _mx(pp - p) > 1e-8 * max(1.0, _mx(p)):
            raise RFAError("centre is not semisimple")
        out.append(p)
    return np.stack(out, axis=1)


def center(A: RFA, tol: float = 1e-10):
    """Centre of a strongly separable symmetric RFA.

    Returns ``(Z, proj, inj)`` where ``Z`` is a SpectralRFA (hermitian
    convention) when the centre splits into orthogonal one-dimensional blocks,
    otherwise a FiniteRFA on the image of D_0.
    """
    if not is_strongly_separable(A):
        raise NotStronglySeparable(f"{A.name}: window element is not invertible")
    if not is_symmetric(A, tol=max(tol, 1e-10)):
        raise RFAError(f"{A.name}: not symmetric")
    D0, _ = zero_limit(lambda s: cylinder_idempotent_matrix(A, s))
    S = A.space
    Dmap = LinearMap.from_matrix(D0, (S,), (S,))
    proj, inj, rank = split_idempotent(Dmap, tol, basis=A.center_basis(), label=f"Z({A.name})")
    if rank == 0:
        raise RFAError("centre is zero")
    I = inj.to_matrix()
    Pm = proj.to_matrix()
    Zf = restrict(A, I, Pm, f"Z({A.name})")
    try:
        ps = _minimal_idempotents(Zf)
    except RFAError:
        return Zf, proj, inj
    gramZ = np.eye(rank) if Zf.gram is None else Zf.gram
    norms = np.sqrt(np.real(np.einsum("xk,xy,yk->k", ps.conj(), gramZ, ps)))
    B = ps / norms
    # order blocks by their position in the carrier
    pos = [int(np.argmax(np.abs(I @ B[:, k]) > 1e-9)) for k in range(rank)]
    order = sorted(range(rank), key=lambda k: (pos[k], k))
    B = B[:, order]
    norms = norms[order]
    PZ = Zf.P(1.0)
    sig = []
    for k in range(rank):
        lam = (np.linalg.lstsq(B[:, [k]], PZ @ B[:, k], rcond=None)[0])[0]
        if abs(lam.imag) > 1e-9 or lam.real <= 0:
            return Zf, proj, inj
        sig.append(-math.log(lam.real) + 0.0)
    Z = SpectralRFA([(float(nrm), s) for nrm, s in zip(norms, sig)], name=f"Z({A.name})")
    Binv = np.linalg.inv(B)
    zspace = Z.space
    inj2 = LinearMap.from_matrix(I @ B, (S,), (zspace,))
    proj2 = LinearMap.from_matrix(Binv @ Pm, (zspace,), (S,))
    # the restricted maps must agree with the block formulas
    Zb = restrict(A, I @ B, Binv @ Pm, Z.name)
    for a in (0.0, 0.7):
        if max(_mx(Zb.mu(a) - Z.mu(a)), _mx(Zb.delta(a) - Z.delta(a)),
               _mx(Zb.eta(a) - Z.eta(a)), _mx(Zb.eps(a) - Z.eps(a))) > 1e-8:
            return Zf, proj, inj
    return Z, proj2, inj2


def dagger_decompose(A: FiniteRFA, a: float, tol: float = 1e-10, *, refine: bool = False):
    """Split a Hermitian RFA into eigenblocks of P_a.

    Returns a list of ``(block, sigma)``.  With ``refine=True`` every
    eigenblock is further split into its simple summands.
    """
    defects = check_hermitian(A, a)
    if max(defects.values()) > tol:
        raise NotHermitian(f"{A.name}: Hermitian precheck failed {defects}")
    P = A.P(a)
    g = A.gram
    if g is None:
        w, V = np.linalg.eigh(0.5 * (P + P.conj().T))
    else:
        w, V = sla.eigh(g @ P, g)
    if np.any(w <= 0):
        raise RFAError("P_a has a non-positive eigenvalue")
    if np.any(w < 1e-300):
        raise RFAError("eigenvalue of P_a below usable range (1e-300)")
    order = np.argsort(-w, kind="stable")
    w, V = w[order], V[:, order]
    groups = []
    for k in range(len(w)):
        if groups and abs(w[k] - w[groups[-1][0]]) <= 1e-9 * w[groups[-1][0]]:
            groups[-1].append(k)
        else:
            groups.append([k])
    out = []
    gm = np.eye(A.dim) if g is None else g
    for gi, idx in enumerate(groups):
        U = V[:, idx]
        Pinv = U.conj().T @ gm
        sigma = -math.log(float(np.mean(w[idx]))) / a
        block = restrict(A, U, Pinv, f"{A.name}[{gi}]")
        if refine:
            for sub in _simple_summands(block):
                if sub is block:
                    out.append((block, sigma))
                    continue
                si, sp_ = sub.embedding
                sub.embedding = (U @ si, sp_ @ Pinv)
                out.append((sub, sigma))
        else:
            out.append((block, sigma))
    _check_reconstruction(A, out, tol)
    return out


def _simple_summands(B: FiniteRFA):
    d = B.dim
    mu0 = B.base()[0]
    # centre = {z : z x = x z}
    rows = []
    for x in range(d):
        rows.append(mu0[:, :, x] - mu0[:, x, :])
    M = np.concatenate(rows, axis=0)
    _, s, vh = np.linalg.svd(M)
    null = vh[np.sum(s > 1e-9):].conj().T
    if null.shape[1] <= 1:
        return [B]
    Zpi = np.linalg.pinv(null)
    Zalg = restrict(B, null, Zpi, "Zc")
    ps = null @ _minimal_idempotents(Zalg)
    out = []
    gm = np.eye(d) if B.gram is None else B.gram
    for k in range(ps.shape[1]):
        Le = np.einsum("oxy,x->oy", mu0, ps[:, k])
        u, s, _ = np.linalg.svd(Le)
        U = u[:, : int(np.sum(s > 1e-9))]
        out.append(restrict(B, U, U.conj().T @ gm, f"{B.name}.{k}"))
    return out


def _check_reconstruction(A: FiniteRFA, parts, tol: float):
    mu0, eta0, delta0, eps0 = A.base()
    mu = np.zeros_like(mu0)
    delta = np.zeros_like(delta0)
    eta = np.zeros_like(eta0)
    eps = np.zeros_like(eps0)
    for block, _ in parts:
        U, Pi = block.embedding
        m, e, dl, c = block.base()
        mu = mu + np.einsum("om,mxy,xi,yj->oij", U, m, Pi, Pi)
        delta = delta + np.einsum("pm,qn,mnk,ki->pqi", U, U, dl, Pi)
        eta = eta + U @ e
        eps = eps + c @ Pi
    err = max(_mx(mu - mu0), _mx(delta - delta0), _mx(eta - eta0), _mx(eps - eps0))
    if err > max(tol, 1e-9):
        raise RFAError(f"blocks do not reconstruct the algebra (defect {err:.2e})")


# products and convergence ---------------------------------------------------

def tensor_rfa(A: RFA, B: RFA, name: str | None = None) -> FiniteRFA:
    """A (x) B with the middle-swap convention; carrier index k*dim(B) + l."""
    name = name or f"{A.name}⊗{B.name}"
    if isinstance(A, SpectralRFA) and isinstance(B, SpectralRFA) and A.convention == B.convention:
        blocks = [(ea * eb, sa + sb) for ea, sa in A.blocks for eb, sb in B.blocks]
        return SpectralRFA(blocks, convention=A.convention, name=name)
    da, db = A.dim, B.dim
    mua, etaa, dea, epsa = A.mu(0.0), A.eta(0.0), A.delta(0.0), A.eps(0.0)
    mub, etab, deb, epsb = B.mu(0.0), B.eta(0.0), B.delta(0.0), B.eps(0.0)
    n = da * db
    mu = np.einsum("oxy,pzw->opxzyw", mua, mub).reshape(n, n, n)
    delta = np.einsum("oxi,pyj->opxyij", dea, deb).reshape(n, n, n)
    eta = np.kron(etaa, etab)
    eps = np.kron(epsa, epsb)
    Ha = A.H if isinstance(A, FiniteRFA) else ((A.P(1.0) - A.P(0.0)) @ etaa)
    Hb = B.H if isinstance(B, FiniteRFA) else ((B.P(1.0) - B.P(0.0)) @ etab)
    H = np.kron(Ha, etab) + np.kron(etaa, Hb)
    gram = None
    if A.gram is not None or B.gram is not None:
        ga = np.eye(da) if A.gram is None else A.gram
        gb = np.eye(db) if B.gram is None else B.gram
        gram = np.kron(ga, gb)
    return FiniteRFA(mu, eta, delta, eps, H, gram=gram, name=name, validate=False)


@dataclass
class ConvergenceReport:
    a: float
    cutoffs: tuple
    sup_values: tuple
    sum_values: tuple
    tails: tuple
    divergent: bool

    def __str__(self) -> str:
        rows = [f"N={n}: sup={s:.10g} sum={t:.10g} tail={e:.3e}"
                for n, s, t, e in zip(self.cutoffs, self.sup_values, self.sum_values, self.tails)]
        rows.append("DIVERGENT" if self.divergent else "converged")
        return "\n".join(rows)


def spectral_convergence_report(family, a: float, cutoffs: Sequence[int], rtol: float = 1e-6) -> ConvergenceReport:
    """Partial values of sup_k e^{-a s_k}/|e_k| and sum_k e^{-2 a s_k}|e_k|^2.

    ``family`` maps k = 1, 2, ... to ``(eps_k, sigma_k)``.  The tail estimate at a
    cutoff is the change since the previous cutoff; the sum is flagged
    divergent if the last change exceeds ``rtol`` relative and does not shrink.
    """
    cutoffs = sorted(int(c) for c in cutoffs)
    if a < 0:
        raise RFAError("a must be >= 0")
    kmax = cutoffs[-1]
    eps = np.empty(kmax, dtype=np.complex128)
    sig = np.empty(kmax)
    for k in range(1, kmax + 1):
        e, s = family(k)
        eps[k - 1], sig[k - 1] = e, s
    terms_sup = np.exp(-a * sig) / np.abs(eps)
    terms_sum = np.exp(-2 * a * sig) * np.abs(eps) ** 2
    sups, sums, tails = [], [], []
    prev = 0.0
    for n in cutoffs:
        sups.append(float(terms_sup[:n].max()))
        s = float(math.fsum(terms_sum[:n]))
        sums.append(s)
        tails.append(abs(s - prev))
        prev = s
    divergent = False
    if len(cutoffs) >= 2:
        last, before = tails[-1], tails[-2]
        scale = max(abs(sums[-1]), 1e-300)
        widths = [cutoffs[k] - (cutoffs[k - 1] if k else 0) for k in range(len(cutoffs))]
        per_last = last / widths[-1]
        per_before = before / widths[-2]
        if last > rtol * scale and per_last >= 0.5 * per_before:
            divergent = True
    return ConvergenceReport(a, tuple(cutoffs), tuple(sups), tuple(sums), tuple(tails), divergent)
