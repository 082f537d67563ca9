"""State-sum data, the state-sum evaluation of PLCW complexes and the
closed-form amplitudes of normal-form surfaces.

A face contributes a plaquette weight with one leg per side (counterclockwise
from the marked side), every edge that is not outgoing contributes a
contraction, and every vertex that is not on an outgoing circle contributes a
vertex weight.  Faces crossed by a defect line carry the weight
``W^{x,n,m}`` whose legs are ordered ``[Xbar (exit), t-sides, X (entry),
s-sides]``.  Boundary circles are evaluated on the images of the zero-area
cylinder idempotents ``D_0`` (no defect points) or ``E_0`` (a defect list).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla

from .bimodule import (DualPair, check_dual_pair, dual_bimodule, group_automorphism_matrix, tensor_product,
                       twisted_pair, wilson, wilson_pair)
from .bordism import (BordismError, DefectConditions, PlcwComplex, crossed_edge_vertices, defect_cylinder,
                      defect_list, face_side_kinds, normal_form, side_phase, topological_components, validate)
from .rfa import (RFA, AxiomReport, FiniteRFA, NotStronglySeparable, RFAError, left_multiplication,
                  window_inverse, zero_limit)
from .tensor_core import IndexSpace, LinearMap, Tensor, contract, split_idempotent

# plaquettes with at least this many legs are built as chains of triangles
FACTOR_MIN = 5
E0_TOL = 1e-8


class StateSumError(ValueError):
    pass


class ConditionFailure(StateSumError):
    def __init__(self, report: AxiomReport):
        self.report = report
        super().__init__(f"state-sum conditions fail: {report.failures()}")


def _dense(t) -> np.ndarray:
    return t.to_dense() if isinstance(t, Tensor) else np.asarray(t)


def _mx(x) -> float:
    x = np.asarray(x)
    return float(np.abs(x).max()) if x.size else 0.0


# state-sum data -------------------------------------------------------------------------

class StateSumData:
    """Contraction ``beta(a)``, vertex weight ``zeta(a)`` and plaquette weights ``plaquette(k, a)``."""

    name = "data"
    space: IndexSpace
    factorizable = False

    @property
    def dim(self) -> int:
        return self.space.dim

    def zeta(self, a: float) -> np.ndarray:
        raise NotImplementedError

    def beta(self, a: float) -> np.ndarray:
        raise NotImplementedError

    def plaquette(self, k: int, a: float) -> Tensor:
        raise NotImplementedError

    def center_basis(self):
        return None

    # derived maps -------------------------------------------------------------
    def window(self, a: float) -> np.ndarray:
        """The element ``zeta_a(W^1_0)``; vertex weights multiply by it."""
        return self.zeta(a) @ _dense(self.plaquette(1, 0.0))

    def P(self, a: float) -> np.ndarray:
        h = a / 2.0
        return _dense(self.plaquette(2, h)) @ self.beta(h)

    def D(self, a: float) -> np.ndarray:
        """Single-square cylinder: output side 1, seam sides 2 and 4, input side 3."""
        q = a / 4.0
        W = _dense(self.plaquette(4, q))
        B = self.beta(q)
        return self.zeta(q) @ np.einsum("oacb,ab,cx->ox", W, B, B)

    def plaquette_nodes(self, k: int, a: float, labels: Sequence, fresh: Callable) -> list:
        """Tensor-network pieces of ``W^k_a`` with open legs ``labels``."""
        labels = list(labels)
        if not self.factorizable or k < FACTOR_MIN:
            return [(self.plaquette(k, a), labels)]
        # W^k = W^3_a -b- W^3_0 -b- ... -b- W^3_0 by the gluing condition
        link = self._link()
        nodes = []
        prev = fresh()
        nodes.append((self.plaquette(3, a), [labels[0], labels[1], prev]))
        for j in range(2, k - 2):
            nxt = fresh()
            nodes.append((link, [prev, labels[j], nxt]))
            prev = nxt
        nodes.append((link, [prev, labels[k - 2], labels[k - 1]]))
        return nodes

    def _link(self) -> Tensor:
        cache = self.__dict__.setdefault("_cache", {})
        if "link" not in cache:
            B = Tensor.from_dense(self.beta(0.0), [self.space, self.space])
            cache["link"] = contract(B, self.plaquette(3, 0.0), [(1, 0)])
        return cache["link"]

    # centre --------------------------------------------------------------------
    def center_split(self):
        """``(proj, inj, rank)`` of the zero-area cylinder, computed once."""
        cache = self.__dict__.setdefault("_cache", {})
        if "center" not in cache:
            cache["center"] = _center_split(self)
        return cache["center"]

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name!r}, dim={self.dim})"


class RfaData(StateSumData):
    """State-sum data of a strongly separable symmetric RFA.

    ``zeta_a`` multiplies by ``P_a`` of the inverse window element,
    ``beta_a = eps mu_a`` and ``W^k_a = Delta^{(k)} eta_a``."""

    def __init__(self, A: RFA, *, literal: bool = False, name: str | None = None):
        z = window_inverse(A, 0.0)
        if z is None:
            raise NotStronglySeparable(f"{A.name}: not strongly separable (window element is not invertible)")
        self.rfa = A
        self.name = name or f"Omega({A.name})"
        self.space = A.space
        self.factorizable = not literal
        self._z0 = z
        self._cache = {}
        d = A.dim
        self._mu0 = np.asarray(A.mu(0.0))
        self._eps0 = np.asarray(A.eps(0.0))
        self._delta_t = Tensor.from_dense(np.asarray(A.delta(0.0)), [self.space] * 3)
        self._eta_t = Tensor.from_dense(np.asarray(A.eta(0.0)), [self.space])
        self._zeros = {1: self._eta_t}
        del d

    def window(self, a: float) -> np.ndarray:
        return self.rfa.P(a) @ self._z0 if a else self._z0

    def zeta(self, a: float) -> np.ndarray:
        return left_multiplication(self.rfa, self.window(a))

    def beta(self, a: float) -> np.ndarray:
        mu = self.rfa.mu(a) if a else self._mu0
        return np.einsum("o,oxy->xy", self._eps0, mu)

    def _plaquette0(self, k: int) -> Tensor:
        if k < 1:
            raise StateSumError("plaquette weights need k >= 1")
        top = max(self._zeros)
        while top < k:
            prev = self._zeros[top]
            self._zeros[top + 1] = contract(prev, self._delta_t, [(top - 1, 2)])
            top += 1
        return self._zeros[k]

    def plaquette(self, k: int, a: float) -> Tensor:
        W = self._plaquette0(k)
        if not a:
            return W
        key = ("W", k, float(a))
        if key not in self._cache:
            P = Tensor.from_dense(self.rfa.P(a), [self.space, self.space])
            t = contract(P, W, [(1, 0)])
            if len(self._cache) > 512:
                self._cache = {k2: v for k2, v in self._cache.items() if k2[0] != "W"}
            self._cache[key] = t
        return self._cache[key]

    def center_basis(self):
        return self.rfa.center_basis()


class ExplicitData(StateSumData):
    """State-sum data given by callables (hand-built or deliberately corrupted)."""

    def __init__(self, space: IndexSpace, zeta: Callable, beta: Callable, plaquette: Callable, *,
                 name: str = "explicit", center_basis=None, factorizable: bool = False):
        self.space = space
        self.name = name
        self._zeta, self._beta, self._plaq = zeta, beta, plaquette
        self._basis = center_basis
        self.factorizable = factorizable
        self._cache = {}

    def zeta(self, a):
        return np.asarray(self._zeta(a), dtype=np.complex128)

    def beta(self, a):
        return np.asarray(self._beta(a), dtype=np.complex128)

    def plaquette(self, k, a):
        w = self._plaq(k, a)
        return w if isinstance(w, Tensor) else Tensor.from_dense(np.asarray(w), [self.space] * k)

    def center_basis(self):
        return self._basis


def corrupt(d: StateSumData, kind: str, k: int = 3, entry=None, size: float = 1e-3) -> ExplicitData:
    """Copy of ``d`` with a single entry of ``zeta``, ``beta`` or ``W^k`` shifted by ``size``."""
    n = d.dim
    if kind == "plaquette":
        idx = tuple(entry) if entry is not None else tuple(range(min(k, n)))[:k] + (0,) * max(0, k - n)

        def plaq(kk, a, _d=d):
            w = _dense(_d.plaquette(kk, a)).copy()
            if kk == k:
                w[idx] += size
            return w
        return ExplicitData(d.space, d.zeta, d.beta, plaq, name=f"{d.name}+fault(W{k})",
                            center_basis=d.center_basis())
    idx = tuple(entry) if entry is not None else (0, 1 % n)
    if kind == "beta":
        def beta(a, _d=d):
            b = _d.beta(a).copy()
            b[idx] += size
            return b
        return ExplicitData(d.space, d.zeta, beta, d.plaquette, name=f"{d.name}+fault(beta)",
                            center_basis=d.center_basis())
    if kind == "zeta":
        def zeta(a, _d=d):
            z = _d.zeta(a).copy()
            z[idx] += size
            return z
        return ExplicitData(d.space, zeta, d.beta, d.plaquette, name=f"{d.name}+fault(zeta)",
                            center_basis=d.center_basis())
    raise StateSumError(f"unknown fault kind {kind!r}")


def data_from_rfa(A: RFA, *, literal: bool = False) -> RfaData:
    return RfaData(A, literal=literal)


class DataRFA(FiniteRFA):
    """The RFA read off from state-sum data.

    ``eta_a = W^1_a``, ``mu(x, y) = W^3`` with legs 3 and 2 paired against
    ``x`` and ``y``, ``Delta(x) = W^3`` with leg 3 paired against ``x`` and
    ``eps(x) = beta(W^1, x)``."""

    def __init__(self, d: StateSumData, name: str | None = None):
        B0 = d.beta(0.0)
        W1 = _dense(d.plaquette(1, 0.0))
        W3 = _dense(d.plaquette(3, 0.0))
        mu0 = np.einsum("owv,vx,wy->oxy", W3, B0, B0)
        delta0 = np.einsum("pqw,wx->pqx", W3, B0)
        eps0 = W1 @ B0
        self._data = d
        P1 = np.einsum("oxy,x->oy", mu0, _dense(d.plaquette(1, 1.0)))
        Hop = sla.logm(P1) if _mx(P1 - np.eye(len(P1))) > 0 else np.zeros_like(P1)
        H = Hop @ W1
        super().__init__(mu0, W1, delta0, eps0, H, name=name or f"kappa({d.name})",
                         basis_tags=d.space.basis_tags, validate=False)

    def P(self, a: float) -> np.ndarray:
        if not a:
            return np.eye(self.dim, dtype=np.complex128)
        return np.einsum("oxy,x->oy", self._mu0, _dense(self._data.plaquette(1, a)))

    def center_basis(self):
        return self._data.center_basis()


def rfa_from_data(d: StateSumData, *, check: bool = True, tol: float = 1e-9) -> DataRFA:
    if check:
        rep = check_conditions(d, tol=tol)
        if not rep.ok:
            raise ConditionFailure(rep)
    return DataRFA(d)


# condition checks -----------------------------------------------------------------------

_GLUE_PAIRS = ((1, 2), (2, 1), (2, 2), (3, 2), (2, 3), (3, 3))


def _glue(Wp: np.ndarray, B: np.ndarray, Wq: np.ndarray) -> np.ndarray:
    """Pair the last leg of ``Wp`` with the first leg of ``Wq`` through ``B``."""
    t = np.tensordot(Wp, B, axes=([Wp.ndim - 1], [0]))
    return np.tensordot(t, Wq, axes=([t.ndim - 1], [0]))


def check_conditions(d, areas: Sequence[tuple] = ((0.3, 0.2, 0.1), (0.05, 0.4, 0.25)),
                     tol: float = 1e-10, *, hermitian: bool | None = None, kmax: int = 4) -> AxiomReport:
    """Maximal defect of each defining condition at the sampled areas."""
    if isinstance(d, DefectStateSumData):
        return check_defect_conditions(d, areas=areas, tol=tol)
    rep = AxiomReport(tol)
    W = {}

    def w(k, a):
        if (k, a) not in W:
            W[(k, a)] = _dense(d.plaquette(k, a))
        return W[(k, a)]

    for (a, b, c) in areas:
        for k in range(1, kmax + 1):
            x = w(k, a)
            rep.record("cyclic", _mx(x - np.moveaxis(x, 0, -1)))
        for p, q in _GLUE_PAIRS:
            if p + q - 2 > kmax:
                continue
            g = _glue(w(p, a), d.beta(c), w(q, b))
            rep.record("gluing", _mx(g - w(p + q - 2, a + b + c)))
        for n in (1, 2):
            Wn = w(n + 2, a)
            Bz = d.zeta(c).T @ d.beta(0.0)
            g = np.tensordot(Wn, Bz, axes=([n, n + 1], [0, 1]))
            rep.record("bubble", _mx(g - w(n, a + c)))
        Z = d.zeta(c)
        W3 = w(3, a)
        on0 = np.einsum("ox,xyz->oyz", Z, W3)
        on1 = np.einsum("oy,xyz->xoz", Z, W3)
        on2 = np.einsum("oz,xyz->xyo", Z, W3)
        rep.record("zeta_transport", max(_mx(on0 - on1), _mx(on0 - on2)))
        B = d.beta(b)
        rep.record("zeta_transport", _mx(Z.T @ B - B @ Z))
        rep.record("P_semigroup", _mx(d.P(a) @ d.P(b) - d.P(a + b)))
        rep.record("D_semigroup", _mx(d.D(a) @ d.D(b) - d.D(a + b)))
    rep.record("P_zero", _mx(d.P(0.0) - np.eye(d.dim)))
    try:
        _, lim = zero_limit(d.P)
        rep.record("P_limit", 0.0 if lim.cauchy else math.inf)
        D0, lim = zero_limit(d.D)
        rep.record("D_limit", 0.0 if lim.cauchy else math.inf)
        rep.record("D0_idempotent", _mx(D0 @ D0 - D0))
    except RFAError:
        rep.record("D_limit", math.inf)
    herm = hermitian if hermitian is not None else _is_hermitian_source(d)
    if herm:
        for (a, _, _) in areas:
            Z = d.zeta(a)
            rep.record("hermitian_zeta", _mx(Z - Z.conj().T))
            rep.record("hermitian_beta", _mx(d.beta(a).conj() - w(2, a)))
    return rep


def _is_hermitian_source(d) -> bool:
    A = getattr(d, "rfa", None)
    if A is None or A.gram is not None:
        return False
    from .rfa import is_hermitian
    try:
        return is_hermitian(A)
    except RFAError:
        return False


# defect data ----------------------------------------------------------------------------

class DefectStateSumData:
    """Per phase label state-sum data; per defect label a dual pair of bimodules.

    ``defects[x] = (pair, t, s)`` where ``pair.U`` is an ``A_t``-``A_s``
    bimodule carrying the object ``X_x`` and ``pair.V`` carries ``Xbar_x``."""

    def __init__(self, phases: dict, defects: dict | None = None, *, name: str = "defect-data"):
        self.name = name
        self.phases = {}
        for p, v in phases.items():
            self.phases[p] = v if isinstance(v, StateSumData) else RfaData(v)
        self.defects = {}
        for x, (pair, t, s) in (defects or {}).items():
            if t not in self.phases or s not in self.phases:
                raise StateSumError(f"defect {x!r}: unknown phase {t!r} or {s!r}")
            if pair.U.left.dim != self.phases[t].dim or pair.U.right.dim != self.phases[s].dim:
                raise StateSumError(f"defect {x!r}: bimodule algebras do not match the phases")
            self.defects[x] = (pair, t, s)
        self.conditions = DefectConditions.from_lines({x: (t, s) for x, (_, t, s) in self.defects.items()},
                                                      self.phases)
        self._E0: dict = {}

    @classmethod
    def plain(cls, d: StateSumData, phases: Sequence[str] = ("A",)):
        return cls({p: d for p in phases})

    def phase(self, p) -> StateSumData:
        try:
            return self.phases[p]
        except KeyError:
            raise StateSumError(f"unknown phase label {p!r}") from None

    def pair(self, x) -> DualPair:
        try:
            return self.defects[x][0]
        except KeyError:
            raise StateSumError(f"unknown defect label {x!r}") from None

    def object_space(self, x, bar: bool) -> IndexSpace:
        pr = self.pair(x)
        return pr.V.space if bar else pr.U.space

    def defect_plaquette_nodes(self, x, n: int, m: int, area: tuple, labels: Sequence, fresh) -> list:
        """Pieces of ``W^{x,n,m}`` with legs ``[Xbar, t_1..t_n, X, s_1..s_m]``."""
        pr, t, s = self.defects[x]
        at, l, as_ = (float(v) for v in area)
        labels = list(labels)
        vbar, tl, u, sl = labels[0], labels[1:1 + n], labels[1 + n], labels[2 + n:]
        dt, ds = fresh(), fresh()
        core = self._core(x, at, l, as_)
        nodes = [(core, [vbar, u, dt, ds])]
        nodes += self.phase(t).plaquette_nodes(n + 1, 0.0, tl + [dt], fresh)
        nodes += self.phase(s).plaquette_nodes(m + 1, 0.0, sl + [ds], fresh)
        return nodes

    def _core(self, x, at, l, as_) -> Tensor:
        """``sum_k xbar_k (x) rho_{a_t,l,a_s}(p (x) x_k (x) q)`` with legs (Xbar, X, p, q)."""
        pr = self.pair(x)
        gam = Tensor.from_dense(pr.gamma0, [pr.V.space, pr.U.space])
        rho = pr.U.action(at, l, as_)
        t = contract(gam, rho, [(1, 2)])  # (vbar, u, p, q)
        return t

    def zeta_cross(self, x, side: str, a: float) -> np.ndarray:
        """Matrix ``M`` with ``beta^x(M^T u, v) `` the vertex weight on a crossed edge.

        A vertex on the t side acts on Xbar from the right by the window of
        A_t, which equals acting on X from the left; the s side acts on X from
        the right."""
        pr, t, s = self.defects[x]
        if side == "t":
            return pr.U.left_matrix(self.phase(t).window(a))
        return pr.U.right_matrix(self.phase(s).window(a))

    # boundary idempotents ------------------------------------------------------
    def boundary_split(self, key):
        """``(proj, inj)`` matrices for a circle list (``('phase', p)`` or defect points)."""
        if key not in self._E0:
            if len(key) == 1 and key[0][0] == "phase":
                proj, inj, rank = self.phase(key[0][1]).center_split()
                self._E0[key] = (proj, inj, rank, None)
            else:
                E0, lim = zero_limit(lambda s: self.E(key, s).to_matrix())
                P, I, rank = split_idempotent(LinearMap.from_matrix(E0, _spaces(self, key), _spaces(self, key)),
                                              E0_TOL, label=f"Z{_list_name(key)}")
                if rank == 0:
                    self._E0[key] = (None, None, 0, lim)
                else:
                    self._E0[key] = (P.to_matrix(), I.to_matrix(), rank, lim)
        return self._E0[key]

    def E(self, points: tuple, s: float) -> LinearMap:
        """Raw defect cylinder on the list ``points`` with every parameter equal to ``s``."""
        s = Fraction(s)
        c = defect_cylinder(list(points), self.conditions, face_area=(s, s, s))
        return evaluate_defect(c, self, raw=True)

    def E0_rank(self, points) -> int:
        return self.boundary_split(tuple(points))[2]

    def __repr__(self) -> str:
        return f"DefectStateSumData(phases={sorted(self.phases)}, defects={sorted(self.defects)})"


def _list_name(key) -> str:
    return "(" + ",".join(f"{x}{'~' if b else ''}" for x, b in key) + ")"


def _spaces(dd: DefectStateSumData, key) -> tuple:
    return tuple(dd.object_space(x, bar) for x, bar in key)


def defect_data_from_bimodules(phases: dict, defects: dict) -> DefectStateSumData:
    return DefectStateSumData(phases, defects)


def check_defect_conditions(dd: DefectStateSumData, areas: Sequence[tuple] = ((0.3, 0.2, 0.1), (0.05, 0.4, 0.25)),
                            tol: float = 1e-9) -> AxiomReport:
    rep = AxiomReport(tol)
    for p, d in dd.phases.items():
        for k, v in check_conditions(d, areas=areas, tol=tol).defects.items():
            rep.record(f"{p}:{k}", v)
    for x, (pr, t, s) in dd.defects.items():
        for k, v in check_dual_pair(pr, tol=tol).defects.items():
            rep.record(f"{x}:{k}", v)
        for (a, b, c) in areas:
            p1, p2, cr = (a, c, b), (b, a, c), (c, b, a)
            tot = tuple(p1[i] + p2[i] + cr[i] for i in range(3))
            for (n1, m1), (n2, m2) in (((1, 0), (0, 1)), ((1, 1), (1, 1))):
                W1 = _dense_defect(dd, x, n1, m1, p1)
                W2 = _dense_defect(dd, x, n2, m2, p2)
                B = pr.beta(*cr)
                # exit of the first face meets the entry of the second
                g = np.tensordot(W1, B, axes=([0], [1]))            # legs t1.., X1, s1.., X2*
                g = np.tensordot(g, W2, axes=([g.ndim - 1], [1 + n2]))  # + Xbar2, t2.., s2..
                # reorder to [Xbar2, t2.., t1.., X1, s1.., s2..]
                o1 = n1 + 1 + m1
                idx_t1 = list(range(n1))
                idx_x1 = [n1]
                idx_s1 = list(range(n1 + 1, o1))
                idx_vb2 = [o1]
                idx_t2 = list(range(o1 + 1, o1 + 1 + n2))
                idx_s2 = list(range(o1 + 1 + n2, o1 + 1 + n2 + m2))
                g = np.transpose(g, idx_vb2 + idx_t2 + idx_t1 + idx_x1 + idx_s1 + idx_s2)
                ref = _dense_defect(dd, x, n1 + n2, m1 + m2, tot)
                rep.record(f"{x}:defect_gluing", _mx(g - ref))
            # a plain t face glued onto the last t side (just before the entry)
            Wx = _dense_defect(dd, x, 1, 1, (a, b, c))
            Wp = _dense(dd.phase(t).plaquette(3, c))
            B = dd.phase(t).beta(a)
            g = np.tensordot(Wx, B, axes=([1], [0]))  # Xbar, X, s, (t-leg contracted) b
            g = np.tensordot(g, Wp, axes=([3], [0]))   # Xbar, X, s, w2, w3
            g = np.transpose(g, (0, 3, 4, 1, 2))
            ref = _dense_defect(dd, x, 2, 1, (a + a + c, b, c))
            rep.record(f"{x}:mixed_gluing", _mx(g - ref))
            Wp = _dense(dd.phase(s).plaquette(3, c))
            B = dd.phase(s).beta(a)
            g = np.tensordot(Wx, B, axes=([3], [0]))  # Xbar, t, X, b
            g = np.tensordot(g, Wp, axes=([3], [0]))   # Xbar, t, X, w2, w3
            ref = _dense_defect(dd, x, 1, 2, (a, b, c + a + c))
            rep.record(f"{x}:mixed_gluing", _mx(g - ref))
        for bar in (False, True):
            key = ((x, bar),)
            try:
                E0, lim = zero_limit(lambda s_: dd.E(key, s_).to_matrix())
                rep.record(f"{x}:E_limit", 0.0 if lim.cauchy else math.inf)
                rep.record(f"{x}:E0_idempotent", _mx(E0 @ E0 - E0))
                Ea = dd.E(key, 0.1).to_matrix()
                Eb = dd.E(key, 0.25).to_matrix()
                rep.record(f"{x}:E_semigroup", _mx(Ea @ Eb - dd.E(key, 0.35).to_matrix()))
            except (RFAError, BordismError):
                rep.record(f"{x}:E_limit", math.inf)
    return rep


def _dense_defect(dd: DefectStateSumData, x, n: int, m: int, area) -> np.ndarray:
    labels = [("L", k) for k in range(n + m + 2)]
    counter = itertools.count()
    nodes = dd.defect_plaquette_nodes(x, n, m, area, labels, lambda: ("i", next(counter)))
    t, lab = contract_network(nodes)
    order = [lab.index(L) for L in labels]
    return t.transpose(order).to_dense()


# tensor networks -----------------------------------------------------------------------

def _pair_contract(ta: Tensor, la: list, tb: Tensor, lb: list):
    shared = [x for x in la if x in lb]
    pairs = [(la.index(x), lb.index(x)) for x in shared]
    t = contract(ta, tb, pairs)
    labels = [x for x in la if x not in shared] + [x for x in lb if x not in shared]
    return t, labels


def _self_trace(t: Tensor, labels: list):
    while True:
        seen = {}
        hit = None
        for k, x in enumerate(labels):
            if x in seen:
                hit = (seen[x], k)
                break
            seen[x] = k
        if hit is None:
            return t, labels
        i, j = hit
        t = t.trace(i, j)
        labels = [x for k, x in enumerate(labels) if k not in (i, j)]


def contract_network(nodes: Sequence[tuple]):
    """Greedy pairwise contraction of ``(Tensor, labels)`` nodes.

    Each step contracts the pair sharing at least one label with the
    smallest estimated result (``nnz_a nnz_b / prod(shared dims)``); ties go to
    the lowest node indices, so the order is deterministic."""
    work = []
    for t, labels in nodes:
        work.append(_self_trace(t, list(labels)))
    if not work:
        raise StateSumError("empty tensor network")
    while len(work) > 1:
        where: dict = {}
        for i, (_, labels) in enumerate(work):
            for x in labels:
                where.setdefault(x, []).append(i)
        best = None
        for x, idx in where.items():
            if len(idx) != 2 or idx[0] == idx[1]:
                continue
            i, j = idx
            ti, li = work[i]
            tj, lj = work[j]
            shared = set(li) & set(lj)
            size = 1.0
            for y in shared:
                size *= ti.dims[li.index(y)]
            cost = (max(ti.nnz, 1) * max(tj.nnz, 1)) / size
            key = (cost, i, j)
            if best is None or key < best:
                best = key
        if best is None:
            # disconnected pieces: take the outer product of the two smallest
            order = sorted(range(len(work)), key=lambda k: (work[k][0].nnz, k))
            i, j = sorted(order[:2])
        else:
            _, i, j = best
        ti, li = work[i]
        tj, lj = work[j]
        t, labels = _pair_contract(ti, li, tj, lj)
        work = [w for k, w in enumerate(work) if k not in (i, j)] + [(t, labels)]
    return work[0]


# evaluation ----------------------------------------------------------------------------

@dataclass
class _Boundary:
    circle: object
    key: tuple
    legs: list
    spaces: list


def _network(c: PlcwComplex, dd: DefectStateSumData):
    """Nodes of the raw state sum plus the open legs of the in and out circles."""
    counter = itertools.count()

    def fresh():
        return ("i", next(counter))

    sidx = c.side_index()
    outs, ins = c.outputs(), c.inputs()
    out_edges = {e for ci in outs for e in ci.edges}
    in_edges = {e for ci in ins for e in ci.edges}
    out_vertices = set()
    for e in out_edges:
        out_vertices.update((c.edges[e].tail, c.edges[e].head))
    nodes = []

    def leg(fid, k):
        return ("F", fid, k)

    for fid, f in c.faces.items():
        n = len(f.sides)
        if f.defect is None:
            data = dd.phase(f.phase)
            nodes += data.plaquette_nodes(n, float(f.area), [leg(fid, k) for k in range(n)], fresh)
        else:
            kinds = face_side_kinds(f)
            ks = [(f.defect.exit + j) % n for j in range(n)]
            nt = sum(1 for k in ks if kinds[k] == "t")
            ns = sum(1 for k in ks if kinds[k] == "s")
            if f.defect.label not in dd.defects:
                raise StateSumError(f"unknown defect label {f.defect.label!r}")
            nodes += dd.defect_plaquette_nodes(f.defect.label, nt, ns, f.area, [leg(fid, k) for k in ks], fresh)
    # vertex weights are folded into the contraction of one incident edge
    incident: dict = {}
    for e, ed in c.edges.items():
        incident.setdefault(ed.tail, []).append(e)
        incident.setdefault(ed.head, []).append(e)
    folds: dict = {}
    for v, av in c.vertices.items():
        if v in out_vertices:
            continue
        inc = sorted(set(incident.get(v, [])))
        if not inc:
            raise StateSumError(f"vertex {v} has no incident edge")
        plain = [e for e in inc if c.edges[e].crossing is None]
        if plain:
            folds.setdefault(plain[0], []).append(("plain", float(av)))
        else:
            e = inc[0]
            tv, _ = crossed_edge_vertices(c, e)
            folds.setdefault(e, []).append(("t" if v == tv else "s", float(av)))
    for e, ed in c.edges.items():
        if e in out_edges:
            continue
        ss = sidx.get(e, [])
        if ed.crossing is None:
            fid, k, _ = ss[0]
            p = side_phase(c, c.faces[fid], k)
            data = dd.phase(p)
            B = data.beta(float(ed.area))
            for _, av in folds.get(e, []):
                B = data.zeta(av).T @ B
            sp = [data.space, data.space]
            if e in in_edges:
                labels = [("I", e), leg(fid, k)]
            else:
                labels = [leg(ss[0][0], ss[0][1]), leg(ss[1][0], ss[1][1])]
        else:
            cr = ed.crossing
            pr = dd.pair(cr.label)
            B = pr.beta(*(float(v) for v in cr.area))
            for side, av in folds.get(e, []):
                B = dd.zeta_cross(cr.label, side, av).T @ B
            sp = [pr.U.space, pr.V.space]
            ent = ext = None
            for fid, k, _ in ss:
                f = c.faces[fid]
                if k == f.defect.entry:
                    ent = leg(fid, k)
                elif k == f.defect.exit:
                    ext = leg(fid, k)
            if e in in_edges:
                # an entry leg is X, so the boundary object is Xbar
                labels = [ent, ("I", e)] if ent is not None else [("I", e), ext]
            else:
                labels = [ent, ext]
        nodes.append((Tensor.from_dense(B, sp), labels))
    bounds_in, bounds_out = [], []
    for ci in ins:
        key = _circle_key(c, ci)
        legs = [("I", e) for e in ci.edges]
        spaces = _key_spaces(dd, key)
        bounds_in.append(_Boundary(ci, key, legs, spaces))
    for ci in outs:
        key = _circle_key(c, ci)
        legs = [leg(sidx[e][0][0], sidx[e][0][1]) for e in ci.edges]
        spaces = _key_spaces(dd, key)
        bounds_out.append(_Boundary(ci, key, legs, spaces))
    return nodes, bounds_in, bounds_out


def _circle_key(c: PlcwComplex, ci) -> tuple:
    lst = defect_list(c, ci)
    if len(lst) == 1 and lst[0][0] == "phase":
        return lst
    if any(x[0] == "phase" for x in lst):
        raise StateSumError("a circle with defect points must consist of crossed edges only")
    return lst


def _key_spaces(dd: DefectStateSumData, key) -> list:
    if len(key) == 1 and key[0][0] == "phase":
        return [dd.phase(key[0][1]).space]
    return [dd.object_space(x, bar) for x, bar in key]


def _raw(c: PlcwComplex, dd: DefectStateSumData):
    nodes, bin_, bout = _network(c, dd)
    t, labels = contract_network(nodes)
    want = [l for b in bout for l in b.legs] + [l for b in bin_ for l in b.legs]
    if sorted(map(repr, labels)) != sorted(map(repr, want)):
        raise StateSumError(f"network left unexpected open legs {labels}")
    t = t.transpose([labels.index(x) for x in want])
    spaces_out = [s for b in bout for s in b.spaces]
    spaces_in = [s for b in bin_ for s in b.spaces]
    return LinearMap(spaces_out, spaces_in, t.relabel(spaces_out + spaces_in)), bin_, bout


def evaluate_defect(c: PlcwComplex, dd: DefectStateSumData, *, raw: bool = False) -> LinearMap:
    """State-sum amplitude of a complex with (optional) defect lines.

    ``raw=True`` returns the map between the tensor products of boundary
    objects before the boundary idempotents are split."""
    rep = validate(c)
    if not rep.ok:
        raise StateSumError("invalid PLCW complex:\n" + str(rep))
    return _evaluate(c, dd, raw)


def _evaluate(c: PlcwComplex, dd: DefectStateSumData, raw: bool) -> LinearMap:
    M, bin_, bout = _raw(c, dd)
    if raw:
        return M
    t = M.tensor
    labels = [("o", k) for k in range(len(M.outputs))] + [("i", k) for k in range(len(M.inputs))]
    pos = 0
    out_spaces, in_spaces = [], []
    for j, b in enumerate(bout):
        proj, _, rank, _ = dd.boundary_split(b.key)
        if rank == 0:
            return _zero_map(dd, bin_, bout)
        zs = IndexSpace(f"Z{_key_name(b.key)}", rank)
        out_spaces.append(zs)
        k = len(b.spaces)
        P = Tensor.from_dense(np.asarray(proj).reshape([rank] + [s.dim for s in b.spaces]), [zs] + b.spaces)
        t, labels = _pair_contract(P, [("zo", j)] + [("o", pos + q) for q in range(k)], t, labels)
        pos += k
    pos = 0
    for j, b in enumerate(bin_):
        _, inj, rank, _ = dd.boundary_split(b.key)
        if rank == 0:
            return _zero_map(dd, bin_, bout)
        zs = IndexSpace(f"Z{_key_name(b.key)}", rank)
        in_spaces.append(zs)
        k = len(b.spaces)
        I = Tensor.from_dense(np.asarray(inj).reshape([s.dim for s in b.spaces] + [rank]), b.spaces + [zs])
        t, labels = _pair_contract(t, labels, I, [("i", pos + q) for q in range(k)] + [("zi", j)])
        pos += k
    want = [("zo", j) for j in range(len(bout))] + [("zi", j) for j in range(len(bin_))]
    t = t.transpose([labels.index(x) for x in want])
    return LinearMap(out_spaces, in_spaces, t.relabel(out_spaces + in_spaces))


def _key_name(key) -> str:
    if len(key) == 1 and key[0][0] == "phase":
        return f"({key[0][1]})"
    return _list_name(key)


def _zero_map(dd, bin_, bout) -> LinearMap:
    outs = [IndexSpace(f"Z{_key_name(b.key)}", max(dd.boundary_split(b.key)[2], 1)) for b in bout]
    ins = [IndexSpace(f"Z{_key_name(b.key)}", max(dd.boundary_split(b.key)[2], 1)) for b in bin_]
    return LinearMap(outs, ins, Tensor.zeros(outs + ins))


def evaluate(c: PlcwComplex, d: StateSumData, *, raw: bool = False) -> LinearMap:
    """State-sum amplitude of a complex without defects; every phase label uses ``d``."""
    if c.has_defects:
        raise StateSumError("complex has defect lines; use evaluate_defect")
    phases = {f.phase for f in c.faces.values()} or {"A"}
    return evaluate_defect(c, DefectStateSumData.plain(d, sorted(phases)), raw=raw)


def _center_split(d: StateSumData):
    """Split the zero-area cylinder idempotent, preferring the data's centre basis."""
    dd = DefectStateSumData.plain(d)

    def cyl(s):
        return _raw(normal_form(0, 1, 1, Fraction(s)), dd)[0].to_matrix()

    D0, lim = zero_limit(cyl)
    S = d.space
    proj, inj, rank = split_idempotent(LinearMap.from_matrix(D0, (S,), (S,)), E0_TOL,
                                       basis=d.center_basis(), label=f"Z({d.name})")
    if rank == 0:
        return None, None, 0
    return proj.to_matrix(), inj.to_matrix(), rank


def center_space(d: StateSumData) -> IndexSpace:
    return IndexSpace(f"Z({d.name})", d.center_split()[2])


def boundary_rfa(d: StateSumData, name: str | None = None) -> FiniteRFA:
    """Commutative RFA on the boundary space read off from amplitudes.

    Multiplication, unit, comultiplication and counit are the zero-area limits
    of the pair of pants, cap, copants and cocap; the generator comes from the
    unit-area cylinder."""
    def nf(g, bi, bo):
        # the zero-area sample is outside the validated domain, hence _evaluate
        return lambda s: _evaluate(normal_form(g, bi, bo, Fraction(s)), dd, False).to_matrix()

    dd = DefectStateSumData.plain(d)
    r = d.center_split()[2]
    mu0 = zero_limit(nf(0, 2, 1))[0].reshape(r, r, r)
    eta0 = zero_limit(nf(0, 0, 1))[0].reshape(r)
    delta0 = zero_limit(nf(0, 1, 2))[0].reshape(r, r, r)
    eps0 = zero_limit(nf(0, 1, 0))[0].reshape(r)
    P1 = evaluate(normal_form(0, 1, 1, 1), d).to_matrix()
    H = sla.logm(P1) @ eta0
    return FiniteRFA(mu0, eta0, delta0, eps0, H, name=name or f"Z({d.name})", validate=False)


def window_twisted_center(A, name: str | None = None) -> FiniteRFA:
    """Centre of ``A`` with the counit twisted by the inverse window element.

    The product and unit are restricted from ``A``; the counit is
    ``eps zeta_0`` and the coproduct ``(pi x pi) Delta tau_0``.  When the
    window element acts trivially on the centre (group algebras) this is the
    plain restriction."""
    A, d = _rfa_and_data(A)
    proj, inj, r = d.center_split()
    mu0 = np.asarray(A.mu(0.0))
    tau0 = np.einsum("oxy,xym,m->o", mu0, np.asarray(A.delta(0.0)), np.asarray(A.eta(0.0)))
    Lz = left_multiplication(A, d.window(0.0))
    Lt = left_multiplication(A, tau0)
    zm = np.einsum("om,mxy,xi,yj->oij", proj, mu0, inj, inj)
    ze = proj @ np.asarray(A.eta(0.0))
    zd = np.einsum("pm,qn,mnx,xy,yi->pqi", proj, proj, np.asarray(A.delta(0.0)), Lt, inj)
    zc = np.asarray(A.eps(0.0)) @ Lz @ inj
    P1 = proj @ A.P(1.0) @ inj
    H = sla.logm(P1) @ ze
    return FiniteRFA(zm, ze, zd, zc, H, name=name or f"Z({A.name})", validate=False)


# closed form ----------------------------------------------------------------------------

def _rfa_and_data(A):
    if isinstance(A, StateSumData):
        if getattr(A, "rfa", None) is None:
            return DataRFA(A), A
        return A.rfa, A
    return A, RfaData(A)


def handle_matrix(A: RFA, a: float = 0.0) -> np.ndarray:
    """phi(x) = x_1 x_3 x_2 summed over the threefold coproduct of x."""
    mu = np.asarray(A.mu(0.0))
    d0 = np.asarray(A.delta(0.0))
    d3 = np.einsum("pqm,mrx->pqrx", d0, A.delta(a))
    inner = np.einsum("mrq,pqrx->pmx", mu, d3)
    return np.einsum("opm,pmx->ox", mu, inner)


def closed_form(A, g: int, b_in: int, b_out: int, a: float, inputs=None, *, zero_policy: bool = False):
    """Normal-form amplitude from the algebra: ``pi^b Delta^(b) phi^g zeta^(1-b) eta_a``.

    Ingoing circles are closed with the zero-area in-in cylinder.  Returns a
    LinearMap on the centre (or a vector / scalar when ``inputs`` is given)."""
    if g < 0 or b_in < 0 or b_out < 0:
        raise StateSumError("genus and boundary counts must be >= 0")
    if a < 0:
        raise StateSumError("area must be >= 0")
    b = b_in + b_out
    if zero_policy and a == 0 and g + b / 2 < 2:
        raise StateSumError(f"no zero-area limit for genus {g} with {b} boundary circles")
    A, d = _rfa_and_data(A)
    proj, inj, rank = d.center_split()
    if rank == 0:
        raise StateSumError("centre is zero")
    mu0 = np.asarray(A.mu(0.0))
    z0 = d.window(0.0)
    tau0 = np.einsum("oxy,xym,m->o", mu0, np.asarray(A.delta(0.0)), np.asarray(A.eta(0.0)))
    v = np.asarray(A.eta(a), dtype=np.complex128)
    if b == 0:
        v = left_multiplication(A, z0) @ v
    for _ in range(b - 1):
        v = left_multiplication(A, tau0) @ v
    if g:
        Phi = handle_matrix(A)
        for _ in range(g):
            v = Phi @ v
    Z = IndexSpace(f"Z({d.name})", rank)
    if b == 0:
        val = np.asarray(A.eps(0.0)) @ (inj @ (proj @ v))
        return LinearMap.from_matrix(np.array([[val]]), (), ())
    # b-fold coproduct
    delta0 = np.asarray(A.delta(0.0))
    T = v
    for _ in range(b - 1):
        T = np.tensordot(T, delta0, axes=([T.ndim - 1], [2]))
    for k in range(b):
        T = np.moveaxis(np.tensordot(proj, T, axes=([1], [k])), 0, k)
    if b_in:
        # in-in cylinder pairing on the centre
        BZ = np.einsum("o,om,myx,yi,xj->ij", np.asarray(A.eps(0.0)), left_multiplication(A, z0), mu0,
                       inj, inj)
        for k in range(b_in):
            T = np.tensordot(T, BZ, axes=([0], [0]))
            # the paired leg moves to the end as an input
        # legs are now (outs..., ins...)
    shape = (rank ** b_out, rank ** b_in)
    M = LinearMap.from_matrix(T.reshape(shape), (Z,) * b_out, (Z,) * b_in)
    if inputs is None:
        return M
    vec = np.asarray(inputs, dtype=np.complex128).reshape(-1)
    return M.to_matrix() @ vec


# truncation leakage ----------------------------------------------------------------------

def leakage_bound(G, trunc, c: PlcwComplex) -> float:
    """Bound on the contribution of labels outside the truncation.

    Each connected component of area ``a`` and Euler characteristic ``chi``
    contributes the tail ``sum_{V > trunc} e^{-a sigma_V} dim(V)^chi``."""
    total = 0.0
    for comp in topological_components(c):
        fids = [x[1] for x in comp if x[0] == "F"]
        eids = [x[1] for x in comp if x[0] == "E"]
        vids = [x[1] for x in comp if x[0] == "V"]
        chi = len(vids) - len(eids) + len(fids)
        area = Fraction(0)
        for f in fids:
            fa = c.faces[f].area
            area += (fa[0] + fa[2]) if isinstance(fa, tuple) else fa
        for e in eids:
            ed = c.edges[e]
            area += ed.area + (ed.crossing.area[0] + ed.crossing.area[2] if ed.crossing else 0)
        area += sum((c.vertices[v] for v in vids), Fraction(0))
        total += G.tail(trunc, float(area), chi)
    return total


# gauge-theory defect data ---------------------------------------------------------------

def gauge_defect_data(G, trunc, lines: dict, phase: str = "A") -> DefectStateSumData:
    """Defect data over the block model of ``G`` with one phase.

    ``lines`` maps a defect label to ``("wilson", V)``, ``("twist", name)`` or
    ``("fused", [V1, V2, ...])``; a fused line carries the tensor product of
    the Wilson bimodules over the algebra."""
    A = G.block_rfa(trunc)
    d = RfaData(A)
    defects = {}
    for x, (kind, arg) in lines.items():
        if kind == "wilson":
            pr = wilson_pair(G, arg, A, trunc)
        elif kind == "twist":
            pr = twisted_pair(A, group_automorphism_matrix(G, A, arg), name=str(arg))
        elif kind == "fused":
            labels = list(arg)
            if not labels:
                raise StateSumError(f"defect {x!r}: fused line needs at least one label")
            M = wilson(G, labels[0], A, trunc)
            for V in labels[1:]:
                M = tensor_product(M, wilson(G, V, A, trunc))[0]
            pr = dual_bimodule(M)
        else:
            raise StateSumError(f"defect {x!r}: unknown line kind {kind!r}")
        defects[x] = (pr, phase, phase)
    return DefectStateSumData({phase: d}, defects, name=f"{G.name}-defects")
