"""Group data and closed-form two-dimensional Yang–Mills amplitudes.

Irreducible representations are identified by labels: dimensions for SU(2),
charges for U(1), and short names for finite groups and custom tables.  Every
group exposes dimensions, Casimir values ``sigma``, fusion multiplicities
``N_{U,V}^W``, the dual involution and named automorphisms acting on labels.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .rfa import BlockRFA
from .tensor_core import IndexSpace, LinearMap


class GroupError(ValueError):
    pass


class DivergentAmplitude(GroupError):
    pass


class GroupData:
    """Common interface; subclasses provide the irrep table."""

    name = "group"
    finite = True
    trivial = None

    def __init__(self, sigma_override: dict | None = None):
        self._sigma_override = dict(sigma_override or {})

    # table access -------------------------------------------------------------
    def labels(self, trunc=None) -> list:
        raise NotImplementedError

    def dim(self, U) -> int:
        raise NotImplementedError

    def _sigma(self, U) -> float:
        return 0.0

    def sigma(self, U) -> float:
        return float(self._sigma_override.get(U, self._sigma(U)))

    def dual(self, U):
        return U

    def fusion(self, U, V, W) -> int:
        """Multiplicity of W in U (x) V."""
        raise NotImplementedError

    def automorphism_names(self) -> list:
        return ["id"]

    def automorphism(self, name: str) -> Callable:
        if name == "id":
            return lambda U: U
        raise GroupError(f"{self.name}: unknown automorphism {name!r}")

    def intertwiner(self, name: str, U) -> np.ndarray:
        """Unitary J with alpha(f^U_ij) = sum J_ik f^{alpha U}_kl (J^-1)_lj on the block model."""
        return np.eye(self.dim(U))

    def has_label(self, U) -> bool:
        return U in self.labels(None) if self.finite else True

    def pair_complete(self, U, V, labels) -> bool:
        """Whether every irrep in U (x) V lies among ``labels``."""
        return True

    # derived objects ------------------------------------------------------------
    def truncation(self, trunc=None) -> list:
        labs = self.labels(trunc)
        s = set(labs)
        for U in labs:
            if self.dual(U) not in s:
                raise GroupError(f"truncation of {self.name} is not closed under duals ({U!r})")
        return labs

    def block_rfa(self, trunc=None) -> BlockRFA:
        labs = self.truncation(trunc)
        return BlockRFA([(U, self.dim(U), self.sigma(U)) for U in labs], name=f"L2({self.name})")

    def fusion_matrix(self, V, labels) -> np.ndarray:
        """``N[i, j] = N_{U_i, V}^{U_j}`` over the given labels."""
        return np.array([[self.fusion(U, V, W) for W in labels] for U in labels], dtype=float)

    def tail(self, trunc, a: float, chi: int, power: int = 1) -> float:
        """Bound on sum over labels outside the truncation of (e^{-a sigma} d^chi)^power."""
        return 0.0

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name})"


# compact groups ----------------------------------------------------------------------

class SU2(GroupData):
    """Labels n >= 1 (the dimension); sigma_n = (n^2-1)/4 by default."""

    name = "su2"
    finite = False
    trivial = 1

    def labels(self, trunc=None) -> list:
        if trunc is None:
            raise GroupError("su2 needs a truncation (largest dimension)")
        N = int(trunc)
        if N < 1:
            raise GroupError("su2 truncation must be >= 1")
        return list(range(1, N + 1))

    def has_label(self, U) -> bool:
        return isinstance(U, (int, np.integer)) and U >= 1

    def dim(self, U) -> int:
        return int(U)

    def pair_complete(self, U, V, labels) -> bool:
        return U + V - 1 <= max(labels)

    def _sigma(self, U) -> float:
        return (U * U - 1) / 4.0

    def fusion(self, U, V, W) -> int:
        return clebsch_gordan_multiplicity(int(U), int(V), int(W))

    def automorphism_names(self) -> list:
        return ["id", "conj"]

    def automorphism(self, name: str) -> Callable:
        if name in ("id", "conj"):
            return lambda U: U
        return super().automorphism(name)

    def intertwiner(self, name: str, U) -> np.ndarray:
        if name == "conj":
            n = int(U)
            J = np.zeros((n, n))
            for m in range(n):
                J[m, n - 1 - m] = (-1.0) ** m
            return J
        return super().intertwiner(name, U)

    def tail(self, trunc, a: float, chi: int, power: int = 1) -> float:
        return _power_tail(lambda n: np.exp(-a * power * (n * n - 1) / 4.0) * n ** float(chi * power),
                           int(trunc) + 1, a * power / 4.0, chi * power)


class U1(GroupData):
    """Labels k in a symmetric window; sigma_k = k^2.  Not semisimple."""

    name = "u1"
    finite = False
    trivial = 0

    def labels(self, trunc=None) -> list:
        if trunc is None:
            raise GroupError("u1 needs a truncation (largest |charge|)")
        K = int(trunc)
        if K < 0:
            raise GroupError("u1 truncation must be >= 0")
        return list(range(-K, K + 1))

    def has_label(self, U) -> bool:
        return isinstance(U, (int, np.integer))

    def dim(self, U) -> int:
        return 1

    def pair_complete(self, U, V, labels) -> bool:
        return abs(U + V) <= max(labels)

    def _sigma(self, U) -> float:
        return float(U) ** 2

    def dual(self, U):
        return -U

    def fusion(self, U, V, W) -> int:
        return int(U + V == W)

    def automorphism_names(self) -> list:
        return ["id", "conj"]

    def automorphism(self, name: str) -> Callable:
        if name == "conj":
            return lambda U: -U
        return super().automorphism(name)

    def tail(self, trunc, a: float, chi: int, power: int = 1) -> float:
        if a <= 0:
            return math.inf
        f = lambda k: np.exp(-a * power * k * k)
        return 2.0 * _power_tail(f, int(trunc) + 1, a * power, 0)


def _power_tail(term: Callable, start: int, gauss: float, pw: float, chunk: int = 4096) -> float:
    """Sum of term(n) for n >= start (``term`` vectorised).

    With Gaussian damping the sum is taken explicitly until the terms are
    negligible and closed by a geometric bound; without damping the
    remainder is bounded by the integral of x^pw."""
    if gauss <= 0:
        if pw >= -1:
            return math.inf
        head = term(np.arange(start, start + chunk, dtype=float)).sum()
        return float(head + float(start + chunk - 1) ** (pw + 1) / (-pw - 1))
    total = 0.0
    n0 = start
    for _ in range(1000):
        t = term(np.arange(n0, n0 + chunk, dtype=float))
        total += float(t.sum())
        last = float(t[-1])
        if last <= 1e-18 * max(total, 1e-300):
            break
        n0 += chunk
    return total + last / (1 - math.exp(-gauss))


# finite groups ---------------------------------------------------------------------------

class FiniteGroup(GroupData):
    """A finite group with explicit elements and irreducible representation matrices."""

    finite = True

    def __init__(self, name: str, elements: Sequence, multiply: Callable, identity, irreps: dict,
                 automorphisms: dict | None = None, sigma_override: dict | None = None):
        super().__init__(sigma_override)
        self.name = name
        self.elements = list(elements)
        self._mul = multiply
        self.identity = identity
        self._irreps = dict(irreps)
        self._char = {}
        for U, rep in self._irreps.items():
            self._char[U] = np.array([np.trace(rep(g)) for g in self.elements])
        self._labels = list(self._irreps)
        self.trivial = next(U for U in self._labels if self.dim(U) == 1 and np.allclose(self._char[U], 1))
        self._dual = {}
        for U in self._labels:
            c = np.conj(self._char[U])
            self._dual[U] = next(W for W in self._labels if np.allclose(self._char[W], c))
        self._autos = {"id": {U: U for U in self._labels}}
        self._group_autos = {"id": lambda g: g}
        for nm, fn in (automorphisms or {}).items():
            self._group_autos[nm] = fn
            # alpha acts on irreps by U -> U o alpha^{-1}; we match characters
            perm = {}
            for U in self._labels:
                c = np.array([np.trace(self._irreps[U](fn(g))) for g in self.elements])
                perm[next(W for W in self._labels if np.allclose(self._char[W], c))] = U
            self._autos[nm] = perm
        order = len(self.elements)
        N = {}
        for U, V, W in itertools.product(self._labels, repeat=3):
            val = np.sum(self._char[U] * self._char[V] * np.conj(self._char[W])) / order
            r = round(val.real)
            if abs(val - r) > 1e-9:
                raise GroupError(f"{name}: non-integral fusion {U},{V}->{W}: {val}")
            N[(U, V, W)] = int(r)
        self._N = N

    def labels(self, trunc=None) -> list:
        return list(self._labels)

    def dim(self, U) -> int:
        return int(round(self._char[U][self.elements.index(self.identity)].real))

    def dual(self, U):
        return self._dual[U]

    def fusion(self, U, V, W) -> int:
        return self._N[(U, V, W)]

    def character(self, U) -> np.ndarray:
        return self._char[U]

    def multiply(self, g, h):
        return self._mul(g, h)

    def inverse(self, g):
        for h in self.elements:
            if self._mul(g, h) == self.identity:
                return h
        raise GroupError(f"{self.name}: no inverse for {g!r}")

    def rep_matrix(self, U, g) -> np.ndarray:
        return np.asarray(self._irreps[U](g), dtype=np.complex128)

    def automorphism_names(self) -> list:
        return list(self._autos)

    def automorphism(self, name: str) -> Callable:
        if name not in self._autos:
            raise GroupError(f"{self.name}: unknown automorphism {name!r}")
        perm = self._autos[name]
        return lambda U: perm[U]

    def group_automorphism(self, name: str) -> Callable:
        return self._group_autos[name]


def cyclic(n: int) -> FiniteGroup:
    if n < 1:
        raise GroupError("cyclic group order must be >= 1")
    w = np.exp(2j * np.pi / n)
    irreps = {k: (lambda g, k=k: np.array([[w ** (k * g)]])) for k in range(n)}
    autos = {}
    if n > 2:
        autos["inv"] = lambda g: (-g) % n
    for u in range(2, n):
        if math.gcd(u, n) == 1 and u != n - 1:
            autos[f"mul{u}"] = lambda g, u=u: (u * g) % n
    return FiniteGroup(f"cyclic:{n}", list(range(n)), lambda g, h: (g + h) % n, 0, irreps, autos)


def _perm_mul(g, h):
    return tuple(g[h[i]] for i in range(len(h)))


def s3() -> FiniteGroup:
    els = sorted(itertools.permutations(range(3)))
    B = np.array([[1 / math.sqrt(2), 1 / math.sqrt(6)], [-1 / math.sqrt(2), 1 / math.sqrt(6)],
                  [0.0, -2 / math.sqrt(6)]])

    def perm_matrix(g):
        P = np.zeros((3, 3))
        for i in range(3):
            P[g[i], i] = 1.0
        return P

    def sign(g):
        return round(np.linalg.det(perm_matrix(g)))

    irreps = {"triv": lambda g: np.eye(1), "sign": lambda g: np.array([[sign(g)]]),
              "std": lambda g: B.T @ perm_matrix(g) @ B}
    # conjugation by the transposition (0 1): an inner automorphism
    t = (1, 0, 2)
    autos = {"inner01": lambda g: _perm_mul(_perm_mul(t, g), t)}
    return FiniteGroup("s3", els, _perm_mul, (0, 1, 2), irreps, autos)


# custom tables ---------------------------------------------------------------------------------

class TableGroup(GroupData):
    """Irrep data given as an explicit table (no group elements)."""

    finite = True

    def __init__(self, name: str, irreps: Sequence[tuple], fusion: dict, dual: dict | None = None,
                 automorphisms: dict | None = None, trivial=None, complete_pairs: Sequence = (),
                 sigma_override: dict | None = None):
        super().__init__(sigma_override)
        self.name = name
        self._table = {lab: (int(d), float(s)) for lab, d, s in irreps}
        if len(self._table) != len(irreps):
            raise GroupError(f"{name}: duplicate irrep labels")
        self._labels = [lab for lab, _, _ in irreps]
        self._N = {tuple(k): int(v) for k, v in fusion.items() if int(v)}
        self._dual = dict(dual or {})
        self._autos = {"id": {U: U for U in self._labels}}
        for nm, perm in (automorphisms or {}).items():
            self._autos[nm] = dict(perm)
        self.trivial = trivial if trivial is not None else next(
            (lab for lab, d, s in irreps if d == 1 and s == 0), None)
        self.complete_pairs = [tuple(p) for p in complete_pairs]
        problems = check_table(self)
        if problems:
            raise GroupError(f"{name}: malformed table: " + "; ".join(problems))

    def labels(self, trunc=None) -> list:
        return list(self._labels)

    def dim(self, U) -> int:
        return self._table[U][0]

    def _sigma(self, U) -> float:
        return self._table[U][1]

    def dual(self, U):
        return self._dual.get(U, U)

    def pair_complete(self, U, V, labels) -> bool:
        return (U, V) in self.complete_pairs or (V, U) in self.complete_pairs

    def fusion(self, U, V, W) -> int:
        if U == self.trivial:
            return int(V == W)
        if V == self.trivial:
            return int(U == W)
        return self._N.get((U, V, W), self._N.get((V, U, W), 0))

    def automorphism_names(self) -> list:
        return list(self._autos)

    def automorphism(self, name: str) -> Callable:
        if name not in self._autos:
            raise GroupError(f"{self.name}: unknown automorphism {name!r}")
        perm = self._autos[name]
        return lambda U: perm.get(U, U)


def check_table(G: GroupData, labels=None) -> list:
    """Invariant violations of an irrep table (empty when consistent)."""
    probs = []
    labs = G.labels(labels)
    s = set(labs)
    for U in labs:
        if G.dim(U) < 1:
            probs.append(f"dim({U}) < 1")
        if G.sigma(U) < 0:
            probs.append(f"sigma({U}) < 0")
        D = G.dual(U)
        if D not in s:
            probs.append(f"dual({U}) = {D} missing")
            continue
        if G.dual(D) != U:
            probs.append(f"dual is not an involution at {U}")
        if abs(G.sigma(D) - G.sigma(U)) > 1e-12 or G.dim(D) != G.dim(U):
            probs.append(f"dual({U}) has different dim or sigma")
    for U, V, W in itertools.product(labs, repeat=3):
        if G.fusion(U, V, W) != G.fusion(V, U, W):
            probs.append(f"fusion not symmetric at {U},{V}->{W}")
        if G.fusion(U, V, W) < 0:
            probs.append(f"negative fusion at {U},{V}->{W}")
    if G.trivial is not None and G.trivial in s:
        for U, W in itertools.product(labs, repeat=2):
            if G.fusion(U, G.trivial, W) != int(U == W):
                probs.append(f"fusion with the trivial irrep is not the identity at {U},{W}")
    for U, V in itertools.product(labs, repeat=2):
        tot = sum(G.fusion(U, V, W) * G.dim(W) for W in labs)
        if G.pair_complete(U, V, labs) or G.trivial in (U, V):
            if tot != G.dim(U) * G.dim(V):
                probs.append(f"dimension count fails for {U}x{V}")
        elif tot > G.dim(U) * G.dim(V):
            probs.append(f"fusion of {U}x{V} exceeds its dimension")
    for nm in G.automorphism_names():
        f = G.automorphism(nm)
        img = [f(U) for U in labs]
        if sorted(map(repr, img)) != sorted(map(repr, labs)):
            probs.append(f"automorphism {nm} is not a permutation of the labels")
            continue
        for U in labs:
            if G.dim(f(U)) != G.dim(U) or abs(G.sigma(f(U)) - G.sigma(U)) > 1e-12:
                probs.append(f"automorphism {nm} changes dim or sigma at {U}")
        for U, V, W in itertools.product(labs, repeat=3):
            if G.fusion(f(U), f(V), f(W)) != G.fusion(U, V, W):
                probs.append(f"automorphism {nm} does not preserve fusion at {U},{V}->{W}")
                break
    return probs


def su3_table() -> TableGroup:
    """SU(3) irreps (p, q) with p + q <= 2 and the fusion channels that stay inside."""
    labs = {"1": (0, 0), "3": (1, 0), "3b": (0, 1), "6": (2, 0), "6b": (0, 2), "8": (1, 1)}

    def dim(p, q):
        return (p + 1) * (q + 1) * (p + q + 2) // 2

    def cas(p, q):
        return (p * p + q * q + p * q + 3 * p + 3 * q) / 3.0

    irreps = [(k, dim(*pq), cas(*pq)) for k, pq in labs.items()]
    fusion = {("3", "3b", "1"): 1, ("3", "3b", "8"): 1, ("3", "3", "3b"): 1, ("3", "3", "6"): 1,
              ("3b", "3b", "3"): 1, ("3b", "3b", "6b"): 1, ("3", "6b", "3b"): 1, ("3b", "6", "3"): 1,
              ("3", "8", "3"): 1, ("3b", "8", "3b"): 1, ("8", "8", "1"): 1, ("8", "8", "8"): 2,
              ("6", "6b", "1"): 1, ("6", "6b", "8"): 1, ("3", "6", "8"): 1, ("3b", "6b", "8"): 1,
              ("6", "8", "3b"): 1, ("6b", "8", "3"): 1, ("6", "6", "6b"): 1, ("6b", "6b", "6"): 1,
              ("3", "8", "6b"): 1, ("3b", "8", "6"): 1, ("8", "6", "6"): 1, ("8", "6b", "6b"): 1,
              ("6", "3", "8"): 1, ("6b", "3b", "8"): 1}
    dual = {"1": "1", "3": "3b", "3b": "3", "6": "6b", "6b": "6", "8": "8"}
    complete = [("3", "3b"), ("3", "3"), ("3b", "3b")]
    return TableGroup("su3", irreps, fusion, dual, {"conj": dual}, trivial="1", complete_pairs=complete)


def parse_group_table(doc: dict) -> TableGroup:
    """Custom group document: ``{"name", "irreps": [[label, dim, sigma]], "fusion": [[U, V, W, N]],
    "dual": {U: U*}, "automorphisms": {name: {U: U'}}, "complete": [[U, V]]}``."""
    try:
        irreps = [(str(r[0]), int(r[1]), float(r[2])) for r in doc["irreps"]]
        fusion = {(str(f[0]), str(f[1]), str(f[2])): int(f[3]) for f in doc.get("fusion", [])}
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise GroupError(f"malformed group table: {exc}") from exc
    dual = {str(k): str(v) for k, v in doc.get("dual", {}).items()}
    autos = {str(n): {str(k): str(v) for k, v in p.items()} for n, p in doc.get("automorphisms", {}).items()}
    return TableGroup(str(doc.get("name", "custom")), irreps, fusion, dual, autos,
                      trivial=doc.get("trivial"), complete_pairs=[tuple(map(str, p)) for p in doc.get("complete", [])])


def builtin_group(name: str, sigma_override: dict | None = None) -> GroupData:
    """``su2``, ``u1``, ``cyclic:n`` (or ``zn``), ``s3`` or ``su3``."""
    key = name.strip().lower()
    if key == "su2":
        G = SU2(sigma_override)
    elif key == "u1":
        G = U1(sigma_override)
    elif key == "s3":
        G = s3()
    elif key == "su3":
        G = su3_table()
    elif key.startswith("cyclic:") or key.startswith("z") and key[1:].isdigit():
        n = int(key.split(":")[1]) if ":" in key else int(key[1:])
        G = cyclic(n)
    else:
        raise GroupError(f"unknown group {name!r}")
    if sigma_override and G.finite:
        G._sigma_override = dict(sigma_override)
    return G


# Clebsch–Gordan -------------------------------------------------------------------------------

def clebsch_gordan_multiplicity(U: int, V: int, W: int) -> int:
    """Multiplicity of the W-dim irrep in U (x) V for SU(2): one copy for each
    W = |U-V|+1, |U-V|+3, ..., U+V-1."""
    if min(U, V, W) < 1:
        return 0
    return int(abs(U - V) + 1 <= W <= U + V - 1 and (U + V + W) % 2 == 1)


@lru_cache(maxsize=None)
def _gauss_angles(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    th = 0.5 * np.pi * (x + 1)
    return th, 0.5 * np.pi * w


def su2_character(n: int, theta) -> np.ndarray:
    th = np.asarray(theta, dtype=float)
    return np.sin(n * th) / np.sin(th)


def character_integral_multiplicity(U: int, V: int, W: int, nodes: int = 200) -> float:
    """(2/pi) int_0^pi chi_U chi_V chi_W sin^2 over the class measure."""
    th, w = _gauss_angles(nodes)
    vals = su2_character(U, th) * su2_character(V, th) * su2_character(W, th) * np.sin(th) ** 2
    return float(2.0 / np.pi * np.sum(w * vals))


# amplitudes ----------------------------------------------------------------------------------------

@dataclass
class Amplitude:
    """Truncated amplitude: ``value`` indexed by output labels, plus a tail bound."""

    value: np.ndarray
    labels: list
    tail: float
    chi: int

    @property
    def scalar(self) -> complex:
        return complex(np.asarray(self.value).reshape(-1)[0]) if np.ndim(self.value) == 0 or self.value.size == 1 else None


def _converges_at_zero(G: GroupData, g: int, b: int) -> bool:
    if G.finite:
        return True
    if isinstance(G, SU2):
        return g + b / 2.0 >= 2
    return False


def amplitude(G: GroupData, trunc, g: int, b_in: int, b_out: int, a: float, in_labels=None) -> Amplitude:
    """sum_V e^{-a sigma_V} dim(V)^chi chi_V^{(x) b_out}; with inputs only the matching term survives."""
    if g < 0 or b_in < 0 or b_out < 0:
        raise GroupError("genus and boundary counts must be >= 0")
    if a < 0:
        raise GroupError("area must be >= 0")
    labs = G.truncation(trunc)
    chi = 2 - 2 * g - b_in - b_out
    n = len(labs)
    out = np.zeros((n,) * b_out, dtype=np.complex128)
    if b_in:
        in_labels = list(in_labels or [])
        if len(in_labels) != b_in:
            raise GroupError(f"expected {b_in} input labels, got {len(in_labels)}")
        if len(set(in_labels)) == 1 and in_labels[0] in labs:
            U = in_labels[0]
            i = labs.index(U)
            out[(i,) * b_out] = math.exp(-a * G.sigma(U)) * float(G.dim(U)) ** chi
        return Amplitude(out, labs, 0.0, chi)
    if a == 0 and not _converges_at_zero(G, g, b_in + b_out):
        raise DivergentAmplitude(f"{G.name}: genus {g} with {b_in + b_out} boundaries has no zero-area limit")
    sig = np.array([G.sigma(U) for U in labs])
    dims = np.array([float(G.dim(U)) for U in labs])
    terms = np.exp(-a * sig) * dims ** chi
    if b_out == 0:
        out[()] = terms.sum()
    else:
        out[(np.arange(n),) * b_out] = terms
    if G.finite:
        tail = 0.0
    elif b_out == 0:
        tail = G.tail(trunc, a, chi)
    else:
        tail = math.sqrt(G.tail(trunc, a, chi, power=2))
    return Amplitude(out, labs, tail, chi)


def partition_function(G: GroupData, trunc, g: int, a: float) -> tuple[float, float]:
    amp = amplitude(G, trunc, g, 0, 0, a)
    return float(np.real(amp.value)), amp.tail


def center_space(G: GroupData, trunc) -> IndexSpace:
    labs = G.truncation(trunc)
    return IndexSpace(f"Cl2({G.name})", len(labs), tuple(labs))


def wilson_cylinder(G: GroupData, trunc, V, a: float, b: float) -> LinearMap:
    """Both-in cylinder with one Wilson loop: (chi_U, chi_W) -> e^{-a sigma_U - b sigma_W} N_{U,V}^W."""
    if not G.has_label(V):
        raise GroupError(f"{G.name}: {V!r} is not an irrep label")
    labs = G.truncation(trunc)
    sU = np.array([G.sigma(U) for U in labs])
    M = np.exp(-a * sU)[:, None] * np.exp(-b * sU)[None, :] * G.fusion_matrix(V, labs)
    Z = center_space(G, trunc)
    return LinearMap.from_matrix(M.reshape(1, -1), (), (Z, Z))


@dataclass
class LoopSurface:
    """A closed surface cut along disjoint loops.

    ``regions`` lists ``(area, euler)`` of the pieces; ``loops`` lists
    ``(label, left, right)`` with region indices on either side.  A label is
    an irrep (Wilson loop) or ``("twist", automorphism name)``.
    """

    regions: list
    loops: list = field(default_factory=list)


def _loop_matrix(G: GroupData, label, labs) -> np.ndarray:
    if isinstance(label, tuple) and len(label) == 2 and label[0] == "twist":
        f = G.automorphism(label[1])
        return np.array([[float(f(U) == W) for W in labs] for U in labs])
    if not G.has_label(label):
        raise GroupError(f"{G.name}: {label!r} is not an irrep label")
    return G.fusion_matrix(label, labs)


def loop_amplitude(G: GroupData, trunc, surface: LoopSurface) -> complex:
    """prod_rho sum_{U_rho} e^{-a_rho sigma} dim^{chi(rho)} prod_x M^x_{U_left, U_right}."""
    labs = G.truncation(trunc)
    for area, eu in surface.regions:
        if area < 0:
            raise GroupError("region areas must be >= 0")
        if area == 0 and not G.finite and not (isinstance(G, SU2) and eu <= -2):
            raise DivergentAmplitude("zero-area region without a convergent dimension sum")
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    if len(surface.regions) > len(letters):
        raise GroupError("too many regions")
    ops, subs = [], []
    sig = np.array([G.sigma(U) for U in labs])
    dims = np.array([float(G.dim(U)) for U in labs])
    for r, (area, eu) in enumerate(surface.regions):
        ops.append(np.exp(-float(area) * sig) * dims ** eu)
        subs.append(letters[r])
    for label, left, right in surface.loops:
        M = _loop_matrix(G, label, labs)
        if left == right:
            ops.append(np.diag(M).copy())
            subs.append(letters[left])
        else:
            ops.append(M)
            subs.append(letters[left] + letters[right])
    return complex(np.einsum(",".join(subs) + "->", *ops))


def wilson_closed(G: GroupData, trunc, surface: LoopSurface) -> complex:
    return loop_amplitude(G, trunc, surface)


def twist_amplitude(G: GroupData, trunc, alpha: str, surface: LoopSurface) -> complex:
    """Loops whose label is ``None`` carry the twist ``alpha``."""
    if alpha not in G.automorphism_names():
        raise GroupError(f"{G.name}: unknown automorphism {alpha!r}")
    loops = [(("twist", alpha) if lab is None else lab, l, r) for lab, l, r in surface.loops]
    return loop_amplitude(G, trunc, LoopSurface(list(surface.regions), loops))


def torus_with_loops(labels: Sequence, areas: Sequence[float]) -> LoopSurface:
    """Torus cut along parallel non-contractible loops; region i lies between loop i and loop i+1."""
    k = len(labels)
    if k == 0:
        return LoopSurface([(areas[0], 0)], [])
    if len(areas) != k:
        raise GroupError("one region per loop on the torus")
    return LoopSurface([(a, 0) for a in areas], [(lab, (i - 1) % k, i) for i, lab in enumerate(labels)])


# Witten zeta ---------------------------------------------------------------------------------------

@dataclass
class ZetaResult:
    value: float
    error: float
    partial_sums: list


def witten_zeta(G: GroupData, exponent: float, schedule: Sequence[int] = (2500, 5000, 10000)) -> ZetaResult:
    """sum_V dim(V)^{-exponent}: partial sums along the schedule with a Richardson tail correction."""
    if G.finite:
        labs = G.labels(None)
        v = float(sum(float(G.dim(U)) ** -exponent for U in labs))
        return ZetaResult(v, 0.0, [(len(labs), v)])
    if not isinstance(G, SU2):
        raise GroupError(f"{G.name}: dimension sum diverges for every exponent")
    if exponent <= 1:
        raise DivergentAmplitude(f"sum of n^-{exponent} diverges")
    sched = sorted(int(N) for N in schedule)
    if len(sched) < 2:
        raise GroupError("schedule needs at least two truncations")
    n = np.arange(1, sched[-1] + 1, dtype=float)
    cums = np.cumsum(n ** -exponent)
    partial = [(N, float(cums[N - 1])) for N in sched]
    # S_N = S + c N^{1-s} + O(N^{-s}) ; eliminate c between consecutive truncations
    p = 1.0 - exponent
    ests = []
    for (N1, S1), (N2, S2) in zip(partial, partial[1:]):
        r = (N2 / N1) ** p
        ests.append((S2 - r * S1) / (1 - r))
    value = ests[-1]
    err = abs(ests[-1] - ests[-2]) if len(ests) > 1 else abs(value - partial[-1][1])
    err = max(err, float(sched[-1]) ** -exponent)
    return ZetaResult(float(value), float(err), partial)
