"""Sparse complex tensors, linear maps between tensor products of labelled
spaces, operator norms and idempotent splitting.

Entries are stored in coordinate form, sorted by multi-index (row-major order
of the legs) with duplicates summed and small entries pruned.  Every operation
returns a new canonical tensor, so results do not depend on the order in which
entries were produced.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg  # noqa: F401  (registers sp.linalg)

ZERO_TOL = 1e-14
# contractions whose sparse join exceeds this many products may switch to dense
DENSE_JOIN_MIN = 200_000
DENSE_MAX = 60_000_000
_KEY_LIMIT = 2**62


class TensorError(ValueError):
    """Base class for structured tensor errors."""


class DimensionMismatch(TensorError):
    def __init__(self, left, right, detail: str = ""):
        self.left = left
        self.right = right
        msg = f"dimension mismatch: {left!r} vs {right!r}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class NotIdempotentError(TensorError):
    def __init__(self, defect: float, tol: float):
        self.defect = float(defect)
        self.tol = float(tol)
        super().__init__(f"map is not idempotent: |D.D - D| = {defect:.3e} > tol {tol:.1e}")


@dataclass(frozen=True)
class IndexSpace:
    """A labelled finite-dimensional space with an orthonormal basis."""

    label: str
    dim: int
    basis_tags: tuple | None = None

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"IndexSpace {self.label!r}: dim must be a positive integer, got {self.dim}")
        if self.basis_tags is not None:
            tags = tuple(self.basis_tags)
            if len(tags) != self.dim:
                raise ValueError(f"IndexSpace {self.label!r}: {len(tags)} tags for dim {self.dim}")
            if len(set(tags)) != len(tags):
                raise ValueError(f"IndexSpace {self.label!r}: basis tags are not distinct")
            object.__setattr__(self, "basis_tags", tags)

    def matches(self, other: "IndexSpace") -> bool:
        return self.label == other.label and self.dim == other.dim

    def index(self, tag) -> int:
        if self.basis_tags is None:
            raise KeyError(f"{self.label!r} has no basis tags")
        return self.basis_tags.index(tag)


def _coord_dtype(dims: Sequence[int]):
    top = max(dims, default=1)
    if top <= 256:
        return np.uint8
    if top <= 65536:
        return np.uint16
    return np.int64


def _fits_key(dims: Sequence[int]) -> bool:
    prod = 1
    for d in dims:
        prod *= int(d)
        if prod >= _KEY_LIMIT:
            return False
    return True


def _linear_keys(coords: np.ndarray, dims: Sequence[int]) -> np.ndarray:
    keys = np.zeros(coords.shape[0], dtype=np.int64)
    for k, d in enumerate(dims):
        keys *= int(d)
        keys += coords[:, k].astype(np.int64)
    return keys


def _row_ids(coords: np.ndarray, dims: Sequence[int]) -> np.ndarray:
    """Integer ids that sort like the rows of ``coords`` (lexicographically)."""
    if coords.shape[1] == 0:
        return np.zeros(coords.shape[0], dtype=np.int64)
    if _fits_key(dims):
        return _linear_keys(coords, dims)
    _, inverse = np.unique(coords.astype(np.int64), axis=0, return_inverse=True)
    return inverse.reshape(-1).astype(np.int64)


class Tensor:
    """Immutable sparse tensor over an ordered list of index spaces."""

    __slots__ = ("spaces", "coords", "values")

    def __init__(self, spaces: Sequence[IndexSpace], coords, values, *, canonical: bool = False):
        self.spaces = tuple(spaces)
        dims = self.dims
        rank = len(dims)
        values = np.asarray(values, dtype=np.complex128).reshape(-1)
        coords = np.asarray(coords)
        if coords.size == 0:
            coords = np.zeros((values.shape[0], rank), dtype=np.int64)
        coords = coords.reshape(values.shape[0], rank)
        if not canonical:
            if rank and values.size:
                lo = coords.min(axis=0)
                hi = coords.max(axis=0)
                for k, d in enumerate(dims):
                    if lo[k] < 0 or hi[k] >= d:
                        raise TensorError(f"index out of bounds on leg {k} ({self.spaces[k].label!r}, dim {d})")
            coords, values = _canonicalize(coords, values, dims)
        self.coords = coords.astype(_coord_dtype(dims), copy=False)
        self.values = values

    # construction ---------------------------------------------------------
    @classmethod
    def zeros(cls, spaces: Sequence[IndexSpace]) -> "Tensor":
        return cls(spaces, np.zeros((0, len(spaces)), dtype=np.int64), np.zeros(0), canonical=True)

    @classmethod
    def from_dense(cls, array, spaces: Sequence[IndexSpace]) -> "Tensor":
        arr = np.asarray(array, dtype=np.complex128)
        dims = tuple(s.dim for s in spaces)
        if arr.shape != dims:
            arr = arr.reshape(dims)
        flat = arr.reshape(-1)
        nz = np.flatnonzero(np.abs(flat) >= ZERO_TOL)
        if len(dims):
            coords = np.stack(np.unravel_index(nz, dims), axis=1) if nz.size else np.zeros((0, len(dims)), dtype=np.int64)
        else:
            coords = np.zeros((nz.size, 0), dtype=np.int64)
        return cls(spaces, coords, flat[nz], canonical=True)

    @classmethod
    def from_entries(cls, spaces: Sequence[IndexSpace], entries: dict) -> "Tensor":
        keys = list(entries)
        coords = np.array(keys, dtype=np.int64).reshape(len(keys), len(spaces))
        return cls(spaces, coords, [entries[k] for k in keys])

    # basic properties -----------------------------------------------------
    @property
    def dims(self) -> tuple:
        return tuple(s.dim for s in self.spaces)

    @property
    def rank(self) -> int:
        return len(self.spaces)

    @property
    def nnz(self) -> int:
        return int(self.values.shape[0])

    def entries(self) -> dict:
        return {tuple(int(c) for c in row): complex(v) for row, v in zip(self.coords, self.values)}

    def to_dense(self) -> np.ndarray:
        if self.rank == 0:
            return np.array(self.values.sum() if self.nnz else 0.0, dtype=np.complex128)
        out = np.zeros(self.dims, dtype=np.complex128)
        if self.nnz:
            out[tuple(self.coords.astype(np.int64).T)] = self.values
        return out

    def max_abs(self) -> float:
        return float(np.abs(self.values).max()) if self.nnz else 0.0

    # algebra --------------------------------------------------------------
    def transpose(self, perm: Sequence[int]) -> "Tensor":
        perm = list(perm)
        if sorted(perm) != list(range(self.rank)):
            raise TensorError(f"invalid permutation {perm}")
        if perm == list(range(self.rank)):
            return self
        return Tensor([self.spaces[p] for p in perm], self.coords[:, perm], self.values)

    def conj(self) -> "Tensor":
        return Tensor(self.spaces, self.coords, np.conj(self.values), canonical=True)

    def scale(self, c: complex) -> "Tensor":
        return Tensor(self.spaces, self.coords, self.values * c)

    def relabel(self, spaces: Sequence[IndexSpace]) -> "Tensor":
        spaces = tuple(spaces)
        if tuple(s.dim for s in spaces) != self.dims:
            raise DimensionMismatch([s.label for s in spaces], [s.label for s in self.spaces], "relabel")
        return Tensor(spaces, self.coords, self.values, canonical=True)

    def __add__(self, other: "Tensor") -> "Tensor":
        if self.dims != other.dims:
            raise DimensionMismatch([s.label for s in self.spaces], [s.label for s in other.spaces], "sum")
        coords = np.concatenate([self.coords.astype(np.int64), other.coords.astype(np.int64)])
        return Tensor(self.spaces, coords, np.concatenate([self.values, other.values]))

    def __sub__(self, other: "Tensor") -> "Tensor":
        return self + other.scale(-1.0)

    def trace(self, i: int, j: int) -> "Tensor":
        """Sum over the diagonal of legs i and j."""
        if self.dims[i] != self.dims[j]:
            raise DimensionMismatch(self.spaces[i].label, self.spaces[j].label, "trace")
        mask = self.coords[:, i] == self.coords[:, j]
        keep = [k for k in range(self.rank) if k not in (i, j)]
        return Tensor([self.spaces[k] for k in keep], self.coords[mask][:, keep], self.values[mask])

    def __repr__(self) -> str:
        labels = ",".join(s.label for s in self.spaces)
        return f"Tensor([{labels}], dims={self.dims}, nnz={self.nnz})"


def _canonicalize(coords: np.ndarray, values: np.ndarray, dims: Sequence[int]):
    keep = np.abs(values) >= ZERO_TOL
    if not keep.all():
        coords = coords[keep]
        values = values[keep]
    n = values.shape[0]
    if n == 0:
        return coords.reshape(0, len(dims)), values
    if len(dims) == 0:
        total = values.sum()
        if abs(total) < ZERO_TOL:
            return np.zeros((0, 0), dtype=np.int64), np.zeros(0, dtype=np.complex128)
        return np.zeros((1, 0), dtype=np.int64), np.array([total])
    ids = _row_ids(coords, dims)
    order = np.argsort(ids, kind="stable")
    ids = ids[order]
    coords = coords[order]
    values = values[order]
    starts = np.flatnonzero(np.concatenate(([True], ids[1:] != ids[:-1])))
    if starts.size != n:
        values = np.add.reduceat(values, starts)
        coords = coords[starts]
        keep = np.abs(values) >= ZERO_TOL
        coords = coords[keep]
        values = values[keep]
    return coords, values


def contract(a: Tensor, b: Tensor, pairs: Iterable[tuple[int, int]] = ()) -> Tensor:
    """Contract legs of ``a`` with legs of ``b``.

    The result carries the free legs of ``a`` followed by the free legs of
    ``b``, each group in its original order.
    """
    pairs = [(int(i), int(j)) for i, j in pairs]
    pa = [i for i, _ in pairs]
    pb = [j for _, j in pairs]
    if len(set(pa)) != len(pa) or len(set(pb)) != len(pb):
        raise TensorError(f"repeated leg in contraction pairs {pairs}")
    for i, j in pairs:
        if a.dims[i] != b.dims[j]:
            raise DimensionMismatch(a.spaces[i].label, b.spaces[j].label, f"legs {i} and {j}")
    fa = [k for k in range(a.rank) if k not in pa]
    fb = [k for k in range(b.rank) if k not in pb]
    spaces = [a.spaces[k] for k in fa] + [b.spaces[k] for k in fb]
    if a.nnz == 0 or b.nnz == 0:
        return Tensor.zeros(spaces)
    jdims = [a.dims[i] for i in pa]
    if pairs:
        both = np.concatenate([a.coords[:, pa].astype(np.int64), b.coords[:, pb].astype(np.int64)])
        ids = _row_ids(both, jdims)
        ka, kb = ids[: a.nnz], ids[a.nnz:]
    else:
        ka = np.zeros(a.nnz, dtype=np.int64)
        kb = np.zeros(b.nnz, dtype=np.int64)
    order_b = np.argsort(kb, kind="stable")
    kb_sorted = kb[order_b]
    lo = np.searchsorted(kb_sorted, ka, side="left")
    hi = np.searchsorted(kb_sorted, ka, side="right")
    counts = hi - lo
    total = int(counts.sum())
    if total == 0:
        return Tensor.zeros(spaces)
    if total > DENSE_JOIN_MIN and _prod(a.spaces) + _prod(b.spaces) + _prod(spaces) < min(total, DENSE_MAX):
        # the sparse join would be larger than the dense operands
        t = np.tensordot(a.to_dense(), b.to_dense(), axes=(pa, pb))
        return Tensor.from_dense(t, spaces)
    ia = np.repeat(np.arange(a.nnz), counts)
    offsets = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
    ib = order_b[np.repeat(lo, counts) + offsets]
    values = a.values[ia] * b.values[ib]
    coords = np.concatenate([a.coords[ia][:, fa].astype(np.int64), b.coords[ib][:, fb].astype(np.int64)], axis=1)
    return Tensor(spaces, coords, values)


def outer(a: Tensor, b: Tensor) -> Tensor:
    return contract(a, b, [])


def _same_spaces(xs: Sequence[IndexSpace], ys: Sequence[IndexSpace]) -> bool:
    return len(xs) == len(ys) and all(x.matches(y) for x, y in zip(xs, ys))


def _prod(spaces: Sequence[IndexSpace]) -> int:
    out = 1
    for s in spaces:
        out *= s.dim
    return out


class LinearMap:
    """A linear map between tensor products of index spaces.

    The tensor carries the output legs first, then the input legs.
    """

    __slots__ = ("outputs", "inputs", "tensor")

    def __init__(self, outputs: Sequence[IndexSpace], inputs: Sequence[IndexSpace], tensor: Tensor):
        self.outputs = tuple(outputs)
        self.inputs = tuple(inputs)
        want = tuple(s.dim for s in self.outputs + self.inputs)
        if tensor.dims != want:
            raise DimensionMismatch(tensor.dims, want, "tensor legs vs outputs+inputs")
        self.tensor = tensor

    @classmethod
    def from_matrix(cls, matrix, outputs: Sequence[IndexSpace], inputs: Sequence[IndexSpace]) -> "LinearMap":
        outputs, inputs = tuple(outputs), tuple(inputs)
        m = np.asarray(matrix, dtype=np.complex128).reshape(_prod(outputs), _prod(inputs))
        dims = tuple(s.dim for s in outputs + inputs)
        return cls(outputs, inputs, Tensor.from_dense(m.reshape(dims), outputs + inputs))

    @classmethod
    def identity(cls, spaces: Sequence[IndexSpace] | IndexSpace) -> "LinearMap":
        if isinstance(spaces, IndexSpace):
            spaces = (spaces,)
        spaces = tuple(spaces)
        n = _prod(spaces)
        return cls.from_matrix(np.eye(n), spaces, spaces)

    @classmethod
    def vector(cls, vec, space: IndexSpace | Sequence[IndexSpace]) -> "LinearMap":
        spaces = (space,) if isinstance(space, IndexSpace) else tuple(space)
        return cls.from_matrix(np.asarray(vec).reshape(-1, 1), spaces, ())

    @property
    def shape(self) -> tuple[int, int]:
        return _prod(self.outputs), _prod(self.inputs)

    def to_matrix(self) -> np.ndarray:
        return self.tensor.to_dense().reshape(self.shape)

    def to_sparse(self) -> sp.csr_matrix:
        t = self.tensor
        rows = np.zeros(t.nnz, dtype=np.int64)
        cols = np.zeros(t.nnz, dtype=np.int64)
        no = len(self.outputs)
        for k, s in enumerate(self.outputs):
            rows = rows * s.dim + t.coords[:, k].astype(np.int64)
        for k, s in enumerate(self.inputs):
            cols = cols * s.dim + t.coords[:, no + k].astype(np.int64)
        return sp.csr_matrix((t.values, (rows, cols)), shape=self.shape)

    def compose(self, other: "LinearMap") -> "LinearMap":
        """Return ``self ∘ other``."""
        if not _same_spaces(self.inputs, other.outputs):
            raise DimensionMismatch([s.label for s in self.inputs], [s.label for s in other.outputs], "compose")
        no = len(self.outputs)
        pairs = [(no + k, k) for k in range(len(self.inputs))]
        return LinearMap(self.outputs, other.inputs, contract(self.tensor, other.tensor, pairs))

    __matmul__ = compose

    def otimes(self, other: "LinearMap") -> "LinearMap":
        t = outer(self.tensor, other.tensor)
        n1o, n1i = len(self.outputs), len(self.inputs)
        n2o, n2i = len(other.outputs), len(other.inputs)
        perm = (list(range(n1o)) + list(range(n1o + n1i, n1o + n1i + n2o))
                + list(range(n1o, n1o + n1i)) + list(range(n1o + n1i + n2o, n1o + n1i + n2o + n2i)))
        return LinearMap(self.outputs + other.outputs, self.inputs + other.inputs, t.transpose(perm))

    def adjoint(self) -> "LinearMap":
        no = len(self.outputs)
        ni = len(self.inputs)
        perm = list(range(no, no + ni)) + list(range(no))
        return LinearMap(self.inputs, self.outputs, self.tensor.transpose(perm).conj())

    def scale(self, c: complex) -> "LinearMap":
        return LinearMap(self.outputs, self.inputs, self.tensor.scale(c))

    def __add__(self, other: "LinearMap") -> "LinearMap":
        if not (_same_spaces(self.outputs, other.outputs) and _same_spaces(self.inputs, other.inputs)):
            raise DimensionMismatch(self.outputs + self.inputs, other.outputs + other.inputs, "sum")
        return LinearMap(self.outputs, self.inputs, self.tensor + other.tensor)

    def __sub__(self, other: "LinearMap") -> "LinearMap":
        return self + other.scale(-1.0)

    def __repr__(self) -> str:
        o = "⊗".join(s.label for s in self.outputs) or "I"
        i = "⊗".join(s.label for s in self.inputs) or "I"
        return f"LinearMap({i} -> {o}, nnz={self.tensor.nnz})"


def operator_norm(m, *, seed: int = 0, rtol: float = 1e-10, maxiter: int = 100000) -> float:
    """Largest singular value by power iteration on ``m^H m``.

    Accepts a LinearMap or a dense 2-d array.  Iteration stops once the
    residual of the Rayleigh quotient is below ``rtol`` times its value.
    """
    if isinstance(m, LinearMap):
        if m.tensor.nnz == 0:
            return 0.0
        mat = m.to_sparse() if m.tensor.nnz < 0.25 * m.shape[0] * m.shape[1] else m.to_matrix()
    else:
        mat = np.asarray(m, dtype=np.complex128)
        if mat.ndim != 2:
            mat = mat.reshape(mat.shape[0], -1)
        if not np.any(mat):
            return 0.0
    n = mat.shape[1]
    if n == 0 or mat.shape[0] == 0:
        return 0.0
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    x /= np.linalg.norm(x)
    mh = mat.conj().T
    lam = 0.0
    for _ in range(maxiter):
        y = mh @ (mat @ x)
        lam_new = float(np.real(np.vdot(x, y)))
        ny = np.linalg.norm(y)
        if ny == 0.0:
            # random start orthogonal to the row space; restart deterministically
            x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            x /= np.linalg.norm(x)
            continue
        resid = np.linalg.norm(y - lam_new * x)
        x = y / ny
        lam = lam_new
        if resid <= 0.1 * rtol * abs(lam_new):
            break
    return float(np.sqrt(max(lam, 0.0)))


def split_idempotent(d: LinearMap, tol: float = 1e-10, *, basis=None, label: str | None = None):
    """Split an idempotent ``d`` as ``inj ∘ proj`` with ``proj ∘ inj = id``.

    Returns ``(proj, inj, rank)``; for rank 0 both maps are ``None``.  A
    preferred orthonormal basis of the image (columns of ``basis``) is used
    when it reproduces ``d``.
    """
    if not _same_spaces(d.inputs, d.outputs):
        raise DimensionMismatch([s.label for s in d.outputs], [s.label for s in d.inputs], "idempotent must be square")
    m = d.to_matrix()
    defect = operator_norm(m @ m - m)
    if defect > tol:
        raise NotIdempotentError(defect, tol)
    label = label or "im(" + "⊗".join(s.label for s in d.inputs) + ")"
    herm = np.abs(m - m.conj().T).max() <= tol
    u = None
    if basis is not None:
        b = np.asarray(basis, dtype=np.complex128).reshape(m.shape[0], -1)
        if b.shape[1] and np.abs(b @ b.conj().T - m).max() <= 10 * tol:
            u, v = b, b.conj().T
    if u is None and herm:
        w, vecs = np.linalg.eigh(0.5 * (m + m.conj().T))
        sel = w > 0.5
        u = vecs[:, sel]
        v = u.conj().T
    elif u is None:
        uu, s, _ = np.linalg.svd(m)
        r = int(np.sum(s > 0.5))
        u = uu[:, :r]
        v = u.conj().T @ m
    rank = u.shape[1]
    if rank == 0:
        return None, None, 0
    img = IndexSpace(label, rank)
    inj = LinearMap.from_matrix(u, d.outputs, (img,))
    proj = LinearMap.from_matrix(v, (img,), d.inputs)
    return proj, inj, rank


def split_sparse_idempotent(d, tol: float = 1e-10, *, seed: int = 0, oversample: int = 8):
    """Split a sparse idempotent matrix without a full eigendecomposition.

    The rank of an idempotent equals its trace; the image is found from
    ``d`` applied to a seeded random block.  Returns ``(proj, inj, rank)`` as
    dense arrays with ``inj @ proj = d`` and ``proj @ inj = id``.
    """
    d = sp.csr_matrix(d, dtype=np.complex128)
    n = d.shape[0]
    if d.shape[1] != n:
        raise DimensionMismatch(d.shape[0], d.shape[1], "idempotent must be square")
    defect = operator_norm((d @ d - d).toarray()) if n <= 400 else _sparse_norm(d @ d - d, seed)
    if defect > tol:
        raise NotIdempotentError(defect, tol)
    tr = complex(d.diagonal().sum())
    rank = int(round(tr.real))
    if abs(tr - rank) > 1e-6:
        raise NotIdempotentError(abs(tr - rank), tol)
    if rank == 0:
        return None, None, 0
    rng = np.random.default_rng(seed)
    k = min(n, rank + oversample)
    omega = rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))
    y = d @ omega
    u, s, _ = np.linalg.svd(y, full_matrices=False)
    u = u[:, :rank]
    v = (d.conj().T @ u).conj().T
    return v, u, rank


def _sparse_norm(m, seed: int = 0) -> float:
    m = sp.csr_matrix(m)
    if m.nnz == 0:
        return 0.0
    return float(np.abs(m.data).max()) if m.nnz < 2 else float(sp.linalg.svds(m, k=1, return_singular_vectors=False,
                                                                             random_state=seed)[0])


def dense_map_distance(f: LinearMap, g: LinearMap) -> float:
    """Operator-norm distance between two maps with matching shapes."""
    if f.shape != g.shape:
        raise DimensionMismatch(f.shape, g.shape, "distance")
    return operator_norm(f.to_matrix() - g.to_matrix())
