"""Tensor-train arrays and their low-rank arithmetic.

A d-dimensional array is held as a chain of order-3 kernels
``Q[k]`` of shape ``(r[k-1], n[k], r[k])`` with boundary ranks
``r[0] = r[d] = 1``.  An entry is the product of the matrix slices
selected by the index along each axis:

    a[i1, ..., id] = Q[1][:, i1, :] @ Q[2][:, i2, :] @ ... @ Q[d][:, id, :]

Kernels are C-ordered so the left unfolding ``(r_prev * n, r_next)``
and the right unfolding ``(r_prev, n * r_next)`` are plain reshapes.

All operations are pure: they never mutate their inputs and return
fresh tensors.  Truncation accuracy is governed by absolute Frobenius
thresholds (not relative), so callers scale tolerances themselves.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

FULL_SIZE_LIMIT = 10**7   # refuse to densify anything bigger than this


class CFLViolation(RuntimeError):
    """A displacement exceeded the admissible stencil range."""

    def __init__(self, message, axis=None, max_displacement=None):
        super().__init__(message)
        self.axis = axis
        self.max_displacement = max_displacement


@dataclass(frozen=True)
class TruncationControl:
    """Accuracy knobs for every rounding operation.

    epsilon is an absolute Frobenius-norm budget for the whole
    operation; r_max caps every interior rank (None = unbounded).
    """

    epsilon: float = 0.0
    r_max: int | None = None

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if self.r_max is not None and self.r_max < 1:
            raise ValueError("r_max must be >= 1 or None")

    def local_delta(self, d):
        """Per-SVD threshold distributing epsilon over d-1 cuts."""
        if d <= 1:
            return self.epsilon
        return self.epsilon / math.sqrt(d - 1)

    def scaled(self, factor):
        return TruncationControl(self.epsilon * factor, self.r_max)


class TTTensor:
    """Chain of order-3 kernels representing a d-dimensional array.

    The ``pivot`` attribute is an advisory cache: when it is an int k,
    kernels before k are left-orthogonal and kernels after k are
    right-orthogonal.  Operations that cannot preserve it set it to
    None; correctness never depends on it.
    """

    __slots__ = ("kernels", "pivot")

    def __init__(self, kernels, pivot=None, validate=True):
        self.kernels = [np.asarray(k, dtype=float) for k in kernels]
        self.pivot = pivot
        if validate:
            self._validate()

    def _validate(self):
        if not self.kernels:
            raise ValueError("a TT tensor needs at least one kernel")
        if self.kernels[0].shape[0] != 1 or self.kernels[-1].shape[2] != 1:
            raise ValueError("boundary ranks must be 1")
        for k, kern in enumerate(self.kernels):
            if kern.ndim != 3:
                raise ValueError(f"kernel {k} is not order 3")
            if k > 0 and kern.shape[0] != self.kernels[k - 1].shape[2]:
                raise ValueError(f"rank mismatch between kernels {k - 1} and {k}")
        if self.pivot is not None and not 0 <= self.pivot < len(self.kernels):
            raise ValueError("pivot out of range")

    # -- shape queries -------------------------------------------------

    @property
    def ndim(self):
        return len(self.kernels)

    @property
    def mode_sizes(self):
        return tuple(k.shape[1] for k in self.kernels)

    @property
    def ranks(self):
        """All d+1 bond ranks including the unit boundaries."""
        return (1,) + tuple(k.shape[2] for k in self.kernels)

    @property
    def interior_ranks(self):
        return self.ranks[1:-1]

    @property
    def stored_doubles(self):
        return sum(k.size for k in self.kernels)

    def compression_rate(self):
        return self.stored_doubles / float(np.prod([float(n) for n in self.mode_sizes]))

    def copy(self):
        return TTTensor([k.copy() for k in self.kernels], pivot=self.pivot, validate=False)

    # -- thin method mirrors of the module-level operations ------------

    def entry(self, idx):
        return reconstruct_entry(self, idx)

    def full(self):
        return reconstruct_full(self)

    def norm(self):
        return norm(self)

    def dot(self, other):
        return dot(self, other)

    def __repr__(self):
        return f"TTTensor(modes={self.mode_sizes}, ranks={self.ranks})"


# -- constructors ------------------------------------------------------


def rank_one(factors):
    """TT tensor of the outer product of 1D factor vectors."""
    kernels = [np.asarray(f, dtype=float).reshape(1, -1, 1) for f in factors]
    return TTTensor(kernels, pivot=None, validate=True)


def constant(mode_sizes, value=1.0):
    """Constant tensor; rank one everywhere."""
    factors = [np.full(n, 1.0) for n in mode_sizes]
    factors[0] = factors[0] * value
    return rank_one(factors)


def zeros(mode_sizes):
    """The zero tensor as a rank-1 chain of zero kernels."""
    return rank_one([np.zeros(n) for n in mode_sizes])


def tt_from_full(a, ctrl):
    """Compress a dense array into TT form by sequential SVDs.

    The result satisfies ||full(result) - a||_F <= ctrl.epsilon.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim < 1:
        raise ValueError("need at least one axis")
    d = a.ndim
    sizes = a.shape
    if d == 1:
        return TTTensor([a.reshape(1, -1, 1)], pivot=0, validate=False)
    delta = ctrl.local_delta(d)
    kernels = []
    r_prev = 1
    mat = a.reshape(sizes[0], -1)
    for k in range(d - 1):
        mat = mat.reshape(r_prev * sizes[k], -1)
        u, s, vt = _svd_chop(mat, delta, ctrl.r_max)
        r = s.size
        kernels.append(u.reshape(r_prev, sizes[k], r))
        mat = s[:, None] * vt
        r_prev = r
    kernels.append(mat.reshape(r_prev, sizes[-1], 1))
    return TTTensor(kernels, pivot=d - 1, validate=False)


# -- reconstruction ----------------------------------------------------


def reconstruct_entry(t, idx):
    """Single entry by multiplying the selected kernel slices."""
    idx = tuple(int(i) for i in idx)
    if len(idx) != t.ndim:
        raise ValueError("index length does not match tensor order")
    for i, n in zip(idx, t.mode_sizes):
        if not 0 <= i < n:
            raise IndexError(f"index {i} out of range for mode of size {n}")
    vec = t.kernels[0][:, idx[0], :][0]
    for k in range(1, t.ndim):
        vec = vec @ t.kernels[k][:, idx[k], :]
    return float(vec[0])


def reconstruct_full(t):
    """Dense array; guarded against accidentally huge grids."""
    total = float(np.prod([float(n) for n in t.mode_sizes]))
    if total > FULL_SIZE_LIMIT:
        raise ValueError(f"refusing to build {total:.3g} > {FULL_SIZE_LIMIT:.0e} entries")
    out = t.kernels[0].reshape(t.mode_sizes[0], -1)
    for k in range(1, t.ndim):
        rl, n, rr = t.kernels[k].shape
        out = out @ t.kernels[k].reshape(rl, n * rr)
        out = out.reshape(-1, rr)
    return out.reshape(t.mode_sizes)


# -- rank-preserving algebra -------------------------------------------


def add(a, b):
    """TT sum by block concatenation; interior ranks add."""
    if a.mode_sizes != b.mode_sizes:
        raise ValueError("mode sizes differ")
    d = a.ndim
    if d == 1:
        return TTTensor([a.kernels[0] + b.kernels[0]], validate=False)
    kernels = [np.concatenate([a.kernels[0], b.kernels[0]], axis=2)]
    for k in range(1, d - 1):
        ka, kb = a.kernels[k], b.kernels[k]
        ral, n, rar = ka.shape
        rbl, _, rbr = kb.shape
        blk = np.zeros((ral + rbl, n, rar + rbr))
        blk[:ral, :, :rar] = ka
        blk[ral:, :, rar:] = kb
        kernels.append(blk)
    kernels.append(np.concatenate([a.kernels[-1], b.kernels[-1]], axis=0))
    return TTTensor(kernels, pivot=None, validate=False)


def scale(a, c):
    """Multiply by a scalar (scales one kernel only)."""
    k = a.pivot if a.pivot is not None else 0
    kernels = [kern if j != k else kern * float(c) for j, kern in enumerate(a.kernels)]
    return TTTensor(kernels, pivot=a.pivot, validate=False)


def scale_fiber(a, axis, weights):
    """Multiply all fibers along one axis by a per-index weight."""
    w = np.asarray(weights, dtype=float)
    if w.shape != (a.mode_sizes[axis],):
        raise ValueError("weight vector does not match the mode size")
    kernels = list(a.kernels)
    kernels[axis] = kernels[axis] * w[None, :, None]
    pivot = a.pivot if a.pivot == axis else None
    return TTTensor(kernels, pivot=pivot, validate=False)


def shift_fiber(a, axis, j):
    """Periodic index shift along one axis: out[..., i, ...] = a[..., i+j, ...]."""
    kernels = list(a.kernels)
    kernels[axis] = np.roll(kernels[axis], -int(j), axis=1)
    # a mode permutation keeps every orthogonality property intact
    return TTTensor(kernels, pivot=a.pivot, validate=False)


# -- orthogonalization and rounding ------------------------------------


def _left_qr_step(kernels, k):
    """Make kernel k left-orthogonal, pushing its R factor right."""
    rl, n, rr = kernels[k].shape
    q, rmat = np.linalg.qr(kernels[k].reshape(rl * n, rr))
    kernels[k] = q.reshape(rl, n, -1)
    nxt = kernels[k + 1]
    kernels[k + 1] = (rmat @ nxt.reshape(rr, -1)).reshape(rmat.shape[0], nxt.shape[1], nxt.shape[2])


def _right_qr_step(kernels, k):
    """Make kernel k right-orthogonal, pushing its R factor left."""
    rl, n, rr = kernels[k].shape
    q, rmat = np.linalg.qr(kernels[k].reshape(rl, n * rr).T)
    kernels[k] = q.T.reshape(-1, n, rr)
    prv = kernels[k - 1]
    kernels[k - 1] = (prv.reshape(-1, rl) @ rmat.T).reshape(prv.shape[0], prv.shape[1], -1)


def orthogonalize(a, pivot):
    """QR sweeps from both ends toward the pivot kernel.

    Kernels before the pivot come out left-orthogonal, kernels after it
    right-orthogonal; the whole Frobenius norm sits in the pivot kernel.
    Reuses a cached pivot to shorten the sweeps when possible.
    """
    d = a.ndim
    if not 0 <= pivot < d:
        raise ValueError("pivot out of range")
    if a.pivot == pivot:
        return a
    kernels = [k.copy() for k in a.kernels]
    left_from, right_from = 0, d - 1
    if a.pivot is not None:
        if a.pivot < pivot:
            left_from, right_from = a.pivot, pivot - 1  # right side already done
        else:
            left_from, right_from = pivot, a.pivot      # left side already done
    for k in range(left_from, pivot):
        _left_qr_step(kernels, k)
    for k in range(right_from, pivot, -1):
        _right_qr_step(kernels, k)
    return TTTensor(kernels, pivot=pivot, validate=False)


def _chop_rank(s, delta, r_max):
    """Number of singular values to keep: smallest r with tail <= delta."""
    if s.size == 0:
        return 1
    tails = np.sqrt(np.cumsum(s[::-1] ** 2))[::-1]
    keep = np.nonzero(tails > delta)[0]
    r = int(keep[-1]) + 1 if keep.size else 0
    r = max(r, 1)
    if r_max is not None:
        r = min(r, r_max)
    return r


def _svd_chop(mat, delta, r_max):
    try:
        u, s, vt = np.linalg.svd(mat, full_matrices=False)
    except np.linalg.LinAlgError:
        u, s, vt = scipy.linalg.svd(mat, full_matrices=False, lapack_driver="gesvd")
    r = _chop_rank(s, delta, r_max)
    return u[:, :r], s[:r], vt[:r]


def round(a, ctrl):
    """Quasi-optimal rank truncation with ||out - a||_F <= ctrl.epsilon.

    Left-to-right QR sweep, then right-to-left truncated-SVD sweep with
    per-cut threshold epsilon/sqrt(d-1).  The result is right-orthogonal
    everywhere except the first kernel (pivot 0).
    """
    d = a.ndim
    if d == 1:
        return a.copy()
    w = orthogonalize(a, d - 1)
    kernels = [k.copy() for k in w.kernels]
    delta = ctrl.local_delta(d)
    for k in range(d - 1, 0, -1):
        rl, n, rr = kernels[k].shape
        u, s, vt = _svd_chop(kernels[k].reshape(rl, n * rr), delta, ctrl.r_max)
        r = s.size
        kernels[k] = vt.reshape(r, n, rr)
        prv = kernels[k - 1]
        kernels[k - 1] = (prv.reshape(-1, rl) @ (u * s)).reshape(prv.shape[0], prv.shape[1], r)
    return TTTensor(kernels, pivot=0, validate=False)


# -- inner products ----------------------------------------------------


def dot(a, b):
    """Frobenius inner product <a, b> by chain contraction."""
    if a.mode_sizes != b.mode_sizes:
        raise ValueError("mode sizes differ")
    m = np.tensordot(a.kernels[0][0], b.kernels[0][0], axes=([0], [0]))
    for ka, kb in zip(a.kernels[1:], b.kernels[1:]):
        tmp = np.tensordot(m, ka, axes=([0], [0]))          # (rb, n, ra')
        m = np.tensordot(tmp, kb, axes=([0, 1], [0, 1]))    # (ra', rb')
    return float(m[0, 0])


def norm(a):
    """Frobenius norm, computed stably via orthogonalization."""
    if a.pivot is not None:
        return float(np.linalg.norm(a.kernels[a.pivot]))
    return float(np.linalg.norm(orthogonalize(a, 0).kernels[0]))


# -- rounded Hadamard product ------------------------------------------


def _kernel_product(ka, kb, order_left, order_right):
    """Slice-wise Kronecker product of two kernels.

    order_left/right pick which factor's rank index runs slow on that
    bond ("a" or "b"); the slow side must be the smaller rank so the
    incremental truncation can work on contiguous blocks.
    """
    ral, n, rar = ka.shape
    rbl, _, rbr = kb.shape
    prod = np.einsum("aib,cid->acibd", ka, kb)
    if order_left == "b":
        prod = prod.transpose(1, 0, 2, 3, 4)
    if order_right == "b":
        prod = prod.transpose(0, 1, 2, 4, 3)
    return np.ascontiguousarray(prod).reshape(ral * rbl, n, rar * rbr)


def _incremental_bond_truncate(kernels, k, sigma, tau, delta, r_max):
    """Compress the bond between kernels k-1 and k block by block.

    The left index of kernel k consists of sigma blocks of size tau.
    Start from min(2, sigma) blocks, SVD-truncate, append one block,
    truncate again, and so on; each sub-SVD gets delta / iterations.

    The working block keeps the singular weights (S Vt) while only the
    orthonormal U factors move left; the weights split off once at the
    end.  Peeling off U S per sub-SVD instead would let later sub-SVDs
    re-truncate rows whose true mass sits in the already-exported S, and
    the discarded tails then exceed the budget by large factors.
    """
    rl, n, rr = kernels[k].shape
    mat = kernels[k].reshape(rl, n * rr)
    zmat = kernels[k - 1].reshape(-1, rl)
    iters = max(sigma - 1, 1)
    dl = delta / iters
    taken = min(2, sigma) * tau
    cur = mat[:taken]
    zc = zmat[:, :taken]
    while True:
        u, s, vt = _svd_chop(cur, dl, r_max)
        zc = zc @ u
        if taken >= rl:
            cur = vt
            zc = zc * s
            break
        cur = np.concatenate([s[:, None] * vt, mat[taken:taken + tau]], axis=0)
        zc = np.concatenate([zc, zmat[:, taken:taken + tau]], axis=1)
        taken += tau
    r = cur.shape[0]
    kernels[k] = cur.reshape(r, n, rr)
    prv_shape = kernels[k - 1].shape
    kernels[k - 1] = zc.reshape(prv_shape[0], prv_shape[1], r)


def hadamard_rounded(a, b, ctrl):
    """Entrywise product with on-the-fly rank truncation.

    Both factors are left-orthogonalized first (the kernel-wise product
    of orthogonal chains keeps the truncation error controlled), then a
    right-to-left sweep compresses each bond incrementally over the
    min(r, s) blocks of size max(r, s) instead of one giant SVD.
    """
    if a.mode_sizes != b.mode_sizes:
        raise ValueError("mode sizes differ")
    d = a.ndim
    if d == 1:
        return TTTensor([a.kernels[0] * b.kernels[0]], validate=False)
    aw = orthogonalize(a, d - 1)
    bw = orthogonalize(b, d - 1)
    ra = aw.ranks
    rb = bw.ranks
    # per bond, the smaller rank runs slow so its blocks are contiguous
    slow = ["a" if ra[k] <= rb[k] else "b" for k in range(d + 1)]
    kernels = [
        _kernel_product(aw.kernels[k], bw.kernels[k], slow[k], slow[k + 1])
        for k in range(d)
    ]
    delta = ctrl.local_delta(d)
    for k in range(d - 1, 0, -1):
        sigma = min(ra[k], rb[k])
        tau = max(ra[k], rb[k])
        _incremental_bond_truncate(kernels, k, sigma, tau, delta, ctrl.r_max)
    return TTTensor(kernels, pivot=0, validate=False)


# -- binary snapshots --------------------------------------------------

SNAPSHOT_MAGIC = b"TTSL"
SNAPSHOT_VERSION = 1


def save_tt(t, path):
    """Write magic, version, order, mode sizes, ranks (int64 LE), then
    kernel values (float64 LE, C order, chain order)."""
    with open(path, "wb") as fh:
        fh.write(SNAPSHOT_MAGIC)
        header = np.array(
            [SNAPSHOT_VERSION, t.ndim, *t.mode_sizes, *t.ranks], dtype="<i8"
        )
        header.tofile(fh)
        for k in t.kernels:
            np.ascontiguousarray(k, dtype="<f8").tofile(fh)


def load_tt(path):
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != SNAPSHOT_MAGIC:
            raise ValueError(f"not a TT snapshot (magic {magic!r})")
        version, d = np.fromfile(fh, dtype="<i8", count=2)
        if version != SNAPSHOT_VERSION:
            raise ValueError(f"unsupported snapshot version {version}")
        if d < 1:
            raise ValueError("corrupt snapshot: nonpositive order")
        sizes = np.fromfile(fh, dtype="<i8", count=int(d))
        ranks = np.fromfile(fh, dtype="<i8", count=int(d) + 1)
        if sizes.size != d or ranks.size != d + 1:
            raise ValueError("corrupt snapshot: truncated header")
        kernels = []
        for k in range(int(d)):
            cnt = int(ranks[k] * sizes[k] * ranks[k + 1])
            data = np.fromfile(fh, dtype="<f8", count=cnt)
            if data.size != cnt:
                raise ValueError("corrupt snapshot: truncated kernel data")
            kernels.append(data.reshape(int(ranks[k]), int(sizes[k]), int(ranks[k + 1])))
    return TTTensor(kernels)
