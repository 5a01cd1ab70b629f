"""Linear operators in tensor-train form with structured kernels.

A TT matrix is a chain of kernels whose slots M[k][b, b'] are n_k x n_k
matrices; the operator entry is the product of slot entries along the
chain.  Slots are never stored densely unless they have to be: a kernel
carries one of three structure tags,

* ``diag``    - each slot is a diagonal matrix, n values per slot;
* ``stencil`` - each slot is a periodic banded matrix whose single band
  (shared by all rows) lives on a common offset list, p values per slot;
* ``dense``   - n^2 values per slot.

The shift matrix convention matches ``tt.shift_fiber``: offset j means
(S_j u)[i] = u[(i + j) mod n].
"""

import itertools
import math

import numpy as np

from . import tt
from .tt import TruncationControl, TTTensor


class MatrixKernel:
    """One chain link: an (s_left x s_right) grid of structured slots."""

    __slots__ = ("tag", "n", "values", "offsets")

    def __init__(self, tag, n, values, offsets=None):
        self.tag = tag
        self.n = int(n)
        self.values = np.asarray(values, dtype=float)
        self.offsets = None if offsets is None else np.asarray(offsets, dtype=int)
        if tag == "diag":
            if self.values.ndim != 3 or self.values.shape[1] != self.n:
                raise ValueError("diag kernel needs values of shape (s_l, n, s_r)")
        elif tag == "stencil":
            if self.offsets is None:
                raise ValueError("stencil kernel needs an offset list")
            if self.values.ndim != 3 or self.values.shape[1] != self.offsets.size:
                raise ValueError("stencil kernel needs values of shape (s_l, p, s_r)")
            if np.unique(self.offsets % self.n).size != self.offsets.size:
                raise ValueError("stencil offsets collide modulo n")
        elif tag == "dense":
            if self.values.ndim != 4 or self.values.shape[1:3] != (self.n, self.n):
                raise ValueError("dense kernel needs values of shape (s_l, n, n, s_r)")
        else:
            raise ValueError(f"unknown kernel tag {tag!r}")

    @property
    def s_left(self):
        return self.values.shape[0]

    @property
    def s_right(self):
        return self.values.shape[-1]

    @classmethod
    def identity(cls, n):
        return cls("diag", n, np.ones((1, n, 1)))

    @classmethod
    def diagonal(cls, values):
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values.reshape(1, -1, 1)
        return cls("diag", values.shape[1], values)

    @classmethod
    def stencil(cls, n, offsets, bands):
        bands = np.asarray(bands, dtype=float)
        if bands.ndim == 1:
            bands = bands.reshape(1, -1, 1)
        return cls("stencil", n, bands, offsets)

    @classmethod
    def full(cls, values):
        values = np.asarray(values, dtype=float)
        if values.ndim == 2:
            values = values[None, :, :, None]
        return cls("dense", values.shape[1], values)

    # -- structure-preserving rank-slot mixing -------------------------

    def mix_left(self, mat):
        """Replace slots by linear combinations along the left rank index."""
        vals = np.tensordot(mat, self.values, axes=([1], [0]))
        return MatrixKernel(self.tag, self.n, vals, self.offsets)

    def mix_right(self, mat):
        """Replace slots by linear combinations along the right rank index."""
        vals = np.tensordot(self.values, mat, axes=([self.values.ndim - 1], [0]))
        return MatrixKernel(self.tag, self.n, vals, self.offsets)

    # -- conversions ----------------------------------------------------

    def realize(self):
        """Dense (s_l, n, n, s_r) slot array; for oracles and small uses."""
        if self.tag == "dense":
            return self.values.copy()
        out = np.zeros((self.s_left, self.n, self.n, self.s_right))
        if self.tag == "diag":
            ii = np.arange(self.n)
            out[:, ii, ii, :] = self.values
        else:
            ii = np.arange(self.n)
            for o_idx, off in enumerate(self.offsets):
                jj = (ii + off) % self.n
                out[:, ii, jj, :] += self.values[:, o_idx, None, :]
        return out

    def param_sizes(self):
        """Mode size and row-multiplicity weight of the compressed view."""
        if self.tag == "diag":
            return self.n, 1.0
        if self.tag == "stencil":
            return self.offsets.size, math.sqrt(self.n)
        return self.n * self.n, 1.0

    def to_params(self):
        """Kernel over the sparsity pattern, scaled so its Frobenius norm
        equals the operator Frobenius norm contribution."""
        size, weight = self.param_sizes()
        vals = self.values.reshape(self.s_left, size, self.s_right)
        return vals * weight

    def with_params(self, params):
        size, weight = self.param_sizes()
        vals = params / weight
        if self.tag == "dense":
            vals = vals.reshape(vals.shape[0], self.n, self.n, vals.shape[-1])
        return MatrixKernel(self.tag, self.n, vals, self.offsets)

    # -- action on a TT-vector kernel -----------------------------------

    def apply_to(self, ukern):
        """Product kernel of this slot grid acting on a tensor kernel.

        Rank pairs combine with the matrix index slow:
        out[(b u_l), i, (b' u_r)].
        """
        rl, n, rr = ukern.shape
        if n != self.n:
            raise ValueError("mode size mismatch")
        if self.tag == "diag":
            prod = np.einsum("sit,aib->saitb", self.values, ukern)
        elif self.tag == "stencil":
            prod = np.zeros((self.s_left, rl, n, self.s_right, rr))
            for o_idx, off in enumerate(self.offsets):
                shifted = np.roll(ukern, -int(off), axis=1)
                prod += np.einsum("st,aib->saitb", self.values[:, o_idx, :], shifted)
        else:
            prod = np.einsum("sijt,ajb->saitb", self.values, ukern)
        return np.ascontiguousarray(prod).reshape(
            self.s_left * rl, n, self.s_right * rr
        )


class TTMatrix:
    """Chain of MatrixKernel links acting on matching TTTensor shapes."""

    __slots__ = ("kernels",)

    def __init__(self, kernels):
        self.kernels = list(kernels)
        if not self.kernels:
            raise ValueError("a TT matrix needs at least one kernel")
        if self.kernels[0].s_left != 1 or self.kernels[-1].s_right != 1:
            raise ValueError("boundary ranks must be 1")
        for k in range(1, len(self.kernels)):
            if self.kernels[k].s_left != self.kernels[k - 1].s_right:
                raise ValueError(f"rank mismatch between kernels {k - 1} and {k}")

    @property
    def ndim(self):
        return len(self.kernels)

    @property
    def mode_sizes(self):
        return tuple(k.n for k in self.kernels)

    @property
    def ranks(self):
        return (1,) + tuple(k.s_right for k in self.kernels)

    @property
    def interior_ranks(self):
        return self.ranks[1:-1]

    def realize_dense(self):
        """Dense (N, N) operator with C-ordered multi-indices; guarded."""
        total = float(np.prod([float(n) for n in self.mode_sizes])) ** 2
        if total > tt.FULL_SIZE_LIMIT:
            raise ValueError("operator too large to realize densely")
        acc = self.kernels[0].realize()[0]          # (n, n, s)
        rows = cols = self.mode_sizes[0]
        for kern in self.kernels[1:]:
            nxt = kern.realize()                    # (s, n, n, s')
            acc = np.tensordot(acc, nxt, axes=([2], [0]))   # (R, C, n, n, s')
            acc = acc.transpose(0, 2, 1, 3, 4)
            rows *= kern.n
            cols *= kern.n
            acc = acc.reshape(rows, cols, -1)
        return acc[:, :, 0]

    def __repr__(self):
        tags = ",".join(k.tag for k in self.kernels)
        return f"TTMatrix(modes={self.mode_sizes}, ranks={self.ranks}, tags=[{tags}])"


def identity_matrix(mode_sizes):
    return TTMatrix([MatrixKernel.identity(n) for n in mode_sizes])


def diag_matrix(field):
    """Diagonal operator whose diagonal is the given TT tensor."""
    return TTMatrix([MatrixKernel("diag", k.shape[1], k) for k in field.kernels])


def diag_field(m):
    """The diagonal of an all-diag TT matrix, as a TT tensor."""
    if any(k.tag != "diag" for k in m.kernels):
        raise ValueError("operator has non-diagonal kernels")
    return TTTensor([k.values.copy() for k in m.kernels], validate=False)


def add_matrix(a, b):
    """Operator sum by block concatenation, merging structure tags."""
    if a.mode_sizes != b.mode_sizes:
        raise ValueError("mode sizes differ")
    d = a.ndim
    kernels = []
    for k in range(d):
        ka, kb = _unify_tags(a.kernels[k], b.kernels[k])
        sl = ka.s_left + kb.s_left if k > 0 else 1
        sr = ka.s_right + kb.s_right if k < d - 1 else 1
        vals = np.zeros((sl, *ka.values.shape[1:-1], sr))
        if k == 0 and d == 1:
            vals = ka.values + kb.values
        elif k == 0:
            vals = np.concatenate([ka.values, kb.values], axis=-1)
        elif k == d - 1:
            vals = np.concatenate([ka.values, kb.values], axis=0)
        else:
            vals[:ka.s_left, ..., :ka.s_right] = ka.values
            vals[ka.s_left:, ..., ka.s_right:] = kb.values
        kernels.append(MatrixKernel(ka.tag, ka.n, vals, ka.offsets))
    return TTMatrix(kernels)


def _unify_tags(ka, kb):
    """Bring two kernels to a common tag so their slots can concatenate."""
    if ka.tag == kb.tag:
        if ka.tag != "stencil":
            return ka, kb
        if np.array_equal(ka.offsets, kb.offsets):
            return ka, kb
        union = np.unique(np.concatenate([ka.offsets % ka.n, kb.offsets % ka.n]))
        return _restencil(ka, union), _restencil(kb, union)
    if "dense" in (ka.tag, kb.tag) or {ka.tag, kb.tag} == {"diag", "stencil"}:
        return MatrixKernel.full(ka.realize()), MatrixKernel.full(kb.realize())
    raise ValueError("cannot unify kernel tags")


def _restencil(kern, union_offsets):
    vals = np.zeros((kern.s_left, union_offsets.size, kern.s_right))
    pos = {int(o): i for i, o in enumerate(union_offsets)}
    for o_idx, off in enumerate(kern.offsets):
        vals[:, pos[int(off) % kern.n], :] += kern.values[:, o_idx, :]
    return MatrixKernel("stencil", kern.n, vals, union_offsets)


# -- operator rounding ---------------------------------------------------


def round_matrix(m, ctrl):
    """Rank truncation over each kernel's sparsity pattern only.

    Kernels are viewed as tensor kernels over their compressed
    parameterization (diag: n values, stencil: p band values weighted by
    sqrt(n) for the row multiplicity, dense: n^2), swept with the usual
    QR/SVD rounding.  Zero rows and columns of the unfoldings never
    enter any SVD, structure tags survive, and the error is at most
    ctrl.epsilon in the Frobenius norm of the operator.
    """
    params = TTTensor([k.to_params() for k in m.kernels], validate=False)
    rounded = tt.round(params, ctrl)
    kernels = [
        m.kernels[k].with_params(rounded.kernels[k]) for k in range(m.ndim)
    ]
    return TTMatrix(kernels)


# -- matrix-vector products ----------------------------------------------


def apply_direct(m, u):
    """Unrounded product; every bond rank is the product of the factor ranks."""
    if m.mode_sizes != u.mode_sizes:
        raise ValueError("mode sizes differ")
    kernels = [m.kernels[k].apply_to(u.kernels[k]) for k in range(m.ndim)]
    return TTTensor(kernels, pivot=None, validate=False)


def matvec(m, u, ctrl, mode="direct"):
    """Apply a TT matrix to a TT tensor with rounding control.

    Modes:

    * ``direct`` - kernel-wise product then a full rounding sweep; bond
      ranks multiply before truncation.
    * ``diag_with_one_nondiag`` - requires every kernel diagonal except
      one; the diagonal part rides along the orthogonalization sweeps as
      a plain field (so the truncation thresholds stay meaningful) and
      the single structured kernel acts by its stencil product.
    * ``split`` - apply the non-diagonal kernels first as pure index
      shifts (no rank growth per term), then the diagonal part per term
      via the rounded Hadamard product; two rounding errors accumulate.
    """
    if mode == "direct":
        return tt.round(apply_direct(m, u), ctrl)
    if mode == "diag_with_one_nondiag":
        return _matvec_one_nondiag(m, u, ctrl)
    if mode == "split":
        return _matvec_split(m, u, ctrl)
    raise ValueError(f"unknown matvec mode {mode!r}")


def _nondiag_positions(m):
    return [k for k in range(m.ndim) if m.kernels[k].tag != "diag"]


def _matvec_one_nondiag(m, u, ctrl):
    if m.mode_sizes != u.mode_sizes:
        raise ValueError("mode sizes differ")
    nd = _nondiag_positions(m)
    if len(nd) != 1:
        raise ValueError("mode needs exactly one non-diagonal kernel")
    kappa = nd[0]
    d = m.ndim
    uw = tt.orthogonalize(u, kappa)
    # orthogonalize the diagonal fields toward kappa, absorbing the R
    # factors into neighbouring slots; the structured kernel takes linear
    # combinations of its bands, which keeps its tag
    mk = list(m.kernels)
    for k in range(kappa):
        vals = mk[k].values
        sl, n, sr = vals.shape
        q, rmat = np.linalg.qr(vals.reshape(sl * n, sr))
        mk[k] = MatrixKernel("diag", n, q.reshape(sl, n, -1))
        mk[k + 1] = mk[k + 1].mix_left(rmat)
    for k in range(d - 1, kappa, -1):
        vals = mk[k].values
        sl, n, sr = vals.shape
        q, rmat = np.linalg.qr(vals.reshape(sl, n * sr).T)
        mk[k] = MatrixKernel("diag", n, q.T.reshape(-1, n, sr))
        mk[k - 1] = mk[k - 1].mix_right(rmat.T)
    sm = [k.s_left for k in mk] + [1]
    ru = uw.ranks
    kernels = [mk[k].apply_to(uw.kernels[k]) for k in range(d)]
    # re-orthogonalize the tail so the backward sweep starts from a
    # proper pivot at the last kernel
    for k in range(kappa, d - 1):
        tt._left_qr_step(kernels, k)
    delta = ctrl.local_delta(d)
    for k in range(d - 1, 0, -1):
        if k - 1 >= kappa:
            # product structure was mixed away by the QR pass: plain cut
            tt._incremental_bond_truncate(kernels, k, 1, kernels[k].shape[0], delta, ctrl.r_max)
        else:
            sigma = min(sm[k], ru[k])
            tau = max(sm[k], ru[k])
            _swap_bond_if_needed(kernels, k, sm[k], ru[k])
            tt._incremental_bond_truncate(kernels, k, sigma, tau, delta, ctrl.r_max)
    return TTTensor(kernels, pivot=0, validate=False)


def _swap_bond_if_needed(kernels, k, s_m, r_u):
    """apply_to puts the matrix rank slow on every bond; flip bond k-1 so
    the smaller factor runs slow, as the block sweep expects."""
    if s_m <= r_u:
        return
    perm = np.arange(s_m * r_u).reshape(s_m, r_u).T.ravel()
    kernels[k - 1] = np.ascontiguousarray(kernels[k - 1][:, :, perm])
    kernels[k] = np.ascontiguousarray(kernels[k][perm, :, :])


def _matvec_split(m, u, ctrl):
    if m.mode_sizes != u.mode_sizes:
        raise ValueError("mode sizes differ")
    nd = _nondiag_positions(m)
    if any(m.kernels[k].tag != "stencil" for k in nd):
        raise ValueError("split mode needs stencil kernels for every non-diagonal axis")
    if not nd:
        field = diag_field(m)
        return tt.hadamard_rounded(u, field, ctrl)
    # one term per combination of stencil offsets: a pure multi-axis
    # shift of u followed by a diagonal operator whose kernels at the
    # stencil axes are the band values, constant along the mode
    offset_lists = [m.kernels[k].offsets for k in nd]
    combos = list(itertools.product(*[range(o.size) for o in offset_lists]))
    n_terms = len(combos)
    eps_h = ctrl.epsilon / (2 * n_terms)
    eps_a = ctrl.epsilon / (2 * max(n_terms - 1, 1))
    acc = None
    for combo in combos:
        shifted = u
        field_kernels = []
        for k in range(m.ndim):
            kern = m.kernels[k]
            if k in nd:
                o_idx = combo[nd.index(k)]
                shifted = tt.shift_fiber(shifted, k, int(kern.offsets[o_idx]))
                band = kern.values[:, o_idx, :]                  # (s_l, s_r)
                field_kernels.append(np.repeat(band[:, None, :], kern.n, axis=1))
            else:
                field_kernels.append(kern.values)
        field = TTTensor(field_kernels, validate=False)
        term = tt.hadamard_rounded(shifted, field, TruncationControl(eps_h, ctrl.r_max))
        if acc is None:
            acc = term
        else:
            acc = tt.round(tt.add(acc, term), TruncationControl(eps_a, ctrl.r_max))
    return acc
