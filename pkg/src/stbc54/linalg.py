"""Small dense linear algebra: vec, Kronecker product, real embedding, thin QR.

Matrices are plain numpy arrays. Complex arrays use ``complex128`` and real
ones ``float64``; the sizes involved here never exceed a few dozen rows.
"""
import numpy as np

from ._jit import njit
from .errors import RankDeficient

RANK_TOL = 1e-12


def vec(m):
    """Stack the columns of ``m`` into a single column vector."""
    m = np.atleast_2d(np.asarray(m))
    return m.reshape(-1, 1, order="F")


def kron(a, b):
    return np.kron(np.atleast_2d(a), np.atleast_2d(b))


def check(m):
    """Real embedding: real part stacked above imaginary part.

    For a vector ``a`` this gives ``[Re(a); Im(a)]``; for a matrix it stacks
    ``Re(A)`` above ``Im(A)`` row-block-wise, so ``check(H @ s) == check(H) @ s``
    for any real ``s``.
    """
    m = np.asarray(m)
    if m.ndim == 1:
        return np.concatenate([m.real, m.imag]).astype(np.float64)
    return np.vstack([m.real, m.imag]).astype(np.float64)


@njit
def householder_reduce(a, y):
    """Triangularize ``a`` with Householder reflections, carrying ``y`` along.

    Returns ``(r, y_prime, vs, signs, ok)`` where ``r`` is the ``n x n``
    upper-triangular factor with nonnegative diagonal, ``y_prime = Q1^T y``,
    ``vs`` holds the reflection vectors (column ``k`` supported on rows
    ``k:``) and ``signs`` the diagonal sign fix. ``ok`` is False when a
    column collapses below ``RANK_TOL`` times the largest column norm.
    """
    m, n = a.shape
    work = a.copy()
    yy = y.copy()
    vs = np.zeros((m, n))
    signs = np.ones(n)
    colmax = 0.0
    for k in range(n):
        c = np.sqrt(np.sum(a[:, k] ** 2))
        if c > colmax:
            colmax = c
    tol = RANK_TOL * colmax
    ok = colmax > 0.0
    for k in range(n):
        if not ok:
            break
        x = work[k:, k]
        norm = np.sqrt(np.sum(x**2))
        if norm <= tol:
            ok = False
            break
        # reflect onto -sign(x0)*norm to avoid cancellation in v[0]
        alpha = -norm if x[0] >= 0.0 else norm
        v = x.copy()
        v[0] -= alpha
        vv = np.sum(v**2)
        for j in range(k + 1, n):
            f = 2.0 * np.sum(v * work[k:, j]) / vv
            work[k:, j] -= f * v
        f = 2.0 * np.sum(v * yy[k:]) / vv
        yy[k:] -= f * v
        work[k, k] = alpha
        work[k + 1 :, k] = 0.0
        vs[k:, k] = v
    r = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            r[i, j] = work[i, j]
    yp = yy[:n].copy()
    for k in range(n):
        if r[k, k] < 0.0:
            signs[k] = -1.0
            for j in range(k, n):
                r[k, j] = -r[k, j]
            yp[k] = -yp[k]
    return r, yp, vs, signs, ok


@njit
def _form_q1(vs, signs):
    m, n = vs.shape
    q = np.zeros((m, n))
    for k in range(n):
        q[k, k] = 1.0
    for k in range(n - 1, -1, -1):
        v = vs[k:, k]
        vv = np.sum(v**2)
        for j in range(n):
            f = 2.0 * np.sum(v * q[k:, j]) / vv
            q[k:, j] -= f * v
    for j in range(n):
        q[:, j] *= signs[j]
    return q


def thin_qr(a):
    """Thin QR of a tall real matrix via Householder reflections.

    Returns ``(q1, r)`` with orthonormal ``q1`` (``m x n``) and upper-triangular
    ``r`` (``n x n``) having a nonnegative diagonal. Raises
    :class:`RankDeficient` for numerically rank-deficient input.
    """
    a = np.ascontiguousarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < a.shape[1]:
        raise ValueError(f"thin_qr needs a tall matrix, got shape {a.shape}")
    r, _, vs, signs, ok = householder_reduce(a, np.zeros(a.shape[0]))
    if not ok:
        raise RankDeficient("column norm below rank tolerance during QR")
    return _form_q1(vs, signs), r
