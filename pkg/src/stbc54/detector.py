"""Maximum-likelihood detection over the triangularized real system.

All decoders minimize ``||y' - R s||^2`` over ``s`` with every coordinate on
the odd-integer PAM axis of a square QAM constellation, and agree on:

* tie-breaking: candidates whose metrics differ by at most ``TIE_EPS`` are
  ordered lexicographically by their PAM coordinates (first coordinate most
  significant) and the smallest wins;
* counting: a *node* is any partial assignment whose partial metric gets
  computed, pruned or not; a *leaf* is a complete assignment. Coordinates
  resolved by the slicer count one node each. The enumerating decoders
  (exhaustive, conditional) count ``n`` nodes per leaf.
"""
from dataclasses import dataclass

import numpy as np

from ._jit import njit
from .channel import Constellation, RngStream, equivalent_channel, real_model, sample_channel
from .errors import PatternViolation, RankDeficient, TooLarge
from .linalg import householder_reduce

TIE_EPS = 1e-9
PATTERN_TOL = 1e-9
EXHAUSTIVE_LIMIT = 2**20


@dataclass(frozen=True)
class ReducedSystem:
    R: np.ndarray
    y_prime: np.ndarray


@dataclass(frozen=True)
class DecodeOutcome:
    s_hat: np.ndarray
    metric: float
    nodes_visited: int
    leaves_evaluated: int


def reduce(H_real, y_real):
    """QR-reduce ``||y - H s||^2`` to ``||y' - R s||^2`` (same argmin, constant offset)."""
    H_real = np.ascontiguousarray(H_real, dtype=np.float64)
    y_real = np.ascontiguousarray(y_real, dtype=np.float64).ravel()
    r, yp, _, _, ok = householder_reduce(H_real, y_real)
    if not ok:
        raise RankDeficient("equivalent channel is numerically rank deficient")
    return ReducedSystem(r, yp)


def pam_slice(z, r_diag, M):
    """Nearest point of the ``sqrt(M)``-PAM axis to ``z / r_diag`` (closed form).

    Works elementwise on arrays. Uses a fixed number of operations regardless
    of ``M``.
    """
    q = Constellation(M).q
    v = np.asarray(z, dtype=np.float64) / np.asarray(r_diag, dtype=np.float64)
    sign = np.where(v >= 0.0, 1.0, -1.0)
    out = sign * np.minimum(np.abs(2.0 * np.rint((v - 1.0) / 2.0) + 1.0), q - 1.0)
    return out[()] if out.ndim == 0 else out


@njit
def _slice1(v, q):
    s = 1.0 if v >= 0.0 else -1.0
    m = abs(2.0 * np.rint((v - 1.0) / 2.0) + 1.0)
    top = q - 1.0
    return s * (m if m < top else top)


@njit
def _lex_less(a, b):
    for i in range(a.shape[0]):
        if a[i] < b[i]:
            return True
        if a[i] > b[i]:
            return False
    return False


@njit
def _better(metric, x, best, best_x, eps):
    if metric < best - eps:
        return True
    return metric <= best + eps and _lex_less(x, best_x)


@njit
def pattern_ok(R, n_sliced, tol):
    """True if the leading ``n_sliced`` columns of ``R`` are diagonal within ``tol``."""
    for i in range(n_sliced):
        for j in range(i + 1, n_sliced):
            if abs(R[i, j]) > tol:
                return False
    return True


@njit
def _slice_tail(R, y, x, n_sliced, q):
    """Slice coordinates ``0..n_sliced-1`` given the rest; returns their metric share."""
    n = R.shape[0]
    acc = 0.0
    for i in range(n_sliced):
        z = y[i]
        for j in range(n_sliced, n):
            z -= R[i, j] * x[j]
        x[i] = _slice1(z / R[i, i], q)
        e = z - R[i, i] * x[i]
        acc += e * e
    return acc


@njit
def sphere_kernel(R, y, q, n_sliced, eps):
    """Depth-first Schnorr-Euchner sphere decoder with infinite initial radius.

    Levels ``n-1 .. n_sliced`` are enumerated; when ``n_sliced > 0`` the
    remaining levels are resolved by the PAM slicer at each leaf. Children of
    a level are visited in increasing distance from the level's unconstrained
    center (zig-zag), so the first child whose partial metric exceeds the
    current best ends that level.
    """
    n = R.shape[0]
    x = np.zeros(n)
    best_x = np.zeros(n)
    best = np.inf
    z = np.zeros(n)
    c = np.zeros(n)
    lo = np.zeros(n, dtype=np.int64)
    hi = np.zeros(n, dtype=np.int64)
    cur = np.zeros(n, dtype=np.int64)
    pm = np.zeros(n + 1)
    nodes = 0
    leaves = 0
    top = n - 1
    bottom = n_sliced

    k = top
    z[k] = y[k]
    c[k] = z[k] / R[k, k]
    i0 = int(np.rint((c[k] + q - 1.0) / 2.0))
    i0 = min(max(i0, 0), q - 1)
    lo[k] = i0
    hi[k] = i0
    cur[k] = i0
    while True:
        if cur[k] >= 0:
            val = 2.0 * cur[k] - (q - 1.0)
            e = z[k] - R[k, k] * val
            d = pm[k + 1] + e * e
            nodes += 1
            if d > best + eps:
                cur[k] = -1
                continue
            x[k] = val
            pm[k] = d
            if k == bottom:
                total = d
                if bottom > 0:
                    total += _slice_tail(R, y, x, bottom, q)
                    nodes += bottom
                leaves += 1
                if _better(total, x, best, best_x, eps):
                    best = total
                    best_x[:] = x
            else:
                k -= 1
                zk = y[k]
                for j in range(k + 1, n):
                    zk -= R[k, j] * x[j]
                z[k] = zk
                c[k] = zk / R[k, k]
                i0 = int(np.rint((c[k] + q - 1.0) / 2.0))
                i0 = min(max(i0, 0), q - 1)
                lo[k] = i0
                hi[k] = i0
                cur[k] = i0
                continue
        else:
            k += 1
            if k > top:
                break
        # advance level k to its next sibling
        left = lo[k] - 1
        right = hi[k] + 1
        if left < 0 and right > q - 1:
            cur[k] = -1
        elif left < 0:
            hi[k] = right
            cur[k] = right
        elif right > q - 1:
            lo[k] = left
            cur[k] = left
        else:
            dl = abs(c[k] - (2.0 * left - (q - 1.0)))
            dr = abs(c[k] - (2.0 * right - (q - 1.0)))
            if dl <= dr:
                lo[k] = left
                cur[k] = left
            else:
                hi[k] = right
                cur[k] = right
    return best_x, best, nodes, leaves


@njit
def conditional_kernel(R, y, q, n_sliced, eps):
    """Enumerate every assignment of the last ``n - n_sliced`` coordinates, slice the rest."""
    n = R.shape[0]
    m = n - n_sliced
    x = np.zeros(n)
    best_x = np.zeros(n)
    best = np.inf
    idx = np.zeros(m, dtype=np.int64)
    total_leaves = q**m
    for leaf in range(total_leaves):
        rem = leaf
        for t in range(m - 1, -1, -1):
            idx[t] = rem % q
            rem //= q
        for t in range(m):
            x[n_sliced + t] = 2.0 * idx[t] - (q - 1.0)
        metric = 0.0
        for i in range(n_sliced, n):
            e = y[i]
            for j in range(i, n):
                e -= R[i, j] * x[j]
            metric += e * e
        metric += _slice_tail(R, y, x, n_sliced, q)
        if _better(metric, x, best, best_x, eps):
            best = metric
            best_x[:] = x
    return best_x, best, total_leaves * n, total_leaves


@njit
def exhaustive_kernel(R, y, q, eps):
    """Brute-force ML over all ``q**n`` PAM vectors in lexicographic order."""
    n = R.shape[0]
    x = np.zeros(n)
    best_x = np.zeros(n)
    best = np.inf
    total_leaves = q**n
    for leaf in range(total_leaves):
        rem = leaf
        for t in range(n - 1, -1, -1):
            x[t] = 2.0 * (rem % q) - (q - 1.0)
            rem //= q
        metric = 0.0
        for i in range(n):
            e = y[i]
            for j in range(i, n):
                e -= R[i, j] * x[j]
            metric += e * e
        if metric < best - eps:
            best = metric
            best_x[:] = x
    return best_x, best, total_leaves * n, total_leaves


def _outcome(res):
    s, metric, nodes, leaves = res
    return DecodeOutcome(np.asarray(s).copy(), float(metric), int(nodes), int(leaves))


def _check_pattern(R, n_sliced):
    tol = PATTERN_TOL * max(1.0, float(np.max(np.abs(np.diag(R)))))
    if not pattern_ok(R, n_sliced, tol):
        raise PatternViolation(f"leading {n_sliced} columns of R are not diagonal")


def sphere_decode(sys, M, slicer_levels=0):
    """Exact ML by depth-first sphere decoding.

    ``slicer_levels=6`` resolves the first six coordinates by slicing once the
    rest are fixed; this needs the leading 6x6 block of ``R`` to be diagonal.
    """
    q = Constellation(M).q
    n = sys.R.shape[0]
    if not 0 <= slicer_levels < n:
        raise ValueError(f"slicer_levels must be in [0, {n - 1}]")
    if slicer_levels:
        _check_pattern(sys.R, slicer_levels)
    return _outcome(sphere_kernel(sys.R, sys.y_prime, q, slicer_levels, TIE_EPS))


def conditional_ml(sys, M, slicer_levels=6):
    """Conditional ML: enumerate the non-orthogonal coordinates, slice the others.

    For the rate-5/4 code this evaluates exactly ``M**2`` leaves.
    """
    q = Constellation(M).q
    n = sys.R.shape[0]
    if not 0 <= slicer_levels < n:
        raise ValueError(f"slicer_levels must be in [0, {n - 1}]")
    _check_pattern(sys.R, slicer_levels)
    return _outcome(conditional_kernel(sys.R, sys.y_prime, q, slicer_levels, TIE_EPS))


def exhaustive_ml(sys, M):
    q = Constellation(M).q
    n = sys.R.shape[0]
    if q**n > EXHAUSTIVE_LIMIT:
        raise TooLarge(f"{q}**{n} candidates exceed the limit of {EXHAUSTIVE_LIMIT}")
    return _outcome(exhaustive_kernel(sys.R, sys.y_prime, q, TIE_EPS))


def r_pattern(code, trials, nr=2, seed=0, n_sliced=6, tol=PATTERN_TOL):
    """True if R keeps its leading ``n_sliced`` columns diagonal on every random draw."""
    for t in range(trials):
        ch = sample_channel(code.Nt, nr, RngStream(seed, t))
        Hr, _ = real_model(equivalent_channel(code, ch), np.zeros((code.T, nr)))
        sys = reduce(Hr, np.zeros(Hr.shape[0]))
        if not pattern_ok(sys.R, n_sliced, tol):
            return False
    return True


def default_slicer_levels(code):
    """Slicer depth usable for a code: 6 for ``new54``, all-but-one for ``cod34``."""
    return 6 if code.name == "new54" else code.n_real - 1
