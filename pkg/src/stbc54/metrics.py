"""Code measurements: minimum determinant, PAPR, worst-case complexity, and
Monte Carlo codeword error rate with average decoding complexity.
"""
import csv
import io
import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._jit import USE_NUMBA, njit
from .channel import (
    Constellation,
    RngStream,
    complex_from_uniforms,
    equivalent_channel,
    real_model,
    snr_to_noise_var,
    symbols_from_uniforms,
    ChannelRealization,
)
from .codes import make_code
from .detector import (
    TIE_EPS,
    conditional_kernel,
    conditional_ml,
    default_slicer_levels,
    exhaustive_kernel,
    exhaustive_ml,
    reduce,
    sphere_decode,
    sphere_kernel,
)
from .errors import ConfigInvalid, RankDeficient, TooLarge
from .linalg import householder_reduce

# ---------------------------------------------------------------- min det


@dataclass(frozen=True)
class MinDetResult:
    value: float
    argmin_delta: np.ndarray
    grid_bound: int

    @property
    def coding_gain(self):
        return self.value**2


@njit
def _cdet(a):
    """Determinant of a small complex matrix by LU with partial pivoting."""
    m = a.copy()
    n = m.shape[0]
    det = 1.0 + 0.0j
    for k in range(n):
        p = k
        best = abs(m[k, k])
        for i in range(k + 1, n):
            if abs(m[i, k]) > best:
                best = abs(m[i, k])
                p = i
        if best == 0.0:
            return 0.0 + 0.0j
        if p != k:
            for j in range(n):
                tmp = m[k, j]
                m[k, j] = m[p, j]
                m[p, j] = tmp
            det = -det
        det *= m[k, k]
        for i in range(k + 1, n):
            f = m[i, k] / m[k, k]
            for j in range(k + 1, n):
                m[i, j] -= f * m[k, j]
    return det


@njit
def _min_det_scan_jit(weights, n_max, shell, stop_at):
    """Scan nonzero ``n`` in ``[-n_max, n_max]^K`` with ``max|n| >= shell``.

    Only the representative with a positive leading nonzero entry is
    evaluated (``|det X(-d)| = |det X(d)|``). Returns ``(min, argmin, hit)``
    where ``hit`` reports an early stop at ``|det| <= stop_at``.
    """
    nre, T, Nt = weights.shape
    side = 2 * n_max + 1
    total = side**nre
    n = np.zeros(nre, dtype=np.int64)
    best = np.inf
    best_n = np.zeros(nre, dtype=np.int64)
    X = np.zeros((T, Nt), dtype=np.complex128)
    for idx in range(total):
        rem = idx
        for t in range(nre - 1, -1, -1):
            n[t] = rem % side - n_max
            rem //= side
        lead = 0
        top = 0
        for t in range(nre):
            if lead == 0 and n[t] != 0:
                lead = n[t]
            a = abs(n[t])
            if a > top:
                top = a
        if lead <= 0 or top < shell:
            continue
        X[:, :] = 0.0
        for k in range(nre):
            if n[k] != 0:
                X += (2.0 * n[k]) * weights[k]
        d = abs(_cdet(X))
        if d < best - 1e-9:
            best = d
            best_n[:] = n
            if d <= stop_at:
                return best, best_n, True
    return best, best_n, False


def _min_det_scan_numpy(weights, n_max, shell, stop_at, chunk=200_000):
    nre = weights.shape[0]
    side = 2 * n_max + 1
    total = side**nre
    powers = side ** np.arange(nre - 1, -1, -1, dtype=np.int64)
    best = np.inf
    best_n = np.zeros(nre, dtype=np.int64)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        n = (idx[:, None] // powers) % side - n_max
        nz = n != 0
        lead = n[np.arange(len(n)), np.argmax(nz, axis=1)]
        keep = (lead > 0) & (np.abs(n).max(axis=1) >= shell)
        n = n[keep]
        if not len(n):
            continue
        d = np.abs(np.linalg.det(np.tensordot(2.0 * n, weights, axes=([1], [0]))))
        i = int(np.argmin(d))
        if d[i] < best - 1e-9:
            best, best_n = float(d[i]), n[i].copy()
            if best <= stop_at:
                return best, best_n, True
    return best, best_n, False


min_det_scan = _min_det_scan_jit if USE_NUMBA else _min_det_scan_numpy


def min_det(code, n_max=2, stop_at=None):
    """Exhaustive min of ``|det X(d)|`` over nonzero even-integer differences.

    The grid is every ``d = 2n`` with ``|n_i| <= n_max``, visited shell by
    shell in increasing ``max|n_i|``. With ``stop_at`` set (e.g. 16, a known
    lower bound) the scan stops at the first value not above it; by default
    the whole grid is evaluated.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if code.T != code.Nt:
        raise ValueError("determinant criterion needs a square code")
    w = np.ascontiguousarray(code.weights)
    threshold = -1.0 if stop_at is None else float(stop_at) + 1e-9
    best, best_n = np.inf, None
    for shell in range(1, n_max + 1):
        val, arg, hit = min_det_scan(w, shell, shell, threshold)
        if val < best - 1e-9:
            best, best_n = float(val), np.asarray(arg).copy()
        if hit:
            break
    return MinDetResult(best, 2 * best_n, n_max)


# ------------------------------------------------------------------- PAPR


def papr(code, M):
    """Per-antenna PAPR in dB for a square QAM constellation.

    Peak: max over codewords and time slots of ``|X(t, n)|^2``, found by
    enumerating only the coordinates that feed each entry. Mean: exact,
    ``T^-1 sum_t sum_k |beta_k(t, n)|^2 E[x^2]``.
    """
    C = Constellation(M)
    axis = C.pam_axis
    w = code.weights
    out = np.empty(code.Nt)
    for n in range(code.Nt):
        peak = 0.0
        for t in range(code.T):
            coeffs = w[:, t, n]
            used = np.flatnonzero(np.abs(coeffs) > 1e-12)
            if not len(used):
                continue
            if C.q ** len(used) > 2**24:
                raise TooLarge(f"entry ({t}, {n}) depends on {len(used)} coordinates")
            grid = np.array(list(itertools.product(axis, repeat=len(used))))
            peak = max(peak, float(np.max(np.abs(grid @ coeffs[used]) ** 2)))
        mean = np.sum(np.abs(w[:, :, n]) ** 2) * C.pam_energy / code.T
        out[n] = 10.0 * np.log10(peak / mean)
    return out


def worst_case_count(code, M):
    """Leaf count of the optimal low-complexity decoder in the worst case.

    ``cod34`` decodes by slicing alone; ``new54`` enumerates its two
    non-orthogonal complex symbols.
    """
    Constellation(M)
    if code.name == "cod34":
        return 1
    if code.name == "new54":
        return M * M
    raise KeyError(code.name)


# ------------------------------------------------------------- simulation

DECODERS = ("sphere", "sphere-plain", "conditional", "exhaustive")
_METHOD_ID = {"sphere": 0, "sphere-plain": 0, "conditional": 1, "exhaustive": 2}
_RETRY_SHIFT = 48


@dataclass
class SimConfig:
    code: str = "new54"
    M: int = 4
    nr: int = 2
    snr_db: list = field(default_factory=lambda: [0.0, 5.0, 10.0, 15.0, 20.0])
    seed: int = 1
    target_errors: int = 100
    max_trials: int = 10_000_000
    decoder: str = "sphere"
    workers: int | None = None
    block_size: int = 1024

    def validate(self):
        if self.code not in ("cod34", "new54"):
            raise ConfigInvalid(f"unknown code {self.code!r}")
        try:
            Constellation(self.M)
        except ValueError as exc:
            raise ConfigInvalid(str(exc)) from None
        if self.nr < 1:
            raise ConfigInvalid("nr must be >= 1")
        if not len(self.snr_db):
            raise ConfigInvalid("snr_db is empty")
        if self.decoder not in DECODERS:
            raise ConfigInvalid(f"decoder must be one of {DECODERS}")
        if self.max_trials < 1 or self.target_errors < 1 or self.block_size < 1:
            raise ConfigInvalid("max_trials, target_errors and block_size must be positive")
        if self.seed < 0 or self.seed >= 2**64:
            raise ConfigInvalid("seed must fit in 64 unsigned bits")


@dataclass
class SimReport:
    snr_points: list
    cer: list
    avg_nodes: list
    trials: list
    errors_observed: list
    seed: int
    meta: dict = field(default_factory=dict)

    def rows(self):
        for i, snr in enumerate(self.snr_points):
            yield {
                "snr_db": f"{snr:g}",
                "trials": str(self.trials[i]),
                "errors": str(self.errors_observed[i]),
                "cer": f"{self.cer[i]:.5e}",
                "avg_nodes": f"{self.avg_nodes[i]:.6f}",
            }

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=["snr_db", "trials", "errors", "cer", "avg_nodes"], lineterminator="\n")
        writer.writeheader()
        writer.writerows(self.rows())
        return buf.getvalue()

    def to_dict(self):
        return {
            "seed": self.seed,
            **self.meta,
            "points": [
                {
                    "snr_db": s,
                    "trials": t,
                    "errors": e,
                    "cer": c,
                    "avg_nodes": a,
                }
                for s, t, e, c, a in zip(self.snr_points, self.trials, self.errors_observed, self.cer, self.avg_nodes)
            ],
        }


def _uniform_count(code, nr):
    return code.n_real + 2 * code.Nt * nr + 2 * code.T * nr


@njit
def _run_block(weights, u, q, nr, noise_var, method, n_sliced, eps):
    """Transmit and decode one codeword per row of ``u``.

    Row layout: ``2K`` symbol uniforms, then ``2*Nt*Nr`` for the channel,
    then ``2*T*Nr`` for the noise. Returns per-row error flags, node counts
    and a flag that is False when the channel draw was rank deficient.
    """
    B = u.shape[0]
    nre, T, Nt = weights.shape
    errs = np.zeros(B, dtype=np.bool_)
    nodes = np.zeros(B, dtype=np.int64)
    good = np.ones(B, dtype=np.bool_)
    sd = np.sqrt(noise_var / 2.0)
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    two_pi = 2.0 * np.pi
    x = np.zeros(nre)
    H = np.zeros((Nt, nr), dtype=np.complex128)
    Y = np.zeros((T, nr), dtype=np.complex128)
    X = np.zeros((T, Nt), dtype=np.complex128)
    rows = 2 * nr * T
    Hr = np.zeros((rows, nre))
    yr = np.zeros(rows)
    for b in range(B):
        row = u[b]
        for k in range(nre):
            x[k] = 2.0 * np.floor(row[k] * q) - (q - 1.0)
        off = nre
        for i in range(Nt * nr):
            rad = np.sqrt(-2.0 * np.log1p(-row[off + 2 * i]))
            ang = two_pi * row[off + 2 * i + 1]
            H[i // nr, i % nr] = inv_sqrt2 * (rad * np.cos(ang) + 1j * rad * np.sin(ang))
        off += 2 * Nt * nr
        X[:, :] = 0.0
        for k in range(nre):
            X += x[k] * weights[k]
        for t in range(T):
            for i in range(nr):
                acc = 0.0 + 0.0j
                for a in range(Nt):
                    acc += X[t, a] * H[a, i]
                Y[t, i] = acc
        if sd > 0.0:
            for idx in range(T * nr):
                rad = np.sqrt(-2.0 * np.log1p(-row[off + 2 * idx]))
                ang = two_pi * row[off + 2 * idx + 1]
                Y[idx // nr, idx % nr] += sd * (rad * np.cos(ang) + 1j * rad * np.sin(ang))
        for i in range(nr):
            for t in range(T):
                r0 = i * T + t
                yr[r0] = Y[t, i].real
                yr[r0 + nr * T] = Y[t, i].imag
                for k in range(nre):
                    v = 0.0 + 0.0j
                    for a in range(Nt):
                        v += weights[k, t, a] * H[a, i]
                    Hr[r0, k] = v.real
                    Hr[r0 + nr * T, k] = v.imag
        R, yp, _, _, ok = householder_reduce(Hr, yr)
        if not ok:
            good[b] = False
            continue
        if method == 0:
            s_hat, _, nd, _ = sphere_kernel(R, yp, q, n_sliced, eps)
        elif method == 1:
            s_hat, _, nd, _ = conditional_kernel(R, yp, q, n_sliced, eps)
        else:
            s_hat, _, nd, _ = exhaustive_kernel(R, yp, q, eps)
        wrong = False
        for k in range(nre):
            if s_hat[k] != x[k]:
                wrong = True
                break
        errs[b] = wrong
        nodes[b] = nd
    return errs, nodes, good


def trial_uniforms(seed, trial, n_u, attempt=0):
    return RngStream(seed, trial + (attempt << _RETRY_SHIFT)).uniforms(n_u)


def simulate_trial(code, constellation, nr, noise_var, seed, trial, decoder="sphere", attempt=0):
    """One trial through the module-level API; the batched kernel must match it.

    Returns ``(s, outcome)``.
    """
    u = trial_uniforms(seed, trial, _uniform_count(code, nr), attempt)
    nre = code.n_real
    s = symbols_from_uniforms(u[:nre], constellation)
    off = nre + 2 * code.Nt * nr
    H = complex_from_uniforms(u[nre:off], (code.Nt, nr))
    Y = code.codeword(s) @ H
    if noise_var > 0.0:
        Y = Y + complex_from_uniforms(u[off:], (code.T, nr), noise_var)
    ch = ChannelRealization(H, noise_var)
    sys = reduce(*real_model(equivalent_channel(code, ch), Y))
    M = constellation.M
    if decoder == "sphere":
        out = sphere_decode(sys, M, default_slicer_levels(code))
    elif decoder == "sphere-plain":
        out = sphere_decode(sys, M, 0)
    elif decoder == "conditional":
        out = conditional_ml(sys, M, default_slicer_levels(code))
    else:
        out = exhaustive_ml(sys, M)
    return s, out


class _BlockRunner:
    def __init__(self, cfg, code, constellation, noise_vars):
        self.cfg = cfg
        self.weights = np.ascontiguousarray(code.weights)
        self.q = constellation.q
        self.n_u = _uniform_count(code, cfg.nr)
        self.noise_vars = noise_vars
        self.method = _METHOD_ID[cfg.decoder]
        self.n_sliced = 0 if cfg.decoder in ("sphere-plain", "exhaustive") else default_slicer_levels(code)
        # trial t always uses stream t, so the block length never changes results
        self.block_size = min(cfg.block_size, cfg.max_trials)

    def _kernel(self, u, nv):
        return _run_block(self.weights, u, self.q, self.cfg.nr, nv, self.method, self.n_sliced, TIE_EPS)

    def __call__(self, block, points):
        """Per-trial ``(errors, nodes)`` for each requested SNR point on one block."""
        first = block * self.block_size
        trials = range(first, first + self.block_size)
        u = np.stack([trial_uniforms(self.cfg.seed, t, self.n_u) for t in trials])
        results = {}
        for p in points:
            errs, nodes, good = self._kernel(u, self.noise_vars[p])
            attempt = 0
            while not good.all():
                # rank-deficient draw: resample that trial from a fresh stream
                attempt += 1
                bad = np.flatnonzero(~good)
                ub = np.stack([trial_uniforms(self.cfg.seed, first + i, self.n_u, attempt) for i in bad])
                e2, n2, g2 = self._kernel(ub, self.noise_vars[p])
                errs[bad], nodes[bad], good[bad] = e2, n2, g2
            results[p] = (errs, nodes)
        return results


def run_cer(cfg):
    """Monte Carlo CER and mean visited nodes per SNR point.

    Trial ``t`` always draws from stream ``(seed, t)``, shared by every SNR
    point, and trials are consumed in index order; results do not depend on
    the number of workers. A point stops at the trial where its error count
    reaches ``target_errors`` or after ``max_trials`` trials.
    """
    cfg.validate()
    code = make_code(cfg.code)
    C = Constellation(cfg.M)
    if cfg.decoder == "exhaustive" and C.q**code.n_real > 2**20:
        raise ConfigInvalid("exhaustive decoding is limited to 2**20 candidates")
    snrs = [float(s) for s in cfg.snr_db]
    noise_vars = [snr_to_noise_var(s, code, C) for s in snrs]
    runner = _BlockRunner(cfg, code, C, noise_vars)
    P = len(snrs)
    trials = [0] * P
    errors = [0] * P
    nodes = [0] * P
    active = set(range(P))
    workers = cfg.workers or os.cpu_count() or 1
    block = 0
    with ThreadPoolExecutor(max_workers=workers) as pool:
        while active:
            wave = list(range(block, block + workers))
            points = sorted(active)
            futures = [pool.submit(runner, b, points) for b in wave]
            for fut in futures:
                res = fut.result()
                for p in points:
                    if p not in active:
                        continue
                    errs, nd = res[p]
                    room = cfg.max_trials - trials[p]
                    cum = np.cumsum(errs[:room])
                    need = cfg.target_errors - errors[p]
                    hit = np.flatnonzero(cum >= need)
                    take = int(hit[0]) + 1 if len(hit) else min(room, len(errs))
                    trials[p] += take
                    errors[p] += int(np.count_nonzero(errs[:take]))
                    nodes[p] += int(nd[:take].sum())
                    if errors[p] >= cfg.target_errors or trials[p] >= cfg.max_trials:
                        active.discard(p)
            block += workers
    return SimReport(
        snr_points=snrs,
        cer=[e / t for e, t in zip(errors, trials)],
        avg_nodes=[n / t for n, t in zip(nodes, trials)],
        trials=trials,
        errors_observed=errors,
        seed=cfg.seed,
        meta={"code": cfg.code, "M": cfg.M, "nr": cfg.nr, "decoder": cfg.decoder},
    )
