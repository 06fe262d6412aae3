"""Bounded-grid checks of the non-vanishing determinant argument for ``new54``.

A difference vector is given by integers ``n`` with ``dx = 2n``. Writing
``s1 = sum(dx[0:6]**2)`` and ``s2 = sum(dx[6:10]**2)``, the determinant of
the difference codeword is::

    |det X(dx)| = |s1**2 + exp(2j*phi) * b + exp(4j*phi) * s2**2|
    b = 2 * (sum(a**2) - 2 * (a1**2 + a2**2 + a3**2)),  sum(a**2) = s1 * s2

where ``a1..a8`` come from Euler's four-square and the two-square identity.
Everything except the final complex modulus is exact integer arithmetic.

The module checks each step on bounded grids: the closed form against
direct determinants, the integer identity, the sign of the discriminant,
the lower bound in the ``s1 != s2`` stratum, the strict bound in the
``s1 == s2`` stratum, and the gap of ``3X1^2 - 5(X2^2 + X3^2 + X4^2)``.
"""
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from ._jit import USE_NUMBA, njit
from .codes import default_phi, make_code, new_code_matrix

BOUND = 16.0
TOL = 1e-6


@dataclass(frozen=True)
class DetDecomposition:
    sigma1: int
    sigma2: int
    b: int
    a: tuple


def _as_dx(n):
    n = np.asarray(n, dtype=np.int64)
    if n.shape[-1] != 10:
        raise ValueError(f"difference vectors have 10 entries, got {n.shape[-1]}")
    return 2 * n


def four_square_terms(dx):
    """The eight integers ``a1..a8`` for differences ``dx`` (last axis of length 10)."""
    x = np.moveaxis(np.asarray(dx, dtype=np.int64), -1, 0)
    x1, x2, x3, x4, x5, x6, x7, x8, x9, x10 = x
    a = np.stack(
        [
            x7 * x4 - x8 * x3 + x9 * x6 - x10 * x2,
            x7 * x6 + x8 * x2 - x9 * x4 - x10 * x3,
            x7 * x2 - x8 * x6 - x9 * x3 + x10 * x4,
            x7 * x3 + x8 * x4 + x9 * x2 + x10 * x6,
            x7 * x1 + x8 * x5,
            x8 * x1 - x7 * x5,
            x9 * x1 + x10 * x5,
            x10 * x1 - x9 * x5,
        ]
    )
    return np.moveaxis(a, 0, -1)


def four_square_identity(n):
    """``a1..a8`` for the difference vector ``dx = 2n``."""
    return four_square_terms(_as_dx(n))


def sigmas(dx):
    dx = np.asarray(dx, dtype=np.int64)
    return np.sum(dx[..., :6] ** 2, axis=-1), np.sum(dx[..., 6:] ** 2, axis=-1)


def b_from_terms(a):
    a = np.asarray(a, dtype=np.int64)
    return 2 * (np.sum(a**2, axis=-1) - 2 * np.sum(a[..., :3] ** 2, axis=-1))


def decompose(n):
    dx = _as_dx(n)
    a = four_square_terms(dx)
    s1, s2 = sigmas(dx)
    return DetDecomposition(int(s1), int(s2), int(b_from_terms(a)), tuple(int(v) for v in a))


def det_closed_form(n, phi=None):
    """``|det X(2n)|`` from the integer decomposition; vectorized over leading axes."""
    phi = default_phi() if phi is None else phi
    dx = _as_dx(n)
    s1, s2 = sigmas(dx)
    b = b_from_terms(four_square_terms(dx))
    return _closed_form(s1, s2, b, phi)


def _closed_form(s1, s2, b, phi):
    s1 = np.asarray(s1, dtype=np.float64)
    s2 = np.asarray(s2, dtype=np.float64)
    return np.abs(s1**2 + np.exp(2j * phi) * b + np.exp(4j * phi) * s2**2)


def det_direct(n, phi=None):
    """``|det X(2n)|`` from the 4x4 codeword; vectorized over leading axes."""
    code = make_code("new54", phi)
    return np.abs(np.linalg.det(code.codeword(_as_dx(n))))


def discriminant(a):
    """``4 (sum a^2 - 2(a1^2+a2^2+a3^2))^2 - 4 (sum a^2)^2``; never positive."""
    a = np.asarray(a, dtype=np.int64)
    total = np.sum(a**2, axis=-1)
    return 4 * (total - 2 * np.sum(a[..., :3] ** 2, axis=-1)) ** 2 - 4 * total**2


def root_moduli(n, phi=None):
    """Moduli of the two roots in ``exp(2j*phi)`` of the determinant quadratic."""
    d = decompose(n)
    if d.sigma2 == 0:
        raise ValueError("quadratic degenerates when sigma2 == 0")
    roots = np.roots([float(d.sigma2) ** 2, float(d.b), float(d.sigma1) ** 2])
    return np.abs(roots)


# ------------------------------------------------------------------ grids


def iter_grid(n_max, dim=10, chunk=500_000):
    """All nonzero integer vectors in ``[-n_max, n_max]^dim``, in chunks."""
    side = 2 * n_max + 1
    total = side**dim
    powers = side ** np.arange(dim - 1, -1, -1, dtype=np.int64)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        n = (idx[:, None] // powers) % side - n_max
        n = n[np.any(n != 0, axis=1)]
        if len(n):
            yield n


@dataclass
class Claim:
    name: str
    bound: str
    observed: str
    passed: bool


@dataclass
class UnequalResult:
    min_det: float
    min_gap_sq: int
    chain_holds: bool
    argmin: np.ndarray
    argmin_direct: float
    count: int
    min_det_sigma1_zero: float
    min_det_sigma2_zero: float


def bound_case_unequal(n_max=1, phi=None):
    """Stratum ``s1 != s2``: checks ``|det| >= (s2 - s1)^2 >= 16`` pointwise.

    The main stratum requires ``s2 > 0``; the slices ``s1 == 0`` and
    ``s2 == 0`` are reported separately.
    """
    phi = default_phi() if phi is None else phi
    best, best_n, gap, chain, count = np.inf, None, None, True, 0
    s1_zero, s2_zero = np.inf, np.inf
    for n in iter_grid(n_max):
        dx = 2 * n
        s1, s2 = sigmas(dx)
        b = b_from_terms(four_square_terms(dx))
        det = _closed_form(s1, s2, b, phi)
        if np.any(s1 == 0):
            s1_zero = min(s1_zero, float(det[s1 == 0].min()))
        if np.any(s2 == 0):
            s2_zero = min(s2_zero, float(det[s2 == 0].min()))
        m = (s1 != s2) & (s2 > 0)
        if not np.any(m):
            continue
        n, det, g = n[m], det[m], (s2[m] - s1[m]) ** 2
        count += len(n)
        chain &= bool(np.all(det >= g * (1.0 - 1e-12) - 1e-9))
        gap = int(g.min()) if gap is None else min(gap, int(g.min()))
        i = int(np.argmin(det))
        if det[i] < best:
            best, best_n = float(det[i]), n[i].copy()
    return UnequalResult(best, gap, chain, best_n, float(det_direct(best_n, phi)), count, s1_zero, s2_zero)


def equal_sigma_stratum(n_max):
    """All ``n`` in the grid with ``s1 == s2 != 0``, built shell by shell.

    Vectors of the first six and last four coordinates are grouped by their
    sum of squares and only matching shells are paired.
    """
    def shells(dim):
        groups = defaultdict(list)
        for v in iter_grid(n_max, dim):
            for row, s in zip(v, np.sum(v**2, axis=1)):
                groups[int(s)].append(row)
        return {k: np.array(v) for k, v in groups.items()}

    head, tail = shells(6), shells(4)
    parts = []
    for s, h in head.items():
        t = tail.get(s)
        if t is None:
            continue
        parts.append(np.concatenate([np.repeat(h, len(t), axis=0), np.tile(t, (len(h), 1))], axis=1))
    return np.concatenate(parts) if parts else np.zeros((0, 10), dtype=np.int64)


@dataclass
class EqualResult:
    min_det: float
    argmin: np.ndarray
    max_closed_vs_direct: float
    reduction_holds: bool
    min_form_gap: int
    count: int


def bound_case_equal(n_max=1, phi=None):
    """Stratum ``s1 == s2``: ``|det| = |2 s^2 cos(2 phi) + b|`` must exceed 16.

    At ``cos(2 phi) = 1/5`` this equals ``(64/5) |3 S^2 - 5 A|`` with
    ``S = sum(n[:6]**2)`` and ``A`` the sum of the first three four-square
    terms divided by 16; both the reduction and the gap ``|3 S^2 - 5 A| >= 2``
    are checked on every point.
    """
    phi = default_phi() if phi is None else phi
    n = equal_sigma_stratum(n_max)
    dx = 2 * n
    s1, _ = sigmas(dx)
    a = four_square_terms(dx)
    b = b_from_terms(a)
    det = np.abs(2.0 * s1.astype(np.float64) ** 2 * np.cos(2 * phi) + b)
    direct = det_direct(n, phi)
    rel = float(np.max(np.abs(det - direct) / direct))
    S = np.sum(n[:, :6] ** 2, axis=1)
    A = np.sum((a[:, :3] // 4) ** 2, axis=1)
    form = np.abs(3 * S**2 - 5 * A)
    reduction = bool(np.allclose(det, 64.0 * form / 5.0, rtol=1e-9)) if np.isclose(np.cos(2 * phi), 0.2) else False
    i = int(np.argmin(det))
    return EqualResult(float(det[i]), n[i], rel, reduction, int(form.min()), len(n))


@njit
def _diophantine_scan_jit(x_max):
    best = -1
    arg = np.zeros(4, dtype=np.int64)
    forbidden = 0
    for x1 in range(x_max + 1):
        t1 = 3 * x1 * x1
        for x2 in range(x_max + 1):
            for x3 in range(x2, x_max + 1):
                for x4 in range(x3, x_max + 1):
                    if x1 == 0 and x4 == 0:
                        continue
                    v = t1 - 5 * (x2 * x2 + x3 * x3 + x4 * x4)
                    av = v if v >= 0 else -v
                    if av <= 1:
                        forbidden += 1
                    if best < 0 or av < best:
                        best = av
                        arg[0] = x1
                        arg[1] = x4
                        arg[2] = x3
                        arg[3] = x2
    return best, arg, forbidden


def _diophantine_scan_numpy(x_max):
    r = np.arange(x_max + 1, dtype=np.int64)
    g2, g3, g4 = np.meshgrid(r, r, r, indexing="ij")
    keep = (g2 <= g3) & (g3 <= g4)
    trip = np.stack([g4[keep], g3[keep], g2[keep]], axis=1)
    s3 = np.sum(trip**2, axis=1)
    best, arg, forbidden = -1, None, 0
    for x1 in range(x_max + 1):
        v = np.abs(3 * x1 * x1 - 5 * s3)
        if x1 == 0:
            v = np.where(s3 == 0, np.iinfo(np.int64).max, v)
        forbidden += int(np.count_nonzero(v <= 1))
        i = int(np.argmin(v))
        if best < 0 or v[i] < best:
            best, arg = int(v[i]), np.concatenate([[x1], trip[i]])
    return best, arg, forbidden


diophantine_scan = _diophantine_scan_jit if USE_NUMBA else _diophantine_scan_numpy


@dataclass
class DiophantineResult:
    min_abs: int
    argmin: tuple
    forbidden_hits: int
    x_max: int


def diophantine_gap(x_max=50):
    """Min of ``|3X1^2 - 5(X2^2+X3^2+X4^2)|`` over nonzero ``|X_i| <= x_max``.

    The form depends only on ``|X_i|`` and is symmetric in ``X2..X4``, so the
    scan covers ``0 <= X2 <= X3 <= X4 <= x_max`` and ``0 <= X1 <= x_max``.
    ``forbidden_hits`` counts tuples with value in ``{0, +1, -1}``.
    """
    if x_max < 1:
        raise ValueError("x_max must be >= 1")
    best, arg, forbidden = diophantine_scan(int(x_max))
    return DiophantineResult(int(best), tuple(int(v) for v in arg), int(forbidden), int(x_max))


def modular_conditions():
    """Integer facts used by the Diophantine step, name -> bool."""
    residues = {x * x % 5 for x in range(5)}
    return {
        "-3*5*5*5 = 1 (mod 8)": (-3 * 5 * 5 * 5) % 8 == 1,
        "3-5-5-5 = 4 (mod 8)": (3 - 5 - 5 - 5) % 8 == 4,
        "squares mod 5 = {0,1,4}": residues == {0, 1, 4},
        "3X^2 mod 5 avoids +-1": not ({3 * r % 5 for r in residues} & {1, 4}),
    }


def _key_layout(n_max):
    """Bit widths packing ``(s1, s2, b)`` into one positive int64."""
    s_max = 24 * n_max * n_max
    b_half = 2 * s_max * 16 * n_max * n_max + 1
    s_bits, b_bits = s_max.bit_length(), (2 * b_half).bit_length()
    if 2 * s_bits + b_bits > 62:
        raise ValueError(f"n_max={n_max} is too large for packed grid keys")
    return s_bits, b_bits, b_half


@njit
def _grid_keys_jit(n_max, start, stop, s_bits, b_bits, b_half):
    """Packed ``(s1, s2, b)`` keys for grid indices ``[start, stop)``; 0 marks the origin."""
    side = 2 * n_max + 1
    out = np.zeros(stop - start, dtype=np.int64)
    dx = np.zeros(10, dtype=np.int64)
    for idx in range(start, stop):
        rem = idx
        for t in range(9, -1, -1):
            dx[t] = 2 * (rem % side - n_max)
            rem //= side
        s1 = 0
        for t in range(6):
            s1 += dx[t] * dx[t]
        s2 = 0
        for t in range(6, 10):
            s2 += dx[t] * dx[t]
        if s1 == 0 and s2 == 0:
            continue
        x1, x2, x3, x4, x5, x6, x7, x8, x9, x10 = dx
        a1 = x7 * x4 - x8 * x3 + x9 * x6 - x10 * x2
        a2 = x7 * x6 + x8 * x2 - x9 * x4 - x10 * x3
        a3 = x7 * x2 - x8 * x6 - x9 * x3 + x10 * x4
        b = 2 * (s1 * s2 - 2 * (a1 * a1 + a2 * a2 + a3 * a3))
        out[idx - start] = (((s1 << s_bits) | s2) << b_bits) | (b + b_half)
    return out


def _grid_keys_numpy(n_max, start, stop, s_bits, b_bits, b_half):
    side = 2 * n_max + 1
    powers = side ** np.arange(9, -1, -1, dtype=np.int64)
    idx = np.arange(start, stop, dtype=np.int64)
    dx = 2 * ((idx[:, None] // powers) % side - n_max)
    s1, s2 = sigmas(dx)
    b = b_from_terms(four_square_terms(dx))
    keys = (((s1 << s_bits) | s2) << b_bits) | (b + b_half)
    return np.where((s1 == 0) & (s2 == 0), 0, keys)


grid_keys = _grid_keys_jit if USE_NUMBA else _grid_keys_numpy


def grid_triples(n_max, chunk=1_000_000):
    """Distinct ``(s1, s2, b)`` over the nonzero grid; enough to evaluate any phi."""
    s_bits, b_bits, b_half = _key_layout(n_max)
    total = (2 * n_max + 1) ** 10
    keys = np.unique(np.concatenate([
        np.unique(grid_keys(n_max, lo, min(lo + chunk, total), s_bits, b_bits, b_half))
        for lo in range(0, total, chunk)
    ]))
    keys = keys[keys != 0]
    b = (keys & ((1 << b_bits) - 1)) - b_half
    s = keys >> b_bits
    return np.stack([s >> s_bits, s & ((1 << s_bits) - 1), b], axis=1)


@dataclass
class PhiScan:
    phis: np.ndarray
    minima: np.ndarray
    phi_star: float
    min_at_phi_star: float
    n_max: int

    @property
    def ceiling_holds(self):
        return bool(np.all(self.minima <= BOUND + TOL))

    @property
    def optimum_attained(self):
        return abs(self.min_at_phi_star - BOUND) <= TOL


def phi_optimality_scan(phi_grid=None, n_max=2, triples=None):
    """Grid minimum of ``|det|`` for each rotation angle in ``phi_grid``."""
    if phi_grid is None:
        phi_grid = np.linspace(0.0, np.pi / 2, 202)[1:-1]
    phi_grid = np.asarray(phi_grid, dtype=np.float64)
    if triples is None:
        triples = grid_triples(n_max)
    s1, s2, b = triples.T
    minima = np.array([_closed_form(s1, s2, b, p).min() for p in phi_grid])
    star = default_phi()
    return PhiScan(phi_grid, minima, star, float(_closed_form(s1, s2, b, star).min()), n_max)


@dataclass
class NVDReport:
    n_max: int
    x_max: int
    claims: list = field(default_factory=list)

    @property
    def passed(self):
        return all(c.passed for c in self.claims)

    def add(self, name, bound, observed, passed):
        self.claims.append(Claim(name, bound, observed, bool(passed)))

    def format(self):
        lines = [f"NVD verification (n_max={self.n_max}, x_max={self.x_max})"]
        width = max(len(c.name) for c in self.claims)
        for c in self.claims:
            flag = "PASS" if c.passed else "FAIL"
            lines.append(f"  [{flag}] {c.name:<{width}}  need {c.bound}; observed {c.observed}")
        lines.append("RESULT: " + ("PASS" if self.passed else "FAIL"))
        return "\n".join(lines)


def verify_nvd(n_max=1, x_max=50, samples=10_000, seed=0):
    """Run every check of the determinant argument and collect a report."""
    from .metrics import min_det

    rep = NVDReport(n_max, x_max)
    phi = default_phi()
    rep.add("cos(2 phi*) = 1/5", "|err| <= 1e-15", f"{abs(np.cos(2 * phi) - 0.2):.1e}", abs(np.cos(2 * phi) - 0.2) <= 1e-15)

    ceiling = abs(np.linalg.det(new_code_matrix([2, 0, 0, 0, 0, 0, 0, 0, 0, 0], phi)))
    rep.add("|det O(2,0,...,0)|", "= 16", f"{ceiling:.9f}", abs(ceiling - BOUND) <= TOL)

    rng = np.random.default_rng(seed)
    n = rng.integers(-3, 4, size=(samples, 10))
    n = n[np.any(n != 0, axis=1)]
    cf, direct = det_closed_form(n, phi), det_direct(n, phi)
    rel = float(np.max(np.abs(cf - direct) / np.maximum(direct, 1.0)))
    rep.add("closed form vs direct det", "rel err <= 1e-9", f"{rel:.2e} over {len(n)} draws", rel <= 1e-9)

    total_identity, total_disc, count = True, True, 0
    for g in iter_grid(n_max):
        dx = 2 * g
        a = four_square_terms(dx)
        s1, s2 = sigmas(dx)
        total_identity &= bool(np.all(np.sum(a**2, axis=1) == s1 * s2))
        total_disc &= bool(np.all(discriminant(a) <= 0))
        count += len(g)
    rep.add("sum a_i^2 = s1*s2 (exact)", "all grid points", f"{count} points", total_identity)
    rep.add("discriminant <= 0", "all grid points", f"{count} points", total_disc)

    un = bound_case_unequal(n_max, phi)
    rep.add("s1 != s2: min |det|", ">= 16", f"{un.min_det:.6f} at n={un.argmin.tolist()}", un.min_det >= BOUND - TOL)
    rep.add("s1 != s2: min (s2-s1)^2", ">= 16", str(un.min_gap_sq), un.min_gap_sq >= 16)
    rep.add("s1 != s2: |det| >= (s2-s1)^2", "pointwise", f"{un.count} points", un.chain_holds)
    rep.add("s1 != s2: argmin via direct det", "agrees", f"{un.argmin_direct:.6f}", abs(un.argmin_direct - un.min_det) <= TOL * un.min_det)

    eq = bound_case_equal(n_max, phi)
    rep.add("s1 == s2: min |det|", "> 16", f"{eq.min_det:.6f} over {eq.count} points", eq.min_det > BOUND + TOL)
    rep.add("s1 == s2: closed form vs direct", "rel err <= 1e-9", f"{eq.max_closed_vs_direct:.2e}", eq.max_closed_vs_direct <= 1e-9)
    rep.add("s1 == s2: |det| = 64|3S^2-5A|/5", "pointwise", f"min |3S^2-5A| = {eq.min_form_gap}", eq.reduction_holds and eq.min_form_gap >= 2)

    dio = diophantine_gap(x_max)
    rep.add("|3X1^2-5(X2^2+X3^2+X4^2)| not in {0,1}", "0 hits", f"{dio.forbidden_hits} hits", dio.forbidden_hits == 0)
    rep.add("Diophantine gap minimum", "= 2", f"{dio.min_abs} at X={dio.argmin}", dio.min_abs == 2)
    for name, ok in modular_conditions().items():
        rep.add(name, "holds", str(ok), ok)

    glob = min_det(make_code("new54", phi), n_max)
    rep.add("global min |det| over grid", "= 16", f"{glob.value:.9f} at dx={glob.argmin_delta.tolist()}", abs(glob.value - BOUND) <= TOL)
    return rep
