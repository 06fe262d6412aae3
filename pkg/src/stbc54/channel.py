"""Quasi-static Rayleigh MIMO channel and the equivalent real linear model.

Random draws come from counter-based Philox streams keyed by
``(master_seed, stream_id)``; the same key always reproduces the same
uniforms, and distinct keys give independent streams. Gaussians are made
from those uniforms with the Box-Muller transform::

    r  = sqrt(-2 * log(1 - u1))
    z0 = r * cos(2*pi*u2),  z1 = r * sin(2*pi*u2)

applied to consecutive pairs ``(u[2i], u[2i+1])``.

SNR convention: average received signal power per receive antenna over the
noise power ``N0``. With unit-variance channel taps this is
``E||X||_F^2 / T / N0``.
"""
from dataclasses import dataclass

import numpy as np

from .linalg import check, vec


@dataclass(frozen=True)
class Constellation:
    """Square M-QAM as two PAM axes over the odd integers ``+-1, +-3, ...``."""

    M: int

    def __post_init__(self):
        q = int(round(np.sqrt(self.M)))
        if self.M < 4 or q * q != self.M or q & (q - 1):
            raise ValueError(f"M={self.M} is not a square QAM size (4, 16, 64, ...)")

    @property
    def q(self):
        """Points per PAM axis (``sqrt(M)``)."""
        return int(round(np.sqrt(self.M)))

    @property
    def pam_axis(self):
        return np.arange(-(self.q - 1), self.q, 2, dtype=np.float64)

    @property
    def pam_energy(self):
        """Mean of ``x**2`` over the PAM axis, i.e. ``(M - 1) / 3``."""
        return float(np.mean(self.pam_axis**2))


@dataclass(frozen=True)
class RngStream:
    master_seed: int
    stream_id: int

    def uniforms(self, n):
        """First ``n`` doubles in ``[0, 1)`` of this stream."""
        key = np.array([self.master_seed, self.stream_id], dtype=np.uint64)
        raw = np.random.Philox(counter=0, key=key).random_raw(n)
        return (raw >> np.uint64(11)).astype(np.float64) * (1.0 / 2.0**53)

    def normals(self, n):
        return box_muller(self.uniforms(2 * ((n + 1) // 2)))[:n]

    def complex_normals(self, shape, var=1.0):
        """Circularly symmetric CN(0, var) entries in row-major order."""
        return complex_from_uniforms(self.uniforms(2 * int(np.prod(shape))), shape, var)


def box_muller(u):
    u = np.asarray(u, dtype=np.float64)
    u1, u2 = u[0::2], u[1::2]
    r = np.sqrt(-2.0 * np.log1p(-u1))
    out = np.empty_like(u)
    out[0::2] = r * np.cos(2.0 * np.pi * u2)
    out[1::2] = r * np.sin(2.0 * np.pi * u2)
    return out


def complex_from_uniforms(u, shape, var=1.0):
    """CN(0, var) array from ``2 * prod(shape)`` uniforms; entry ``i`` uses ``u[2i], u[2i+1]``."""
    z = box_muller(u)
    return (np.sqrt(var / 2.0) * (z[0::2] + 1j * z[1::2])).reshape(shape)


def symbols_from_uniforms(u, constellation):
    """Map uniforms in ``[0, 1)`` to equiprobable PAM coordinates."""
    q = constellation.q
    return 2.0 * np.floor(np.asarray(u) * q) - (q - 1.0)


@dataclass(frozen=True)
class ChannelRealization:
    H: np.ndarray
    noise_var: float = 0.0


def sample_channel(nt, nr, rng, noise_var=0.0):
    """One quasi-static ``nt x nr`` channel with i.i.d. CN(0, 1) taps."""
    if nt < 1 or nr < 1:
        raise ValueError("nt and nr must be positive")
    return ChannelRealization(rng.complex_normals((nt, nr)), float(noise_var))


def transmit(X, ch, rng):
    """``Y = X H + W`` with ``W`` entries CN(0, N0)."""
    X = np.atleast_2d(np.asarray(X, dtype=np.complex128))
    if X.shape[1] != ch.H.shape[0]:
        raise ValueError(f"X has {X.shape[1]} columns but H has {ch.H.shape[0]} rows")
    Y = X @ ch.H
    if ch.noise_var > 0.0:
        Y = Y + rng.complex_normals(Y.shape, ch.noise_var)
    return Y


def equivalent_channel(code, ch):
    """Complex ``(Nr*T) x 2K`` matrix with ``vec(X(s) H) = Heq @ s``.

    Block row ``i`` of column ``k`` is ``beta_k @ h_i``, with ``h_i`` the
    ``i``-th column of ``H``.
    """
    H = np.asarray(ch.H)
    if H.shape[0] != code.Nt:
        raise ValueError(f"H has {H.shape[0]} rows, code has Nt={code.Nt}")
    # (k, t, n) x (n, i) -> (i, t, k), then flatten (i, t) as vec does
    blocks = np.einsum("ktn,ni->itk", code.weights, H)
    return blocks.reshape(H.shape[1] * code.T, code.n_real)


def real_model(Heq, Y):
    """Real system ``(check(Heq), check(vec(Y)))``."""
    return check(Heq), check(vec(Y).ravel())


def average_energy(code, constellation):
    """Mean transmitted energy per channel use, ``E||X||_F^2 / T``.

    Coordinates are independent, zero-mean and share the PAM second moment,
    so the expectation reduces to ``sum_k ||beta_k||_F^2 * E[x^2] / T``.
    """
    return float(np.sum(np.abs(code.weights) ** 2) * constellation.pam_energy / code.T)


def snr_to_noise_var(snr_db, code, constellation):
    """Noise variance ``N0`` for the given SNR in dB; ``inf`` maps to 0."""
    snr_db = float(snr_db)
    if np.isnan(snr_db):
        raise ValueError("snr_db is NaN")
    if snr_db == np.inf:
        return 0.0
    return average_energy(code, constellation) / 10.0 ** (snr_db / 10.0)
