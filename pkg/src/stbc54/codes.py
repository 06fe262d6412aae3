"""Code constructions and their linear-dispersion form.

Two codes are provided:

* ``cod34`` -- the rate-3/4 complex orthogonal design for four antennas
  (three complex symbols, six real coordinates);
* ``new54`` -- the rate-5/4 code that embeds ``cod34`` and adds two more
  complex symbols rotated by ``exp(j*phi)`` (ten real coordinates).

Codewords are built from raw PAM coordinates. No power normalization is
applied here; SNR scaling lives in :mod:`stbc54.channel`.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import DependentWeights
from .linalg import check

CODE_NAMES = ("cod34", "new54")


def default_phi():
    """Rotation angle ``0.5 * arccos(1/5)`` that maximizes the minimum determinant."""
    return 0.5 * np.arccos(0.2)


def new_code_matrix(s, phi=None):
    """4x4 codeword of the rate-5/4 code for real coordinates ``s[0..9]``."""
    x1, x2, x3, x4, x5, x6, x7, x8, x9, x10 = np.asarray(s, dtype=np.float64)
    if phi is None:
        phi = default_phi()
    e = np.exp(1j * phi)
    j = 1j
    return np.array(
        [
            [x1 + j * x2 - j * x10 * e, x3 + j * x4, x5 + j * x6 + j * x9 * e, -e * (x7 + j * x8)],
            [-x3 + j * x4, x1 - j * x2 - j * x10 * e, e * (-x7 + j * x8), -x5 - j * x6 + j * x9 * e],
            [-x5 + j * x6 + j * x9 * e, e * (x7 + j * x8), x1 - j * x2 + j * x10 * e, x3 + j * x4],
            [-e * (-x7 + j * x8), x5 - j * x6 + j * x9 * e, -x3 + j * x4, x1 + j * x2 + j * x10 * e],
        ]
    )


def cod34(x):
    """Rate-3/4 orthogonal design; ``O^H O = sum(x**2) * I``."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (6,):
        raise ValueError(f"cod34 takes 6 real coordinates, got shape {x.shape}")
    return new_code_matrix(np.concatenate([x, np.zeros(4)]), phi=0.0)


def extract_weights(constructor, n_real):
    """Recover the weight matrices of a linear code by unit-vector evaluation.

    ``constructor`` maps a length-``n_real`` real vector to a complex matrix.
    Raises :class:`DependentWeights` if the resulting matrices are not
    linearly independent over the reals.
    """
    eye = np.eye(n_real)
    weights = np.stack([np.asarray(constructor(eye[k]), dtype=np.complex128) for k in range(n_real)])
    stacked = np.stack([check(w.ravel()) for w in weights], axis=1)
    rank = np.linalg.matrix_rank(stacked)
    if rank < n_real:
        raise DependentWeights(f"real rank {rank} < {n_real}")
    return weights


@dataclass(frozen=True)
class CodeDef:
    """An STBC as an ordered stack of ``2K`` weight matrices, shape ``(2K, T, Nt)``."""

    name: str
    weights: np.ndarray = field(repr=False)
    phi: float | None = None

    @property
    def T(self):
        return self.weights.shape[1]

    @property
    def Nt(self):
        return self.weights.shape[2]

    @property
    def n_real(self):
        return self.weights.shape[0]

    @property
    def K(self):
        return self.n_real // 2

    def codeword(self, s):
        """``X(s) = sum_k beta_k s_k``; ``s`` may carry leading batch axes."""
        s = np.asarray(s, dtype=np.float64)
        if s.shape[-1] != self.n_real:
            raise ValueError(f"{self.name} expects {self.n_real} coordinates, got {s.shape[-1]}")
        return np.tensordot(s, self.weights, axes=([-1], [0]))


def make_code(name, phi=None):
    """Build a :class:`CodeDef` by name (``"cod34"`` or ``"new54"``)."""
    if name == "cod34":
        return CodeDef("cod34", extract_weights(cod34, 6))
    if name == "new54":
        phi = default_phi() if phi is None else float(phi)
        return CodeDef("new54", extract_weights(lambda s: new_code_matrix(s, phi), 10), phi=phi)
    raise KeyError(f"unknown code {name!r}; choose from {CODE_NAMES}")
