"""Dense matrix kernel: Kronecker products, partial trace/transpose, Hermitian spectra.

Matrices are plain ``numpy.ndarray`` objects (complex or real). Every positivity
verdict takes an explicit :class:`TolerancePolicy` so that the slack used is visible
at the call site.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np


class DimensionError(ValueError):
    """Raised when matrix shapes do not match the declared subsystem dimensions."""


class NotHermitianError(ValueError):
    """Raised when a matrix that must be Hermitian is not, beyond ``eps_eq``."""


@dataclass(frozen=True)
class TolerancePolicy:
    eps_psd: float = 1e-10
    eps_eq: float = 1e-9

    def __post_init__(self):
        if not (self.eps_psd > 0 and self.eps_eq > 0):
            raise ValueError("tolerances must be strictly positive")


DEFAULT_TOL = TolerancePolicy()


def kron(*mats: np.ndarray) -> np.ndarray:
    """Kronecker product of one or more matrices, left to right."""
    if not mats:
        raise ValueError("kron needs at least one factor")
    return reduce(np.kron, (np.asarray(m) for m in mats))


def ket(index: int, dim: int = 2) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def proj(vec: np.ndarray) -> np.ndarray:
    """Rank-one operator ``|v><v|``."""
    vec = np.asarray(vec, dtype=complex).reshape(-1)
    return np.outer(vec, vec.conj())


def max_entangled(dim: int) -> np.ndarray:
    """Unnormalized ``sum_i |ii>``."""
    return np.eye(dim, dtype=complex).reshape(dim * dim)


def _check_square(m: np.ndarray, dims: Sequence[int]) -> np.ndarray:
    m = np.asarray(m)
    side = int(np.prod(dims))
    if m.ndim != 2 or m.shape != (side, side):
        raise DimensionError(f"matrix of shape {m.shape} does not act on dims {tuple(dims)}")
    return m


def permute_subsystems(m: np.ndarray, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors: output factor ``k`` is input factor ``perm[k]``."""
    dims = list(dims)
    m = _check_square(m, dims)
    n = len(dims)
    if sorted(perm) != list(range(n)):
        raise ValueError(f"{perm} is not a permutation of {n} factors")
    t = m.reshape(dims + dims)
    axes = list(perm) + [n + p for p in perm]
    side = m.shape[0]
    return t.transpose(axes).reshape(side, side)


def partial_trace(m: np.ndarray, dims: Sequence[int], which: int | Sequence[int]) -> np.ndarray:
    """Trace out the factor(s) ``which`` (0-based) of an operator on ``prod(dims)``."""
    dims = list(dims)
    m = _check_square(m, dims)
    traced = sorted({which} if isinstance(which, (int, np.integer)) else set(which))
    if any(k < 0 or k >= len(dims) for k in traced):
        raise DimensionError(f"factor index out of range for dims {tuple(dims)}")
    keep = [k for k in range(len(dims)) if k not in traced]
    n = len(dims)
    t = m.reshape(dims + dims)
    # move traced row/col axes to the end, then contract them pairwise
    order = keep + [n + k for k in keep] + traced + [n + k for k in traced]
    t = t.transpose(order)
    dk = int(np.prod([dims[k] for k in keep])) if keep else 1
    dt = int(np.prod([dims[k] for k in traced]))
    t = t.reshape(dk, dk, dt, dt)
    return np.trace(t, axis1=2, axis2=3)


def partial_transpose(m: np.ndarray, dims: Sequence[int], which: int) -> np.ndarray:
    """Transpose only tensor factor ``which``."""
    dims = list(dims)
    m = _check_square(m, dims)
    if not 0 <= which < len(dims):
        raise DimensionError(f"factor index {which} out of range for dims {tuple(dims)}")
    n = len(dims)
    t = m.reshape(dims + dims)
    axes = list(range(2 * n))
    axes[which], axes[n + which] = axes[n + which], axes[which]
    return t.transpose(axes).reshape(m.shape)


def hermiticity_residual(m: np.ndarray) -> float:
    m = np.asarray(m)
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


def hermitian_part(m: np.ndarray, tol: TolerancePolicy = DEFAULT_TOL) -> np.ndarray:
    """Return ``(m + m*)/2``; raise if ``m`` is further than ``eps_eq`` from Hermitian."""
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    res = hermiticity_residual(m)
    if res > tol.eps_eq:
        raise NotHermitianError(f"matrix is not Hermitian (residual {res:.3e} > {tol.eps_eq:.1e})")
    return (m + m.conj().T) / 2


def eigvalsh(m: np.ndarray, tol: TolerancePolicy = DEFAULT_TOL) -> np.ndarray:
    return np.linalg.eigvalsh(hermitian_part(m, tol))


def min_eigenvalue(m: np.ndarray, tol: TolerancePolicy = DEFAULT_TOL) -> float:
    return float(eigvalsh(m, tol)[0])


def is_psd(m: np.ndarray, tol: TolerancePolicy = DEFAULT_TOL) -> bool:
    return min_eigenvalue(m, tol) >= -tol.eps_psd


def is_ppt(m: np.ndarray, dims: Sequence[int], which: int = 1, tol: TolerancePolicy = DEFAULT_TOL) -> bool:
    return is_psd(partial_transpose(m, dims, which), tol)


def max_abs(m: np.ndarray) -> float:
    m = np.asarray(m)
    return float(np.max(np.abs(m))) if m.size else 0.0


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR with phase fix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


# JSON encoding shared by every module that persists operators.

def matrix_to_json(m: np.ndarray) -> dict:
    m = np.atleast_2d(np.asarray(m, dtype=complex))
    rows, cols = m.shape
    flat = m.reshape(-1)
    return {"rows": rows, "cols": cols, "re": flat.real.tolist(), "im": flat.imag.tolist()}


def matrix_from_json(obj: dict) -> np.ndarray:
    try:
        rows, cols = int(obj["rows"]), int(obj["cols"])
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", [0.0] * len(re)), dtype=float)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed matrix JSON: {exc}") from exc
    if re.size != rows * cols or im.size != rows * cols:
        raise DimensionError(f"entry count {re.size} does not match {rows}x{cols}")
    return (re + 1j * im).reshape(rows, cols)
