"""Quantum channels through Choi matrices, testers, and non-signaling bipartite channels.

Conventions:

* ``C(Phi) = sum_ij Phi(|i><j|) (x) |i><j|`` on ``out (x) in`` (unnormalized
  maximally entangled input, so ``Tr_out C = 1_in``).
* Bipartite Choi matrices act on ``A_out (x) B_out (x) A_in (x) B_in``; a tensor
  product of single-party operators lives on ``A_out (x) A_in (x) B_out (x) B_in``
  and :func:`swap23_reshuffle` moves between the two orderings.
* A tester ``{F_i}`` pairs with a Choi matrix as ``p_i = Tr(C F_i)`` and sums to
  ``1 (x) sigma``. For an input state ``rho`` on ``in (x) anc`` and a POVM ``E``
  on ``out (x) anc`` one gets ``sigma = (Tr_anc rho)^T``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .boxes import NonLocalBox
from .composites import BipartiteTensor
from .gpt_core import Effect, StateSpace, WitnessSquare
from .matkit import (
    DEFAULT_TOL,
    DimensionError,
    TolerancePolicy,
    hermitian_part,
    hermiticity_residual,
    matrix_from_json,
    matrix_to_json,
    min_eigenvalue,
    partial_trace,
    permute_subsystems,
)


class InvalidChoiError(ValueError):
    pass


class InvalidTesterError(ValueError):
    pass


def tp_residual(op: np.ndarray, dim_out: int, dim_in: int) -> float:
    return float(np.max(np.abs(partial_trace(op, [dim_out, dim_in], 0) - np.eye(dim_in))))


@dataclass(eq=False)
class ChoiMatrix:
    dim_out: int
    dim_in: int
    op: np.ndarray

    def __post_init__(self):
        self.op = np.asarray(self.op, dtype=complex)
        side = self.dim_out * self.dim_in
        if self.op.shape != (side, side):
            raise DimensionError(f"Choi matrix of shape {self.op.shape} does not match {self.dim_out}x{self.dim_in}")

    def residuals(self, tol: TolerancePolicy = DEFAULT_TOL) -> dict[str, float]:
        return {
            "hermiticity": hermiticity_residual(self.op),
            "psd": max(0.0, -min_eigenvalue(self.op, tol)),
            "tp": tp_residual(self.op, self.dim_out, self.dim_in),
        }

    def is_valid(self, tol: TolerancePolicy = DEFAULT_TOL) -> bool:
        r = self.residuals(tol)
        return r["psd"] <= tol.eps_psd and r["tp"] <= tol.eps_eq

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """``Phi(rho) = Tr_in(C (1 (x) rho^T))``."""
        rho = np.asarray(rho, dtype=complex)
        return partial_trace(self.op @ np.kron(np.eye(self.dim_out), rho.T), [self.dim_out, self.dim_in], 1)

    def __add__(self, other: "ChoiMatrix") -> "ChoiMatrix":
        return ChoiMatrix(self.dim_out, self.dim_in, self.op + other.op)

    def __sub__(self, other: "ChoiMatrix") -> "ChoiMatrix":
        return ChoiMatrix(self.dim_out, self.dim_in, self.op - other.op)

    def __mul__(self, scalar) -> "ChoiMatrix":
        return ChoiMatrix(self.dim_out, self.dim_in, self.op * scalar)

    __rmul__ = __mul__

    def to_dict(self) -> dict:
        return {"dim_out": self.dim_out, "dim_in": self.dim_in, "op": matrix_to_json(self.op)}

    @classmethod
    def from_dict(cls, obj: dict) -> "ChoiMatrix":
        return cls(int(obj["dim_out"]), int(obj["dim_in"]), matrix_from_json(obj["op"]))


def choi_from_map(
    action: Callable[[np.ndarray], np.ndarray], dim_in: int, dim_out: int | None = None,
    tol: TolerancePolicy = DEFAULT_TOL, validate: bool = True,
) -> ChoiMatrix:
    """Choi matrix of a linear map given as a callable on ``dim_in x dim_in`` matrices."""
    dim_out = dim_in if dim_out is None else dim_out
    op = np.zeros((dim_out * dim_in, dim_out * dim_in), dtype=complex)
    for i, j in itertools.product(range(dim_in), repeat=2):
        unit = np.zeros((dim_in, dim_in), dtype=complex)
        unit[i, j] = 1.0
        out = np.asarray(action(unit), dtype=complex)
        if out.shape != (dim_out, dim_out):
            raise DimensionError(f"map output has shape {out.shape}, expected {(dim_out, dim_out)}")
        op += np.kron(out, unit)
    c = ChoiMatrix(dim_out, dim_in, op)
    if validate:
        r = c.residuals(tol)
        if r["tp"] > tol.eps_eq:
            raise InvalidChoiError(f"map is not trace preserving (residual {r['tp']:.3e})")
        if r["psd"] > tol.eps_psd:
            raise InvalidChoiError(f"map is not completely positive (min eigenvalue {-r['psd']:.3e})")
    return c


def identity_channel(d: int = 2) -> ChoiMatrix:
    return choi_from_map(lambda x: x, d)


def constant_channel(rho: np.ndarray) -> ChoiMatrix:
    rho = np.asarray(rho, dtype=complex)
    return choi_from_map(lambda x: np.trace(x) * rho, rho.shape[0])


def measure_prepare_channel(effects: Sequence[np.ndarray], states: Sequence[np.ndarray]) -> ChoiMatrix:
    """``Phi(X) = sum_k Tr(E_k X) rho_k``."""
    return choi_from_map(
        lambda x: sum(np.trace(e @ x) * s for e, s in zip(effects, states)),
        np.asarray(effects[0]).shape[0], np.asarray(states[0]).shape[0],
    )


@dataclass(eq=False)
class Tester:
    ops: list[np.ndarray]
    sigma: np.ndarray

    def __post_init__(self):
        self.ops = [np.asarray(f, dtype=complex) for f in self.ops]
        self.sigma = np.asarray(self.sigma, dtype=complex)

    @property
    def dim_in(self) -> int:
        return self.sigma.shape[0]

    @property
    def dim_out(self) -> int:
        return self.ops[0].shape[0] // self.dim_in

    def residuals(self, tol: TolerancePolicy = DEFAULT_TOL) -> dict[str, float]:
        total = sum(self.ops)
        return {
            "normalization": float(np.max(np.abs(total - np.kron(np.eye(self.dim_out), self.sigma)))),
            "psd": max(0.0, -min(min_eigenvalue(f, tol) for f in self.ops)),
            "sigma_trace": abs(np.trace(self.sigma).real - 1.0),
            "sigma_psd": max(0.0, -min_eigenvalue(self.sigma, tol)),
        }

    def is_valid(self, tol: TolerancePolicy = DEFAULT_TOL) -> bool:
        r = self.residuals(tol)
        return max(r["normalization"], r["sigma_trace"]) <= tol.eps_eq and max(r["psd"], r["sigma_psd"]) <= tol.eps_psd

    def to_dict(self) -> dict:
        return {"ops": [matrix_to_json(f) for f in self.ops], "sigma": matrix_to_json(self.sigma)}

    @classmethod
    def from_dict(cls, obj: dict) -> "Tester":
        return cls([matrix_from_json(f) for f in obj["ops"]], matrix_from_json(obj["sigma"]))


def tester_from(
    rho: np.ndarray, povm: Sequence[np.ndarray], dim_in: int, dim_out: int | None = None,
    tol: TolerancePolicy = DEFAULT_TOL,
) -> Tester:
    """Tester for: prepare ``rho`` on ``in (x) anc``, send ``in`` through the channel, measure ``povm`` on ``out (x) anc``."""
    dim_out = dim_in if dim_out is None else dim_out
    rho = hermitian_part(np.asarray(rho, dtype=complex), tol)
    d_anc = rho.shape[0] // dim_in
    if d_anc * dim_in != rho.shape[0]:
        raise DimensionError(f"state of side {rho.shape[0]} does not factor as {dim_in} x ancilla")
    if abs(np.trace(rho).real - 1.0) > tol.eps_eq or min_eigenvalue(rho, tol) < -tol.eps_psd:
        raise InvalidTesterError("input is not a density operator")
    povm = [hermitian_part(np.asarray(e, dtype=complex), tol) for e in povm]
    side = dim_out * d_anc
    for e in povm:
        if e.shape != (side, side):
            raise DimensionError(f"POVM element of shape {e.shape} does not act on out x ancilla ({side})")
        if min_eigenvalue(e, tol) < -tol.eps_psd:
            raise InvalidTesterError("POVM element is not positive")
    if np.max(np.abs(sum(povm) - np.eye(side))) > tol.eps_eq:
        raise InvalidTesterError("POVM does not sum to the identity")
    r = rho.reshape(dim_in, d_anc, dim_in, d_anc)  # [i, b, j, a]
    ops = []
    for e in povm:
        et = e.reshape(dim_out, d_anc, dim_out, d_anc)  # [p, a, o, b]
        # input block (j, i) of F is Tr_anc[E (1 (x) rho_ij)]
        ops.append(np.einsum("paob,ibja->pjoi", et, r).reshape(dim_out * dim_in, dim_out * dim_in))
    sigma = partial_trace(rho, [dim_in, d_anc], 1).T
    return Tester(ops, sigma)


def measure_channel(c: ChoiMatrix, t: Tester) -> np.ndarray:
    if t.ops[0].shape != c.op.shape or t.dim_in != c.dim_in:
        raise DimensionError("tester and channel dimensions differ")
    return np.array([np.trace(c.op @ f).real for f in t.ops])


def swap23_reshuffle(op: np.ndarray, d: int = 2) -> np.ndarray:
    """Swap the middle two of four ``d``-dimensional factors (an involution)."""
    return permute_subsystems(op, [d] * 4, [0, 2, 1, 3])


@dataclass(eq=False)
class BipartiteChoi:
    op: np.ndarray
    d: int = 2

    def __post_init__(self):
        self.op = np.asarray(self.op, dtype=complex)
        if self.op.shape != (self.d**4, self.d**4):
            raise DimensionError(f"bipartite Choi of shape {self.op.shape} does not act on four factors of {self.d}")

    @property
    def dims(self) -> list[int]:
        return [self.d] * 4

    @classmethod
    def from_product(cls, a: ChoiMatrix, b: ChoiMatrix) -> "BipartiteChoi":
        return cls(swap23_reshuffle(np.kron(a.op, b.op), a.dim_out), a.dim_out)

    def as_choi(self) -> ChoiMatrix:
        return ChoiMatrix(self.d**2, self.d**2, self.op)

    def to_dict(self) -> dict:
        return {"d": self.d, "ordering": "A_out,B_out,A_in,B_in", "op": matrix_to_json(self.op)}

    @classmethod
    def from_dict(cls, obj: dict) -> "BipartiteChoi":
        return cls(matrix_from_json(obj["op"]), int(obj.get("d", 2)))


def ns_check(c: BipartiteChoi, tol: TolerancePolicy = DEFAULT_TOL) -> dict:
    """Residuals of ``Tr_{A,out} C = 1_{A,in} (x) C_B`` and ``Tr_{B,out} C = 1_{B,in} (x) C_A``."""
    d = c.d
    dims = c.dims
    t_a = partial_trace(c.op, dims, 0)  # B_out, A_in, B_in
    c_b = partial_trace(t_a, [d, d, d], 1) / d
    target_a = permute_subsystems(np.kron(np.eye(d), c_b), [d, d, d], [1, 0, 2])
    t_b = partial_trace(c.op, dims, 1)  # A_out, A_in, B_in
    c_a = partial_trace(t_b, [d, d, d], 2) / d
    target_b = np.kron(c_a, np.eye(d))
    residuals = {
        "alice_marginal": float(np.max(np.abs(t_a - target_a))),
        "bob_marginal": float(np.max(np.abs(t_b - target_b))),
        "tp": float(np.max(np.abs(partial_trace(c.op, dims, [0, 1]) - np.eye(d * d)))),
        "psd": max(0.0, -min_eigenvalue(c.op, tol)),
    }
    passed = (max(residuals["alice_marginal"], residuals["bob_marginal"], residuals["tp"]) <= tol.eps_eq
              and residuals["psd"] <= tol.eps_psd)
    return {"pass": passed, "residuals": residuals, "C_A": c_a, "C_B": c_b}


def box_from_channel(c: BipartiteChoi, testers_a: Sequence[Tester], testers_b: Sequence[Tester]) -> NonLocalBox:
    """Outcome table for two-outcome testers (outcome 0 is +1) on each side."""
    d = c.d
    p = np.zeros((2, 2, 2, 2))
    for (ci, ta), (di, tb) in itertools.product(enumerate(testers_a), enumerate(testers_b)):
        for (e, fa), (h, fb) in itertools.product(enumerate(ta.ops), enumerate(tb.ops)):
            p[ci, di, e, h] = np.trace(swap23_reshuffle(np.kron(fa, fb), d) @ c.op).real
    return NonLocalBox(p)


# The measure-and-prepare witness square and PR-channel

def _is_projection(n: np.ndarray, tol: TolerancePolicy) -> bool:
    return hermiticity_residual(n) <= tol.eps_eq and float(np.max(np.abs(n @ n - n))) <= tol.eps_eq


def support_projection(rho: np.ndarray, tol: TolerancePolicy = DEFAULT_TOL) -> np.ndarray:
    w, v = np.linalg.eigh(hermitian_part(rho, tol))
    keep = v[:, w > tol.eps_psd]
    return keep @ keep.conj().T


def _check_measure_prepare_inputs(rho1, rho2, n, tol: TolerancePolicy):
    for r in (rho1, rho2):
        if abs(np.trace(r).real - 1.0) > tol.eps_eq or min_eigenvalue(r, tol) < -tol.eps_psd:
            raise ValueError("rho1 and rho2 must be density operators")
    if np.max(np.abs(rho1 @ rho2)) > tol.eps_eq:
        raise ValueError("rho1 and rho2 must be orthogonal (rho1 rho2 = 0)")
    if not _is_projection(n, tol):
        raise ValueError("N must be a projection")


@dataclass(eq=False)
class MeasurePrepareData:
    rho1: np.ndarray
    rho2: np.ndarray
    n: np.ndarray
    sigma1: np.ndarray
    sigma2: np.ndarray
    m: np.ndarray

    @property
    def d(self) -> int:
        return self.rho1.shape[0]

    def testers(self) -> tuple[Tester, Tester]:
        """``C1 = F_{sigma1, M}``, ``C2 = F_{sigma2, M}``; outcome 0 is ``M``."""
        m_perp = np.eye(self.d) - self.m
        return tuple(
            Tester([np.kron(self.m, s.T), np.kron(m_perp, s.T)], s.T) for s in (self.sigma1, self.sigma2)
        )

    def effects(self, space: StateSpace) -> tuple[Effect, Effect]:
        return tuple(effect_on_channel_space(space, t.ops[0]) for t in self.testers())


def measure_prepare_data(
    rho1=None, rho2=None, n=None, sigma1=None, sigma2=None, tol: TolerancePolicy = DEFAULT_TOL,
) -> MeasurePrepareData:
    """Defaults: ``rho1 = N = |0><0|``, ``rho2 = |1><1|``; ``sigma`` defaults to ``N/Tr N`` and ``N^perp/Tr N^perp``."""
    rho1 = np.diag([1.0, 0.0]).astype(complex) if rho1 is None else np.asarray(rho1, dtype=complex)
    rho2 = np.diag([0.0, 1.0]).astype(complex) if rho2 is None else np.asarray(rho2, dtype=complex)
    n = np.diag([1.0, 0.0]).astype(complex) if n is None else np.asarray(n, dtype=complex)
    _check_measure_prepare_inputs(rho1, rho2, n, tol)
    d = rho1.shape[0]
    n_perp = np.eye(d) - n
    if sigma1 is None:
        sigma1 = n / np.trace(n).real
    if sigma2 is None:
        sigma2 = n_perp / np.trace(n_perp).real
    sigma1, sigma2 = np.asarray(sigma1, dtype=complex), np.asarray(sigma2, dtype=complex)
    if np.max(np.abs(n @ sigma1 - sigma1)) > tol.eps_eq or np.max(np.abs(n @ sigma2)) > tol.eps_eq:
        raise ValueError("need N sigma1 = sigma1 and N sigma2 = 0")
    return MeasurePrepareData(rho1, rho2, n, sigma1, sigma2, support_projection(rho1, tol))


def section5_witness_channels(data: MeasurePrepareData | None = None) -> dict[tuple[int, int], ChoiMatrix]:
    data = data or measure_prepare_data()
    r1, r2, n = data.rho1, data.rho2, data.n
    n_perp = np.eye(data.d) - n
    maps = {
        (0, 0): lambda x: np.trace(x) * r2,
        (1, 0): lambda x: np.trace(n @ x) * r1 + np.trace(n_perp @ x) * r2,
        (0, 1): lambda x: np.trace(n @ x) * r2 + np.trace(n_perp @ x) * r1,
        (1, 1): lambda x: np.trace(x) * r1,
    }
    return {ij: choi_from_map(f, data.d) for ij, f in maps.items()}


def build_section5_pr_channel(data: MeasurePrepareData | None = None) -> BipartiteChoi:
    """``Phi(rho) = Tr((N^perp x N^perp) rho) rho_ac + Tr((1 - N^perp x N^perp) rho) rho_cor``."""
    data = data or measure_prepare_data()
    r1, r2, d = data.rho1, data.rho2, data.d
    n_perp = np.eye(d) - data.n
    rho_cor = 0.5 * (np.kron(r1, r1) + np.kron(r2, r2))
    rho_ac = 0.5 * (np.kron(r1, r2) + np.kron(r2, r1))
    q = np.kron(n_perp, n_perp)
    op = np.kron(rho_ac, q.T) + np.kron(rho_cor, (np.eye(d * d) - q).T)
    return BipartiteChoi(op, d)


# Channels as a GPT state space, for the bridge with ``composites``

def hermitian_basis(side: int) -> list[np.ndarray]:
    """Trace-orthonormal Hermitian basis of ``side x side`` matrices, element 0 proportional to the identity."""
    mats = [np.eye(side, dtype=complex) / np.sqrt(side)]
    for k in range(side):
        e = np.zeros((side, side), dtype=complex)
        e[k, k] = 1.0
        mats.append(e)
    for k, l in itertools.combinations(range(side), 2):
        e = np.zeros((side, side), dtype=complex)
        e[k, l] = e[l, k] = 1 / np.sqrt(2)
        mats.append(e)
        e = np.zeros((side, side), dtype=complex)
        e[k, l], e[l, k] = -1j / np.sqrt(2), 1j / np.sqrt(2)
        mats.append(e)
    # Gram-Schmidt with the trace inner product drops the one dependent diagonal unit
    basis: list[np.ndarray] = []
    for m in mats:
        for b in basis:
            m = m - np.trace(b @ m).real * b
        nrm = np.sqrt(np.trace(m @ m).real)
        if nrm > 1e-12:
            basis.append(m / nrm)
    assert len(basis) == side * side
    return basis


def channel_space(d: int = 2) -> StateSpace:
    """Channels on ``C^d`` in coordinates ``x_k = Tr(C B_k)``; ``B_0 = 1/d`` makes ``x_0 = 1``."""
    labels = ("1",) + tuple(f"h{k}" for k in range(1, d**4))
    return StateSpace(f"channels{d}", labels)


def _basis_for(space: StateSpace) -> list[np.ndarray]:
    side = int(round(np.sqrt(space.dim)))
    return hermitian_basis(side)


def choi_to_point(c: ChoiMatrix, space: StateSpace):
    from .gpt_core import DualVector

    basis = _basis_for(space)
    return DualVector(space, np.array([np.trace(c.op @ b).real for b in basis]))


def effect_on_channel_space(space: StateSpace, op: np.ndarray) -> Effect:
    basis = _basis_for(space)
    return Effect(space, np.array([np.trace(op @ b).real for b in basis]))


def witness_square_on_channel_space(chans: dict[tuple[int, int], ChoiMatrix], space: StateSpace) -> WitnessSquare:
    return WitnessSquare(*(choi_to_point(chans[ij], space) for ij in [(0, 0), (1, 0), (0, 1), (1, 1)]))


def tensor_to_bipartite_choi(phi: BipartiteTensor) -> BipartiteChoi:
    """``sum_kl M_kl B_k (x) B_l``, reshuffled into ``A_out, B_out, A_in, B_in`` order."""
    ba, bb = _basis_for(phi.space_a), _basis_for(phi.space_b)
    op = sum(phi.coeffs[k, l] * np.kron(ba[k], bb[l]) for k in range(len(ba)) for l in range(len(bb)))
    d = int(round(np.sqrt(np.sqrt(phi.space_a.dim))))
    return BipartiteChoi(swap23_reshuffle(op, d), d)
