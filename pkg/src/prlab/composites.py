"""Minimal and maximal tensor products, the square PR state and its embeddings.

A bipartite element is stored as a coefficient matrix ``M`` with
``(f x g)(phi) = f.coords @ M @ g.coords``; for a product ``x x y`` this is
``outer(x.coords, y.coords)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import _lp
from .boxes import box_from_state, pr_box
from .gpt_core import (
    AffineMapGPT,
    DualVector,
    Effect,
    SpaceMismatchError,
    StateSpace,
    WitnessSquare,
    build_iota_pi,
    same_space,
    square,
    square_vertex,
)
from .matkit import DEFAULT_TOL, TolerancePolicy


class PreconditionError(ValueError):
    """Raised when the input state does not reproduce the PR table."""


@dataclass(eq=False)
class BipartiteTensor:
    space_a: StateSpace
    space_b: StateSpace
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != (self.space_a.dim, self.space_b.dim):
            raise ValueError(f"coefficient shape {self.coeffs.shape} != ({self.space_a.dim}, {self.space_b.dim})")

    @classmethod
    def product(cls, x: DualVector, y: DualVector) -> "BipartiteTensor":
        return cls(x.space, y.space, np.outer(x.coords, y.coords))

    def pair(self, f: Effect, g: Effect) -> float:
        """``(f x g)(phi)``."""
        if not (same_space(f.space, self.space_a) and same_space(g.space, self.space_b)):
            raise SpaceMismatchError("effects do not match the tensor factors")
        return float(f.coords @ self.coeffs @ g.coords)

    def normalization(self) -> float:
        return float(self.coeffs[0, 0])

    def _same_shape(self, other: "BipartiteTensor"):
        if not (same_space(self.space_a, other.space_a) and same_space(self.space_b, other.space_b)):
            raise SpaceMismatchError("tensors live on different spaces")

    def __add__(self, other: "BipartiteTensor") -> "BipartiteTensor":
        self._same_shape(other)
        return BipartiteTensor(self.space_a, self.space_b, self.coeffs + other.coeffs)

    def __sub__(self, other: "BipartiteTensor") -> "BipartiteTensor":
        self._same_shape(other)
        return BipartiteTensor(self.space_a, self.space_b, self.coeffs - other.coeffs)

    def __mul__(self, scalar: float) -> "BipartiteTensor":
        return BipartiteTensor(self.space_a, self.space_b, self.coeffs * float(scalar))

    __rmul__ = __mul__

    def apply(self, map_a: AffineMapGPT | None = None, map_b: AffineMapGPT | None = None) -> "BipartiteTensor":
        """``(T_A x T_B)(phi)``; ``None`` means the identity on that factor."""
        m, sa, sb = self.coeffs, self.space_a, self.space_b
        if map_a is not None:
            if not same_space(map_a.source, sa):
                raise SpaceMismatchError("map_a does not act on the first factor")
            m, sa = map_a.matrix @ m, map_a.target
        if map_b is not None:
            if not same_space(map_b.source, sb):
                raise SpaceMismatchError("map_b does not act on the second factor")
            m, sb = m @ map_b.matrix.T, map_b.target
        return BipartiteTensor(sa, sb, m)

    def max_difference(self, other: "BipartiteTensor") -> float:
        self._same_shape(other)
        return float(np.max(np.abs(self.coeffs - other.coeffs)))

    def to_dict(self) -> dict:
        return {"spaceA": self.space_a.name, "spaceB": self.space_b.name, "coeffs": self.coeffs.tolist()}

    @classmethod
    def from_dict(cls, obj: dict, resolve=None) -> "BipartiteTensor":
        """``resolve`` maps a space name (or inline space dict) to a :class:`StateSpace`."""
        from .gpt_core import space_by_name

        def get(spec):
            if isinstance(spec, dict):
                return StateSpace.from_dict(spec)
            return (resolve or space_by_name)(spec)

        return cls(get(obj["spaceA"]), get(obj["spaceB"]), np.asarray(obj["coeffs"], dtype=float))


def partial_apply(f: Effect, phi: BipartiteTensor, side: int = 0) -> DualVector:
    """``(f x id)(phi)`` for ``side=0``; ``(id x f)(phi)`` for ``side=1``."""
    if side == 0:
        if not same_space(f.space, phi.space_a):
            raise SpaceMismatchError("effect does not live on the first factor")
        return DualVector(phi.space_b, phi.coeffs.T @ f.coords)
    if side == 1:
        if not same_space(f.space, phi.space_b):
            raise SpaceMismatchError("effect does not live on the second factor")
        return DualVector(phi.space_a, phi.coeffs @ f.coords)
    raise ValueError("side must be 0 or 1")


def marginals(phi: BipartiteTensor) -> tuple[DualVector, DualVector]:
    return partial_apply(phi.space_b.unit, phi, 1), partial_apply(phi.space_a.unit, phi, 0)


def _require_generators(*spaces: StateSpace):
    for k in spaces:
        if k.cone_generators is None:
            raise ValueError(f"state space {k.name!r} has no cone generators; max-tensor test unavailable")


def max_tensor_residuals(phi: BipartiteTensor) -> dict[str, float]:
    _require_generators(phi.space_a, phi.space_b)
    vals = phi.space_a.cone_generators @ phi.coeffs @ phi.space_b.cone_generators.T
    return {"positivity": max(0.0, -float(vals.min())), "normalization": abs(phi.normalization() - 1.0)}


def in_max_tensor(phi: BipartiteTensor, tol: TolerancePolicy = DEFAULT_TOL) -> bool:
    return max(max_tensor_residuals(phi).values()) <= tol.eps_eq


def in_min_tensor(phi: BipartiteTensor, tol: TolerancePolicy = DEFAULT_TOL) -> bool:
    """LP: is ``phi`` a convex combination of products of vertices?"""
    for k in (phi.space_a, phi.space_b):
        k._require_vertices()
    Va, Vb = phi.space_a.vertices, phi.space_b.vertices
    cols = [np.outer(v, w).reshape(-1) for v, w in itertools.product(Va, Vb)]
    A_eq = np.column_stack(cols)
    res = _lp.feasible(A_eq=A_eq, b_eq=phi.coeffs.reshape(-1), bounds=[(0, None)] * len(cols), tol=tol.eps_eq)
    return res.feasible


def _pr_combination(x00, x10, x01, x11, y00, y10, y01) -> np.ndarray:
    return 0.5 * (np.outer(x00 - x10, y00) + np.outer(x11, y10) + np.outer(x10, y01))


def phi_S() -> BipartiteTensor:
    """The PR state on the square: ``1/2((s00 - s10) x s00 + s11 x s10 + s10 x s01)``."""
    s = {ij: square_vertex(*ij).coords for ij in [(0, 0), (1, 0), (0, 1), (1, 1)]}
    S = square()
    return BipartiteTensor(S, S, _pr_combination(s[0, 0], s[1, 0], s[0, 1], s[1, 1], s[0, 0], s[1, 0], s[0, 1]))


def embed(iota_a: AffineMapGPT, iota_b: AffineMapGPT) -> BipartiteTensor:
    """``(iota_A x iota_B)(phi_S)``."""
    return phi_S().apply(iota_a, iota_b)


def embed_from_squares(wa: WitnessSquare, wb: WitnessSquare) -> BipartiteTensor:
    """The same element written directly through the witness-square points."""
    return BipartiteTensor(
        wa.space,
        wb.space,
        _pr_combination(wa.x00.coords, wa.x10.coords, wa.x01.coords, wa.x11.coords,
                        wb.x00.coords, wb.x10.coords, wb.x01.coords),
    )


@dataclass(eq=False)
class PRDecomposition:
    witness_a: WitnessSquare
    witness_b: WitnessSquare
    iota_a: AffineMapGPT
    pi_a: AffineMapGPT
    iota_b: AffineMapGPT
    pi_b: AffineMapGPT
    embedded: BipartiteTensor
    phi_perp: BipartiteTensor
    residuals: dict[str, float]


def decompose_pr_state(
    phi: BipartiteTensor, fa: Effect, fa2: Effect, fb: Effect, fb2: Effect,
    tol: TolerancePolicy = DEFAULT_TOL,
) -> PRDecomposition:
    """Split a PR implementation into an embedded square PR state plus a kernel part.

    Bob's witness square comes from Alice's effects (``x11 = 2 (f_A x id)(phi)``
    etc.) and Alice's from Bob's, after which ``phi_perp = phi - (iota_A x iota_B)(phi_S)``.
    """
    box = box_from_state(phi, fa, fa2, fb, fb2)
    dev = box.max_difference(pr_box())
    if dev > tol.eps_eq:
        raise PreconditionError(f"state does not implement the PR-box (max deviation {dev:.3e})")

    def square_from(f, f2, side):
        one = (phi.space_a if side == 0 else phi.space_b).unit
        return WitnessSquare(
            x00=2 * partial_apply(one - f, phi, side),
            x10=2 * partial_apply(f2, phi, side),
            x01=2 * partial_apply(one - f2, phi, side),
            x11=2 * partial_apply(f, phi, side),
        )

    wb = square_from(fa, fa2, 0)
    wa = square_from(fb, fb2, 1)
    iota_a, pi_a = build_iota_pi(wa, fa, fa2, tol)
    iota_b, pi_b = build_iota_pi(wb, fb, fb2, tol)
    embedded = embed(iota_a, iota_b)
    perp = phi - embedded
    residuals = {
        "Pi_A x Pi_B (phi) = phi_S": phi.apply(pi_a, pi_b).max_difference(phi_S()),
        "(Pi_A x id)(phi_perp) = 0": float(np.max(np.abs(pi_a.matrix @ perp.coeffs))),
        "(id x Pi_B)(phi_perp) = 0": float(np.max(np.abs(perp.coeffs @ pi_b.matrix.T))),
        "embedding formula": embedded.max_difference(embed_from_squares(wa, wb)),
    }
    return PRDecomposition(wa, wb, iota_a, pi_a, iota_b, pi_b, embedded, perp, residuals)


def pr_state_uniqueness_search(delta: float = 1e-6, tol: TolerancePolicy = DEFAULT_TOL) -> dict[str, bool]:
    """Look for a state in the maximal square tensor product, other than ``phi_S``, with the PR table.

    For every coefficient and sign an LP asks for a state with the PR box
    whose coefficient moves by at least ``delta``; returns feasibility per probe.
    """
    S = square()
    target = phi_S().coeffs.reshape(-1)
    unit = np.eye(3)[0]
    a_effects = [np.eye(3)[1], np.eye(3)[2]]
    # rows of the box: (h_C x h_D)(phi) = vec(phi) . kron(h_C, h_D)
    A_eq, b_eq = [], []
    ref = pr_box().probs
    for c, fc in enumerate(a_effects):
        for d, gd in enumerate(a_effects):
            for e, hc in enumerate((fc, unit - fc)):
                for h, hd in enumerate((gd, unit - gd)):
                    A_eq.append(np.kron(hc, hd))
                    b_eq.append(ref[c, d, e, h])
    A_eq.append(np.kron(unit, unit))
    b_eq.append(1.0)
    G = S.cone_generators
    A_ub = [-np.kron(g1, g2) for g1 in G for g2 in G]
    b_ub = [0.0] * len(A_ub)
    probes = {}
    for k in range(9):
        for sign in (1.0, -1.0):
            row = np.zeros(9)
            row[k] = -sign  # sign * (m_k - target_k) >= delta
            res = _lp.feasible(
                A_ub=np.vstack(A_ub + [row]),
                b_ub=np.array(b_ub + [-delta - sign * target[k]]),
                A_eq=np.array(A_eq), b_eq=np.array(b_eq),
                bounds=[(None, None)] * 9, tol=tol.eps_eq,
            )
            probes[f"coeff{k}{'+' if sign > 0 else '-'}"] = res.feasible
    return probes
