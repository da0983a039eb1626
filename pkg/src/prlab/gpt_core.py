"""Polytopic state spaces, effects, compatibility LPs and witness squares.

A state space ``K`` is stored through a basis of the affine functions ``A(K)``
whose element 0 is always the unit effect. Effects carry their coefficients in
that basis; states (and every other element of ``A(K)*``) carry their values on
the basis, so that ``f(x) = f.coords @ x.coords``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _lp
from .matkit import DEFAULT_TOL, TolerancePolicy


class SpaceMismatchError(ValueError):
    """Raised when objects living on different state spaces are combined."""


class InvalidWitnessSquareError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class StateSpace:
    name: str
    basis_labels: tuple[str, ...]
    vertices: np.ndarray | None = None
    cone_generators: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "basis_labels", tuple(self.basis_labels))
        if not self.basis_labels or self.basis_labels[0] != "1":
            raise ValueError("basis element 0 must be the unit effect '1'")
        for attr in ("vertices", "cone_generators"):
            val = getattr(self, attr)
            if val is not None:
                arr = np.atleast_2d(np.asarray(val, dtype=float))
                if arr.shape[1] != self.dim:
                    raise ValueError(f"{attr} must have {self.dim} coordinates, got {arr.shape[1]}")
                arr.setflags(write=False)
                object.__setattr__(self, attr, arr)
        if self.vertices is not None:
            if np.max(np.abs(self.vertices[:, 0] - 1.0)) > 1e-12:
                raise ValueError("unit effect must evaluate to 1 on every vertex")
            if np.linalg.matrix_rank(self.vertices) != self.dim:
                raise ValueError("vertices must affinely span a set of dimension dim - 1")
            if self.cone_generators is not None:
                vals = self.vertices @ self.cone_generators.T
                if vals.min() < -1e-12:
                    raise ValueError("cone generators must be nonnegative on every vertex")

    @property
    def dim(self) -> int:
        return len(self.basis_labels)

    @property
    def unit(self) -> "Effect":
        return Effect(self, np.eye(self.dim)[0])

    @property
    def zero(self) -> "Effect":
        return Effect(self, np.zeros(self.dim))

    def effect(self, coords: Sequence[float]) -> "Effect":
        return Effect(self, np.asarray(coords, dtype=float))

    def point(self, coords: Sequence[float]) -> "DualVector":
        return DualVector(self, np.asarray(coords, dtype=float))

    def vertex(self, index: int) -> "DualVector":
        self._require_vertices()
        return DualVector(self, self.vertices[index].copy())

    def _require_vertices(self):
        if self.vertices is None:
            raise ValueError(f"state space {self.name!r} has no vertex list")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "basis_labels": list(self.basis_labels),
            "vertices": None if self.vertices is None else self.vertices.tolist(),
            "cone_generators": None if self.cone_generators is None else self.cone_generators.tolist(),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "StateSpace":
        return cls(obj["name"], tuple(obj["basis_labels"]), obj.get("vertices"), obj.get("cone_generators"))


def same_space(a: StateSpace, b: StateSpace) -> bool:
    return a is b or (a.name == b.name and a.basis_labels == b.basis_labels)


def _require_same(a: StateSpace, b: StateSpace):
    if not same_space(a, b):
        raise SpaceMismatchError(f"state spaces differ: {a.name!r} vs {b.name!r}")


class _Linear:
    """Shared vector-space arithmetic for effects and dual vectors."""

    space: StateSpace
    coords: np.ndarray

    def _coerce(self, other):
        if isinstance(other, type(self)):
            _require_same(self.space, other.space)
            return other.coords
        if isinstance(other, _Linear):
            raise TypeError(f"cannot combine {type(self).__name__} with {type(other).__name__}")
        return self._scalar(other)

    def _scalar(self, value):
        return NotImplemented

    def __add__(self, other):
        c = self._coerce(other)
        return NotImplemented if c is NotImplemented else type(self)(self.space, self.coords + c)

    __radd__ = __add__

    def __sub__(self, other):
        c = self._coerce(other)
        return NotImplemented if c is NotImplemented else type(self)(self.space, self.coords - c)

    def __rsub__(self, other):
        c = self._coerce(other)
        return NotImplemented if c is NotImplemented else type(self)(self.space, c - self.coords)

    def __mul__(self, scalar):
        if isinstance(scalar, _Linear):
            return NotImplemented
        return type(self)(self.space, self.coords * float(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return type(self)(self.space, self.coords / float(scalar))

    def __neg__(self):
        return type(self)(self.space, -self.coords)


@dataclass(eq=False)
class DualVector(_Linear):
    space: StateSpace
    coords: np.ndarray

    def __post_init__(self):
        self.coords = np.asarray(self.coords, dtype=float).reshape(-1)
        if self.coords.size != self.space.dim:
            raise ValueError(f"expected {self.space.dim} coordinates, got {self.coords.size}")

    def __repr__(self):
        return f"DualVector({self.space.name}, {np.round(self.coords, 12).tolist()})"


@dataclass(eq=False)
class Effect(_Linear):
    space: StateSpace
    coords: np.ndarray

    def __post_init__(self):
        self.coords = np.asarray(self.coords, dtype=float).reshape(-1)
        if self.coords.size != self.space.dim:
            raise ValueError(f"expected {self.space.dim} coordinates, got {self.coords.size}")

    def _scalar(self, value):
        # a bare number stands for that multiple of the unit effect
        out = np.zeros(self.space.dim)
        out[0] = float(value)
        return out

    def __call__(self, x: DualVector) -> float:
        return evaluate(self, x)

    def is_effect(self, tol: TolerancePolicy = DEFAULT_TOL) -> bool:
        """``0 <= f <= 1`` on every vertex."""
        self.space._require_vertices()
        vals = self.space.vertices @ self.coords
        return bool(vals.min() >= -tol.eps_eq and vals.max() <= 1 + tol.eps_eq)

    def __repr__(self):
        return f"Effect({self.space.name}, {np.round(self.coords, 12).tolist()})"


@dataclass(eq=False)
class TwoOutcomeMeasurement:
    plus_effect: Effect
    label: str = ""

    @property
    def minus_effect(self) -> Effect:
        return 1 - self.plus_effect


def evaluate(f: Effect, x: DualVector) -> float:
    """Dual pairing ``f(x)``."""
    _require_same(f.space, x.space)
    return float(f.coords @ x.coords)


# Built-in state spaces

def cbit() -> StateSpace:
    """Classical bit with basis {1, pi}; vertices s0 = (1, 0), s1 = (1, 1)."""
    return _CBIT


def square() -> StateSpace:
    """Square (gbit) with basis {1, pi0, pi1}; vertex s_ij has coordinates (1, i, j)."""
    return _SQUARE


_CBIT = StateSpace(
    "cbit",
    ("1", "pi"),
    vertices=[[1, 0], [1, 1]],
    cone_generators=[[0, 1], [1, -1]],
)

_SQUARE = StateSpace(
    "square",
    ("1", "pi0", "pi1"),
    vertices=[[1, 0, 0], [1, 1, 0], [1, 0, 1], [1, 1, 1]],
    cone_generators=[[0, 1, 0], [1, -1, 0], [0, 0, 1], [1, 0, -1]],
)


def square_vertex(i: int, j: int) -> DualVector:
    return DualVector(_SQUARE, np.array([1.0, i, j]))


def pi0() -> Effect:
    return Effect(_SQUARE, np.array([0.0, 1.0, 0.0]))


def pi1() -> Effect:
    return Effect(_SQUARE, np.array([0.0, 0.0, 1.0]))


def cbit_pi() -> Effect:
    return Effect(_CBIT, np.array([0.0, 1.0]))


def product_space(k1: StateSpace, k2: StateSpace, name: str | None = None) -> StateSpace:
    """Cartesian product ``K1 x K2`` of two polytopes (not a tensor product)."""
    for k in (k1, k2):
        k._require_vertices()
        if k.cone_generators is None:
            raise ValueError(f"state space {k.name!r} has no cone generators")
    labels = ("1",) + tuple(f"a.{l}" for l in k1.basis_labels[1:]) + tuple(f"b.{l}" for l in k2.basis_labels[1:])
    verts = [np.concatenate([[1.0], v[1:], w[1:]]) for v in k1.vertices for w in k2.vertices]
    n1 = k1.dim - 1
    gens = [np.concatenate([[g[0]], g[1:], np.zeros(k2.dim - 1)]) for g in k1.cone_generators]
    gens += [np.concatenate([[g[0]], np.zeros(n1), g[1:]]) for g in k2.cone_generators]
    return StateSpace(name or f"{k1.name}x{k2.name}", labels, verts, gens)


def lift_effect(f: Effect, product: StateSpace, factor: int) -> Effect:
    """Effect on one factor of a :func:`product_space`, pulled back along the projection."""
    n1 = sum(1 for l in product.basis_labels if l.startswith("a."))
    coords = np.zeros(product.dim)
    coords[0] = f.coords[0]
    if factor == 0:
        coords[1 : 1 + n1] = f.coords[1:]
    else:
        coords[1 + n1 :] = f.coords[1:]
    return Effect(product, coords)


BUILTIN_SPACES = {"cbit": cbit, "square": square}


def space_by_name(name: str) -> StateSpace:
    try:
        return BUILTIN_SPACES[name]()
    except KeyError:
        raise KeyError(f"unknown built-in state space {name!r}; known: {sorted(BUILTIN_SPACES)}") from None


# Linear programs

def membership(x: DualVector, space: StateSpace | None = None, tol: TolerancePolicy = DEFAULT_TOL) -> bool:
    """Is ``x`` a convex combination of the vertices of its space?"""
    space = space or x.space
    _require_same(x.space, space)
    space._require_vertices()
    V = space.vertices
    if abs(x.coords[0] - 1.0) > tol.eps_eq:
        return False
    res = _lp.feasible(A_eq=V.T, b_eq=x.coords, bounds=[(0, None)] * len(V), tol=tol.eps_eq)
    return res.feasible


def _check_pair(f: Effect, g: Effect):
    _require_same(f.space, g.space)
    f.space._require_vertices()


def are_compatible(f: Effect, g: Effect, tol: TolerancePolicy = DEFAULT_TOL) -> bool:
    """Feasibility of ``p`` with ``max(0, f + g - 1) <= p <= min(f, g)`` on every vertex."""
    _check_pair(f, g)
    V = f.space.vertices
    fv, gv = V @ f.coords, V @ g.coords
    # p <= f, p <= g, -p <= 1 - f - g, -p <= 0, p <= 1
    A_ub = np.vstack([V, V, -V, -V, V])
    b_ub = np.concatenate([fv, gv, 1 - fv - gv, np.zeros(len(V)), np.ones(len(V))])
    b_ub = b_ub + tol.eps_eq
    res = _lp.feasible(A_ub=A_ub, b_ub=b_ub, bounds=[(None, None)] * f.space.dim, tol=tol.eps_eq)
    return res.feasible


def degree_of_compatibility(f: Effect, g: Effect, tol: TolerancePolicy = DEFAULT_TOL) -> float:
    """Largest mixing weight with coin-toss effects that makes the pair compatible.

    Variables are ``(lam, m, m2, p)`` with ``m = (1 - lam) mu``, which turns the
    bilinear mixing into a single LP.
    """
    _check_pair(f, g)
    V = f.space.vertices
    nv, d = V.shape
    fv, gv = V @ f.coords, V @ g.coords
    one = np.ones((nv, 1))
    zero = np.zeros((nv, 1))
    rows = [
        np.hstack([-fv[:, None], -one, zero, V]),          # p <= lam f + m
        np.hstack([-gv[:, None], zero, -one, V]),          # p <= lam g + m2
        np.hstack([(fv + gv)[:, None], one, one, -V]),     # lam f + lam g + m + m2 - 1 <= p
        np.hstack([zero, zero, zero, -V]),                 # 0 <= p
        np.hstack([zero, zero, zero, V]),                  # p <= 1
        np.array([[1.0, 1.0, 0.0] + [0.0] * d]),           # m <= 1 - lam
        np.array([[1.0, 0.0, 1.0] + [0.0] * d]),           # m2 <= 1 - lam
    ]
    b_ub = np.concatenate([np.zeros(nv), np.zeros(nv), np.ones(nv), np.zeros(nv), np.ones(nv), [1.0, 1.0]])
    c = np.zeros(3 + d)
    c[0] = -1.0
    bounds = [(0, 1), (0, 1), (0, 1)] + [(None, None)] * d
    res = _lp.solve(c, A_ub=np.vstack(rows), b_ub=b_ub, bounds=bounds, tol=tol.eps_eq)
    if not res.feasible:  # lam = 0 with m = m2 = 0, p = 0 is always feasible
        raise RuntimeError("degree-of-compatibility LP reported infeasible")
    return float(res.x[0])


@dataclass(eq=False)
class WitnessSquare:
    x00: DualVector
    x10: DualVector
    x01: DualVector
    x11: DualVector

    @property
    def points(self) -> tuple[DualVector, DualVector, DualVector, DualVector]:
        return (self.x00, self.x10, self.x01, self.x11)

    def __getitem__(self, ij: tuple[int, int]) -> DualVector:
        return {(0, 0): self.x00, (1, 0): self.x10, (0, 1): self.x01, (1, 1): self.x11}[ij]

    @property
    def space(self) -> StateSpace:
        return self.x00.space

    def parallelogram_residual(self) -> float:
        return float(np.max(np.abs(self.x00.coords + self.x11.coords - self.x10.coords - self.x01.coords)))


_SQUARE_PATTERN = {(0, 0): (0, 0), (1, 0): (1, 0), (0, 1): (0, 1), (1, 1): (1, 1)}


def witness_square_residuals(ws: WitnessSquare, f: Effect, g: Effect) -> dict[str, float]:
    """Residuals of the parallelogram identity and of the 0/1 value pattern."""
    for p in ws.points:
        _require_same(p.space, f.space)
    _require_same(f.space, g.space)
    values = max(
        max(abs(evaluate(f, ws[ij]) - i), abs(evaluate(g, ws[ij]) - j))
        for ij, (i, j) in _SQUARE_PATTERN.items()
    )
    norm = max(abs(p.coords[0] - 1.0) for p in ws.points)
    return {"parallelogram": ws.parallelogram_residual(), "values": values, "normalization": norm}


def validate_witness_square(ws: WitnessSquare, f: Effect, g: Effect, tol: TolerancePolicy = DEFAULT_TOL) -> bool:
    res = witness_square_residuals(ws, f, g)
    if max(res.values()) > tol.eps_eq:
        return False
    if ws.space.vertices is not None:
        return all(membership(p, tol=tol) for p in ws.points)
    return True


def find_witness_square(f: Effect, g: Effect, tol: TolerancePolicy = DEFAULT_TOL) -> WitnessSquare | None:
    """Search for four states with the 0/1 pattern of ``(f, g)`` forming a parallelogram."""
    _check_pair(f, g)
    K = f.space
    V = K.vertices
    nv, d = V.shape
    order = [(0, 0), (1, 0), (0, 1), (1, 1)]
    n = 4 * nv
    A_eq, b_eq = [], []

    def block_row(k, vec):
        row = np.zeros(n)
        row[k * nv : (k + 1) * nv] = vec
        return row

    for k, (i, j) in enumerate(order):
        A_eq.append(block_row(k, np.ones(nv)))
        b_eq.append(1.0)
        A_eq.append(block_row(k, V @ f.coords))
        b_eq.append(float(i))
        A_eq.append(block_row(k, V @ g.coords))
        b_eq.append(float(j))
    signs = {(0, 0): 1.0, (1, 1): 1.0, (1, 0): -1.0, (0, 1): -1.0}
    for c in range(1, d):
        row = np.zeros(n)
        for k, ij in enumerate(order):
            row[k * nv : (k + 1) * nv] = signs[ij] * V[:, c]
        A_eq.append(row)
        b_eq.append(0.0)
    res = _lp.feasible(A_eq=np.array(A_eq), b_eq=np.array(b_eq), bounds=[(0, None)] * n, tol=tol.eps_eq)
    if not res.feasible:
        return None
    lam = np.clip(res.x, 0.0, None).reshape(4, nv)
    pts = [DualVector(K, (lam[k] / lam[k].sum()) @ V) for k in range(4)]
    return WitnessSquare(*pts)


@dataclass(eq=False)
class AffineMapGPT:
    """Linear extension of an affine map between state spaces, acting on dual coordinates."""

    source: StateSpace
    target: StateSpace
    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)
        if self.matrix.shape != (self.target.dim, self.source.dim):
            raise ValueError(
                f"matrix shape {self.matrix.shape} does not map dim {self.source.dim} to {self.target.dim}"
            )

    def __call__(self, x: DualVector) -> DualVector:
        _require_same(x.space, self.source)
        return DualVector(self.target, self.matrix @ x.coords)

    def __matmul__(self, other: "AffineMapGPT") -> "AffineMapGPT":
        _require_same(other.target, self.source)
        return AffineMapGPT(other.source, self.target, self.matrix @ other.matrix)

    def pullback(self, f: Effect) -> Effect:
        """``f o T`` as an effect on the source space."""
        _require_same(f.space, self.target)
        return Effect(self.source, self.matrix.T @ f.coords)

    def preserves_normalization(self, tol: TolerancePolicy = DEFAULT_TOL) -> bool:
        unit_row = self.matrix[0]
        expected = np.eye(self.source.dim)[0]
        return bool(np.max(np.abs(unit_row - expected)) <= tol.eps_eq)


def identity_map(space: StateSpace) -> AffineMapGPT:
    return AffineMapGPT(space, space, np.eye(space.dim))


def build_iota_pi(ws: WitnessSquare, f: Effect, g: Effect, tol: TolerancePolicy = DEFAULT_TOL):
    """Embedding of the square onto a witness square, and the projection back.

    ``iota(s_ij) = x_ij`` and ``Pi(x) = f(x)(s10 - s00) + g(x)(s01 - s00) + s00``.
    """
    if not validate_witness_square(ws, f, g, tol):
        raise InvalidWitnessSquareError(f"not a witness square: {witness_square_residuals(ws, f, g)}")
    K = f.space
    S = square()
    iota = np.column_stack([ws.x00.coords, ws.x10.coords - ws.x00.coords, ws.x01.coords - ws.x00.coords])
    pi = np.vstack([np.eye(K.dim)[0], f.coords, g.coords])
    return AffineMapGPT(S, K, iota), AffineMapGPT(K, S, pi)


def connecting_map(iota_a: AffineMapGPT, pi_b: AffineMapGPT) -> AffineMapGPT:
    """``T = iota_A o Pi_B``, carrying the B pair onto the A pair."""
    return iota_a @ pi_b


def connecting_map_residuals(
    t: AffineMapGPT,
    fa: Effect, ga: Effect, fb: Effect, gb: Effect,
    iota_a: AffineMapGPT, pi_a: AffineMapGPT, iota_b: AffineMapGPT, pi_b: AffineMapGPT,
) -> dict[str, float]:
    return {
        "f_B = f_A o T": float(np.max(np.abs(t.pullback(fa).coords - fb.coords))),
        "f_B' = f_A' o T": float(np.max(np.abs(t.pullback(ga).coords - gb.coords))),
        "iota_A = T o iota_B": float(np.max(np.abs((t @ iota_b).matrix - iota_a.matrix))),
        "Pi_B = Pi_A o T": float(np.max(np.abs((pi_a @ t).matrix - pi_b.matrix))),
    }


def square_symmetries() -> list[np.ndarray]:
    """The eight affine symmetries of the square, as matrices on dual coordinates."""
    mats = []
    for swap, flip0, flip1 in itertools.product([False, True], repeat=3):
        # (1, a, b) -> (1, a', b') with a' = a or 1 - a, etc.
        m = np.eye(3)
        if swap:
            m = m[[0, 2, 1]]
        if flip0:
            m = np.array([[1, 0, 0], [1, -1, 0], [0, 0, 1]]) @ m
        if flip1:
            m = np.array([[1, 0, 0], [0, 1, 0], [1, 0, -1]]) @ m
        mats.append(m.astype(float))
    return mats


def random_effect(space: StateSpace, rng: np.random.Generator, max_tries: int = 10_000) -> Effect:
    """Rejection-sample an effect: random affine function, kept if it maps the vertices into [0, 1]."""
    space._require_vertices()
    V = space.vertices
    # pick values at an affine basis of vertices, solve for coordinates
    basis_idx = _affine_basis(V)
    Vb = V[basis_idx]
    for _ in range(max_tries):
        coords = np.linalg.solve(Vb, rng.random(space.dim))
        vals = V @ coords
        if vals.min() >= 0 and vals.max() <= 1:
            return Effect(space, coords)
    raise RuntimeError("could not sample an effect")


def _affine_basis(V: np.ndarray) -> list[int]:
    chosen: list[int] = []
    for k in range(len(V)):
        trial = chosen + [k]
        if np.linalg.matrix_rank(V[trial]) == len(trial):
            chosen = trial
        if len(chosen) == V.shape[1]:
            break
    return chosen


def effects_by_name(space: StateSpace) -> dict[str, Effect]:
    named = {"one": space.unit, "zero": space.zero}
    for k, label in enumerate(space.basis_labels[1:], start=1):
        e = Effect(space, np.eye(space.dim)[k])
        named[label] = e
        named[f"one-minus-{label}"] = 1 - e
    return named
