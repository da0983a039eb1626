"""Classical bit channels as the square, the classical PR-channel and its sampling protocol.

A single channel is a 2x2 column-stochastic matrix ``T`` with ``T[:, i]`` the
output distribution for input ``s_i``. Bipartite channels use the basis
``s0s0, s0s1, s1s0, s1s1`` (index ``2 i + j``). An output ``s1`` (``pi = 1``)
is read as outcome +1 and ``s0`` as -1.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .composites import BipartiteTensor
from .gpt_core import DualVector, Effect, cbit, membership, same_space, square
from .matkit import DEFAULT_TOL, TolerancePolicy


class InvalidChannelError(ValueError):
    pass


def _check_stochastic(t: np.ndarray, n: int, tol: TolerancePolicy):
    if t.shape != (n, n):
        raise InvalidChannelError(f"expected a {n}x{n} transition matrix, got {t.shape}")
    if t.min() < -tol.eps_eq:
        raise InvalidChannelError("transition matrix has negative entries")
    dev = float(np.max(np.abs(t.sum(axis=0) - 1.0)))
    if dev > tol.eps_eq:
        raise InvalidChannelError(f"columns do not sum to 1 (deviation {dev:.3e})")


@dataclass(eq=False)
class ClassicalChannel:
    transition: np.ndarray

    def __post_init__(self):
        self.transition = np.asarray(self.transition, dtype=float)
        _check_stochastic(self.transition, 2, DEFAULT_TOL)

    def __call__(self, t: DualVector) -> DualVector:
        """Image of a cbit state ``(1, tau)``."""
        if not same_space(t.space, cbit()):
            raise ValueError("classical channels act on cbit states")
        tau = t.coords[1] / t.coords[0]
        out = self.transition @ np.array([1 - tau, tau]) * t.coords[0]
        return DualVector(cbit(), np.array([out.sum(), out[1]]))


def square_to_channel(s: DualVector, tol: TolerancePolicy = DEFAULT_TOL) -> ClassicalChannel:
    """Channel with ``pi(Phi(s0)) = pi0(s)`` and ``pi(Phi(s1)) = pi1(s)``."""
    if not same_space(s.space, square()):
        raise ValueError("expected a point of the square")
    if not membership(s, tol=tol):
        raise InvalidChannelError(f"{s} is not a state of the square")
    lam, mu = s.coords[1], s.coords[2]
    return ClassicalChannel(np.clip(np.array([[1 - lam, 1 - mu], [lam, mu]]), 0.0, 1.0))


def channel_to_square(ch: ClassicalChannel) -> DualVector:
    t = ch.transition
    return DualVector(square(), np.array([1.0, t[1, 0], t[1, 1]]))


def effect_F(t: DualVector, f: Effect) -> Effect:
    """``F_{t,f}(Phi) = f(Phi(t))`` in square coordinates."""
    if not (same_space(t.space, cbit()) and same_space(f.space, cbit())):
        raise ValueError("effect_F takes a cbit state and a cbit effect")
    if abs(t.coords[0] - 1.0) > DEFAULT_TOL.eps_eq or not 0 <= t.coords[1] <= 1:
        raise ValueError(f"{t} is not a cbit state")
    if not f.is_effect():
        raise ValueError(f"{f} is not an effect")
    tau = t.coords[1]
    c0, c1 = f.coords
    return Effect(square(), np.array([c0, c1 * (1 - tau), c1 * tau]))


@dataclass(eq=False)
class ClassicalBipartiteChannel:
    transition: np.ndarray

    def __post_init__(self):
        self.transition = np.asarray(self.transition, dtype=float)
        _check_stochastic(self.transition, 4, DEFAULT_TOL)

    def output_distribution(self, i: int, j: int) -> np.ndarray:
        """Joint output table ``[a, b]`` for inputs ``s_i, s_j``."""
        return self.transition[:, 2 * i + j].reshape(2, 2)

    def signaling_residuals(self) -> dict[str, float]:
        tab = np.array([[self.output_distribution(i, j) for j in range(2)] for i in range(2)])  # [i, j, a, b]
        alice = tab.sum(axis=3)
        bob = tab.sum(axis=2)
        return {
            "alice": float(np.max(np.abs(alice[:, 0] - alice[:, 1]))),
            "bob": float(np.max(np.abs(bob[0] - bob[1]))),
        }

    def is_nonsignaling(self, tol: TolerancePolicy = DEFAULT_TOL) -> bool:
        return max(self.signaling_residuals().values()) <= tol.eps_eq

    def to_dict(self) -> dict:
        return {"transition": self.transition.tolist()}

    @classmethod
    def from_dict(cls, obj: dict) -> "ClassicalBipartiteChannel":
        return cls(np.asarray(obj["transition"], dtype=float))


def phi_C() -> ClassicalBipartiteChannel:
    cor = np.array([0.5, 0.0, 0.0, 0.5])
    anti = np.array([0.0, 0.5, 0.5, 0.0])
    return ClassicalBipartiteChannel(np.column_stack([cor, cor, cor, anti]))


def product_channel(a: ClassicalChannel, b: ClassicalChannel) -> ClassicalBipartiteChannel:
    return ClassicalBipartiteChannel(np.kron(a.transition, b.transition))


def uniform_noise_channel() -> ClassicalBipartiteChannel:
    return ClassicalBipartiteChannel(np.full((4, 4), 0.25))


def channel_to_tensor(ch: ClassicalBipartiteChannel, tol: TolerancePolicy = DEFAULT_TOL) -> BipartiteTensor:
    """Element of the square tensor square with ``(F_{s_i,pi} x F_{s_j,pi})(phi) = P(1, 1 | i, j)``."""
    sig = ch.signaling_residuals()
    if max(sig.values()) > tol.eps_eq:
        raise InvalidChannelError(f"channel is signaling: {sig}")
    m = np.zeros((3, 3))
    m[0, 0] = 1.0
    for i in range(2):
        m[1 + i, 0] = ch.output_distribution(i, 0)[1].sum()
        m[0, 1 + i] = ch.output_distribution(0, i)[:, 1].sum()
    for i, j in itertools.product(range(2), repeat=2):
        m[1 + i, 1 + j] = ch.output_distribution(i, j)[1, 1]
    S = square()
    return BipartiteTensor(S, S, m)


@dataclass
class SimulationResult:
    rounds: int
    seed: int
    counts: dict[str, dict[str, int]]
    correlations: dict[str, float]
    chsh: float | None

    def to_dict(self) -> dict:
        return {"rounds": self.rounds, "seed": self.seed, "counts": self.counts,
                "correlations": self.correlations, "chsh": self.chsh}


def simulate(ch: ClassicalBipartiteChannel, rounds: int, seed: int, setting_policy="uniform") -> SimulationResult:
    """Sample the protocol: Alice inputs ``s_i``, Bob ``s_j``, both read their output bit.

    ``setting_policy`` is ``"uniform"`` or a fixed pair ``(i, j)``. Sampling uses
    ``numpy.random.default_rng(seed)`` (PCG64), so results are reproducible per seed.
    """
    if rounds < 1:
        raise ValueError("rounds must be at least 1")
    rng = np.random.default_rng(seed)
    if setting_policy == "uniform":
        settings = rng.integers(0, 2, size=(rounds, 2))
    else:
        i, j = setting_policy
        if i not in (0, 1) or j not in (0, 1):
            raise ValueError(f"invalid fixed setting {setting_policy!r}")
        settings = np.tile([i, j], (rounds, 1))
    cols = 2 * settings[:, 0] + settings[:, 1]
    cdf = np.cumsum(ch.transition, axis=0)[:, cols].T  # [round, output]
    u = rng.random(rounds)
    out = np.minimum((u[:, None] >= cdf).sum(axis=1), 3)
    a, b = out // 2, out % 2
    counts: dict[str, dict[str, int]] = {}
    corr: dict[str, float] = {}
    sign = {0: -1, 1: 1}
    for i, j in itertools.product(range(2), repeat=2):
        sel = cols == 2 * i + j
        n = int(sel.sum())
        if n == 0:
            continue
        tab = {f"{sign[x]:+d},{sign[y]:+d}": int(np.sum((a[sel] == x) & (b[sel] == y)))
               for x, y in itertools.product((1, 0), repeat=2)}
        counts[f"{i}{j}"] = tab
        same = tab["+1,+1"] + tab["-1,-1"]
        corr[f"{i}{j}"] = (2 * same - n) / n
    chsh = None
    if len(corr) == 4:
        chsh = corr["00"] + corr["01"] + corr["10"] - corr["11"]
    return SimulationResult(rounds, seed, counts, corr, chsh)
