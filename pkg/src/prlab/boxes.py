"""Non-local boxes, non-signaling checks, correlations and the CHSH value.

Probability tables are indexed ``probs[C, D, e, h]`` with ``C`` in (A, A'),
``D`` in (B, B') and outcome index 0 for +1, 1 for -1.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass

import numpy as np

from .matkit import DEFAULT_TOL, TolerancePolicy

OUTCOMES = (1, -1)
ALICE = ("A", "A'")
BOB = ("B", "B'")


class SignalingError(ValueError):
    """Raised when an operation requires a non-signaling box."""


def _setting(label, names) -> int:
    if isinstance(label, (int, np.integer)):
        return int(label)
    return names.index(label)


@dataclass(eq=False)
class NonLocalBox:
    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.size != 16:
            raise ValueError(f"a box has 16 probabilities, got {p.size}")
        self.probs = p.reshape(2, 2, 2, 2)

    def p(self, e: int, h: int, C="A", D="B") -> float:
        """``P(e, h | C, D)`` with outcomes given as +1/-1."""
        return float(self.probs[_setting(C, ALICE), _setting(D, BOB), OUTCOMES.index(e), OUTCOMES.index(h)])

    def validity_residual(self) -> float:
        neg = max(0.0, -float(self.probs.min()))
        norm = float(np.max(np.abs(self.probs.sum(axis=(2, 3)) - 1.0)))
        return max(neg, norm)

    def is_valid(self, tol: TolerancePolicy = DEFAULT_TOL) -> bool:
        return self.validity_residual() <= tol.eps_eq

    def to_dict(self) -> dict:
        return {"probs": self.probs.reshape(-1).tolist()}

    @classmethod
    def from_dict(cls, obj: dict) -> "NonLocalBox":
        return cls(np.asarray(obj["probs"], dtype=float))

    def relabeled(self, alice: bool = False, bob: bool = False) -> "NonLocalBox":
        """Swap the +1/-1 labels on one or both sides."""
        p = self.probs
        if alice:
            p = p[:, :, ::-1, :]
        if bob:
            p = p[:, :, :, ::-1]
        return NonLocalBox(p.copy())

    def max_difference(self, other: "NonLocalBox") -> float:
        return float(np.max(np.abs(self.probs - other.probs)))


def signaling_residuals(b: NonLocalBox) -> dict[str, float]:
    alice_marg = b.probs.sum(axis=3)  # [C, D, e]
    bob_marg = b.probs.sum(axis=2)    # [C, D, h]
    return {
        "alice": float(np.max(np.abs(alice_marg[:, 0, :] - alice_marg[:, 1, :]))),
        "bob": float(np.max(np.abs(bob_marg[0, :, :] - bob_marg[1, :, :]))),
    }


def is_nonsignaling(b: NonLocalBox, tol: TolerancePolicy = DEFAULT_TOL) -> bool:
    return max(signaling_residuals(b).values()) <= tol.eps_eq


def correlation(b: NonLocalBox, C="A", D="B") -> float:
    slice_ = b.probs[_setting(C, ALICE), _setting(D, BOB)]
    return float(slice_[0, 0] - slice_[0, 1] - slice_[1, 0] + slice_[1, 1])


def correlations(b: NonLocalBox) -> dict[str, float]:
    return {f"E({c},{d})": correlation(b, c, d) for c, d in itertools.product(ALICE, BOB)}


def chsh(b: NonLocalBox) -> float:
    return correlation(b, 0, 0) + correlation(b, 0, 1) + correlation(b, 1, 0) - correlation(b, 1, 1)


def pr_box() -> NonLocalBox:
    p = np.zeros((2, 2, 2, 2))
    for c, d, e, h in itertools.product(range(2), repeat=4):
        same = OUTCOMES[e] * OUTCOMES[h] == 1
        if (c, d) != (1, 1) and same or (c, d) == (1, 1) and not same:
            p[c, d, e, h] = 0.5
    return NonLocalBox(p)


def uniform_box() -> NonLocalBox:
    return NonLocalBox(np.full(16, 0.25))


def product_box(alice: np.ndarray, bob: np.ndarray) -> NonLocalBox:
    """``P(e, h | C, D) = p_C(e) q_D(h)``; ``alice[C]`` is the +1 probability for setting C."""
    pa = np.stack([alice, 1 - np.asarray(alice)], axis=-1)  # [C, e]
    pb = np.stack([bob, 1 - np.asarray(bob)], axis=-1)      # [D, h]
    return NonLocalBox(np.einsum("ce,dh->cdeh", pa, pb))


def correlation_box(E: np.ndarray) -> NonLocalBox:
    """Box with unbiased marginals and correlation ``E[C, D]``."""
    p = np.zeros((2, 2, 2, 2))
    for c, d, e, h in itertools.product(range(2), repeat=4):
        p[c, d, e, h] = 0.25 * (1 + OUTCOMES[e] * OUTCOMES[h] * E[c][d])
    return NonLocalBox(p)


def tsirelson_box() -> NonLocalBox:
    r = 1 / np.sqrt(2)
    return correlation_box(np.array([[r, r], [r, -r]]))


class Extremality(str, enum.Enum):
    PR = "PR"
    ANTI_PR = "anti-PR"
    NOT_MAXIMAL = "not-maximal"


@dataclass
class ExtremalVerdict:
    kind: Extremality
    chsh: float
    residual: float
    tol: float

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "chsh": self.chsh, "residual": self.residual, "tol": self.tol}


def classify_extremal(b: NonLocalBox, tol: TolerancePolicy = DEFAULT_TOL) -> ExtremalVerdict:
    """Classify a non-signaling box as the PR-box, its relabeling, or neither.

    ``residual`` is the entrywise distance to the matched reference table; for
    non-maximal boxes it is ``4 - |chsh|``.
    """
    sig = signaling_residuals(b)
    if max(sig.values()) > tol.eps_eq:
        raise SignalingError(f"box is signaling: residuals {sig}")
    x = chsh(b)
    ref = pr_box()
    if abs(x - 4) <= tol.eps_eq:
        res = b.max_difference(ref)
        if res > tol.eps_eq:
            raise AssertionError(f"CHSH = 4 but box differs from the PR table by {res:.3e}")
        return ExtremalVerdict(Extremality.PR, x, res, tol.eps_eq)
    if abs(x + 4) <= tol.eps_eq:
        # flipping all outcomes of one party; both choices give the same table
        res = min(b.max_difference(ref.relabeled(alice=True)), b.max_difference(ref.relabeled(bob=True)))
        if res > tol.eps_eq:
            raise AssertionError(f"CHSH = -4 but box differs from relabeled PR table by {res:.3e}")
        return ExtremalVerdict(Extremality.ANTI_PR, x, res, tol.eps_eq)
    return ExtremalVerdict(Extremality.NOT_MAXIMAL, x, 4 - abs(x), tol.eps_eq)


def box_from_state(phi, fa, fa2, fb, fb2) -> NonLocalBox:
    """Outcome table of a bipartite GPT state under two effect pairs.

    ``phi`` is a :class:`prlab.composites.BipartiteTensor`; effects on Alice's
    factor are ``fa, fa2`` (settings A, A'), Bob's are ``fb, fb2``.
    """
    from .gpt_core import SpaceMismatchError, same_space

    for f in (fa, fa2):
        if not same_space(f.space, phi.space_a):
            raise SpaceMismatchError("Alice effects do not live on the first factor")
    for f in (fb, fb2):
        if not same_space(f.space, phi.space_b):
            raise SpaceMismatchError("Bob effects do not live on the second factor")
    p = np.zeros((2, 2, 2, 2))
    for c, f in enumerate((fa, fa2)):
        for d, g in enumerate((fb, fb2)):
            for e, hf in enumerate((f.coords, np.eye(len(f.coords))[0] - f.coords)):
                for h, hg in enumerate((g.coords, np.eye(len(g.coords))[0] - g.coords)):
                    p[c, d, e, h] = hf @ phi.coeffs @ hg
    return NonLocalBox(p)
