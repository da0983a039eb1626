"""PR-box implementations in general probabilistic theories, classical and quantum channels."""

from .boxes import NonLocalBox, chsh, classify_extremal, pr_box
from .composites import BipartiteTensor, decompose_pr_state, embed, phi_S
from .gpt_core import StateSpace, degree_of_compatibility, find_witness_square, square
from .matkit import DEFAULT_TOL, TolerancePolicy

__version__ = "0.1.0"

__all__ = [
    "BipartiteTensor", "DEFAULT_TOL", "NonLocalBox", "StateSpace", "TolerancePolicy",
    "chsh", "classify_extremal", "decompose_pr_state", "degree_of_compatibility", "embed",
    "find_witness_square", "phi_S", "pr_box", "square",
]
