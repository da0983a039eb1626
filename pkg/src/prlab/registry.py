"""Named built-in objects, so that every standard construction can be requested by name."""

from __future__ import annotations

import numpy as np

from . import cchan, composites, qchan, qubit_pr

TENSORS = {
    "phi_S": composites.phi_S,
    "phi_C": lambda: cchan.channel_to_tensor(cchan.phi_C()),
}

CLASSICAL_CHANNELS = {
    "phi_C": cchan.phi_C,
    "uniform-noise": cchan.uniform_noise_channel,
}

PR_PARAMS = {
    "example6": qubit_pr.example6_params,
    "phi_plus": lambda: qubit_pr.phi_pm_params(1),
    "phi_minus": lambda: qubit_pr.phi_pm_params(-1),
    "all-third": qubit_pr.all_third_params,
}

# bipartite channels measured with canonical testers in the computational basis
BIPARTITE_CHANNELS = {
    "measure-prepare": qchan.build_section5_pr_channel,
    **{name: (lambda f=f: qubit_pr.build_pr_choi(f())) for name, f in PR_PARAMS.items()},
}

TESTER_BASES = {
    "identity": lambda: np.eye(2, dtype=complex),
    "flip": lambda: qubit_pr.V.copy(),
    "hadamard": lambda: np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
}


def names() -> dict[str, list[str]]:
    return {
        "tensors": sorted(TENSORS),
        "classical_channels": sorted(CLASSICAL_CHANNELS),
        "pr_params": sorted(PR_PARAMS),
        "bipartite_channels": sorted(BIPARTITE_CHANNELS),
        "tester_bases": sorted(TESTER_BASES),
    }
