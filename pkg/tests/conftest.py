import numpy as np
import pytest

from prlab import composites, gpt_core


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def random_parallelogram(rng):
    """Three random points of the unit square whose completion ``y10 + y01 - y00`` stays inside."""
    while True:
        y00, y10, y01 = rng.random((3, 2))
        y11 = y10 + y01 - y00
        if y11.min() >= 0 and y11.max() <= 1:
            return {(0, 0): y00, (1, 0): y10, (0, 1): y01, (1, 1): y11}


def random_pr_implementation(rng):
    """A PR implementation on (square x square) (x) (square x square) with a kernel part.

    Each party measures two effects of the first square factor, relabeled by a
    random symmetry. The witness squares carry random parallelograms in the
    second factor, and the kernel part lives on the second-factor coordinates only.
    Returns ``(phi, effects, phi_perp)``.
    """
    S = gpt_core.square()
    K = gpt_core.product_space(S, S)
    syms = gpt_core.square_symmetries()

    def party():
        m = syms[rng.integers(len(syms))]
        f = K.effect(np.r_[np.linalg.inv(m).T @ np.eye(3)[1], 0, 0])
        g = K.effect(np.r_[np.linalg.inv(m).T @ np.eye(3)[2], 0, 0])
        y = random_parallelogram(rng)
        pts = {ij: K.point(np.r_[m @ np.array([1.0, *ij]), y[ij]]) for ij in y}
        ws = gpt_core.WitnessSquare(pts[(0, 0)], pts[(1, 0)], pts[(0, 1)], pts[(1, 1)])
        iota, _ = gpt_core.build_iota_pi(ws, f, g)
        return f, g, iota

    fa, ga, iota_a = party()
    fb, gb, iota_b = party()
    base = composites.embed(iota_a, iota_b)
    kern = np.zeros((5, 2))
    kern[3, 0] = kern[4, 1] = 1.0
    direction = kern @ rng.normal(size=(2, 2)) @ kern.T
    assert composites.in_max_tensor(base)
    for halvings in range(60):
        perp = composites.BipartiteTensor(K, K, 0.5 ** halvings * direction)
        phi = base + perp
        if composites.in_max_tensor(phi):
            return phi, (fa, ga, fb, gb), perp
    raise RuntimeError("kernel perturbation never fit inside the maximal tensor product")


def pytest_terminal_summary(terminalreporter):
    try:
        import test_acceptance
    except ImportError:
        return
    if not test_acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(test_acceptance.RESULTS):
        terminalreporter.write_line(test_acceptance.format_line(n))
