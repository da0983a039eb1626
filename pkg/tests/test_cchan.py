import numpy as np
import pytest
from numpy.testing import assert_allclose

from prlab import boxes, cchan, composites, gpt_core as g


def test_phi_c_columns():
    t = cchan.phi_C().transition
    # basis s0s0, s0s1, s1s0, s1s1
    for col in range(3):
        assert_allclose(t[:, col], [0.5, 0, 0, 0.5])
    assert_allclose(t[:, 3], [0, 0.5, 0.5, 0])
    assert cchan.phi_C().is_nonsignaling()


def test_square_channel_round_trip():
    S = g.square()
    x = S.point([1, 0.3, 0.8])
    ch = cchan.square_to_channel(x)
    assert_allclose(ch.transition, [[0.7, 0.2], [0.3, 0.8]])
    assert_allclose(cchan.channel_to_square(ch).coords, x.coords)
    with pytest.raises(cchan.InvalidChannelError):
        cchan.square_to_channel(S.point([1, 1.5, 0]))


def test_effect_f_matches_direct_evaluation(rng):
    S = g.square()
    C = g.cbit()
    for _ in range(10):
        s = S.point([1, *rng.random(2)])
        tau = rng.random()
        f = C.effect([rng.random() * 0.5, rng.random() * 0.5])
        ch = cchan.square_to_channel(s)
        direct = g.evaluate(f, ch(C.point([1, tau])))
        assert g.evaluate(cchan.effect_F(C.point([1, tau]), f), s) == pytest.approx(direct)


def test_vertex_effects_are_pi0_and_pi1():
    C = g.cbit()
    pi = g.cbit_pi()
    assert_allclose(cchan.effect_F(C.point([1, 0]), pi).coords, g.pi0().coords)
    assert_allclose(cchan.effect_F(C.point([1, 1]), pi).coords, g.pi1().coords)


def test_phi_c_tensor_is_phi_s():
    phi = cchan.channel_to_tensor(cchan.phi_C())
    assert phi.max_difference(composites.phi_S()) == 0


def test_product_channel_gives_product_tensor():
    a = cchan.square_to_channel(g.square().point([1, 0.2, 0.9]))
    b = cchan.square_to_channel(g.square().point([1, 0.6, 0.1]))
    phi = cchan.channel_to_tensor(cchan.product_channel(a, b))
    expected = composites.BipartiteTensor.product(cchan.channel_to_square(a), cchan.channel_to_square(b))
    assert phi.max_difference(expected) < 1e-15
    box = boxes.box_from_state(phi, g.pi0(), g.pi1(), g.pi0(), g.pi1())
    assert abs(boxes.chsh(box)) <= 2


def test_signaling_channel_rejected():
    t = np.zeros((4, 4))
    for i in range(2):
        for j in range(2):
            t[2 * j + i, 2 * i + j] = 1.0  # swap the bits
    ch = cchan.ClassicalBipartiteChannel(t)
    assert not ch.is_nonsignaling()
    with pytest.raises(cchan.InvalidChannelError):
        cchan.channel_to_tensor(ch)


def test_invalid_transition():
    with pytest.raises(cchan.InvalidChannelError):
        cchan.ClassicalBipartiteChannel(np.eye(4) * 2)


def test_simulate_phi_c_is_deterministic_parity():
    res = cchan.simulate(cchan.phi_C(), 100_000, 7)
    assert res.chsh == 4.0
    for key, tab in res.counts.items():
        wrong = ("+1,-1", "-1,+1") if key != "11" else ("+1,+1", "-1,-1")
        assert tab[wrong[0]] == tab[wrong[1]] == 0
    assert sum(sum(t.values()) for t in res.counts.values()) == 100_000


def test_simulate_uniform_noise_seed_7():
    # pinned from a run with numpy's PCG64 default_rng(7)
    res = cchan.simulate(cchan.uniform_noise_channel(), 100_000, 7)
    assert res.chsh == pytest.approx(-0.0030279457897646194, abs=1e-15)
    assert res.to_dict() == cchan.simulate(cchan.uniform_noise_channel(), 100_000, 7).to_dict()


def test_simulate_fixed_setting_and_errors():
    res = cchan.simulate(cchan.phi_C(), 1000, 1, (1, 1))
    assert list(res.counts) == ["11"]
    assert res.chsh is None
    assert res.correlations["11"] == -1
    with pytest.raises(ValueError):
        cchan.simulate(cchan.phi_C(), 0, 1)
    with pytest.raises(ValueError):
        cchan.simulate(cchan.phi_C(), 10, 1, (2, 0))


def test_channel_json():
    ch = cchan.phi_C()
    assert_allclose(cchan.ClassicalBipartiteChannel.from_dict(ch.to_dict()).transition, ch.transition)
