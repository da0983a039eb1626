import numpy as np
import pytest
from numpy.testing import assert_allclose

from prlab import boxes, composites, gpt_core as g, qchan
from prlab.matkit import kron, ket, max_entangled, proj, random_unitary


def test_identity_channel_choi():
    c = qchan.identity_channel(2)
    omega = max_entangled(2)
    assert_allclose(c.op, np.outer(omega, omega))
    assert c.is_valid()


def test_apply_recovers_the_map(rng):
    u = random_unitary(2, rng)
    c = qchan.choi_from_map(lambda x: u @ x @ u.conj().T, 2)
    rho = proj(u @ ket(0))
    assert_allclose(c.apply(np.diag([1.0, 0.0])), rho, atol=1e-12)


def test_non_cp_map_rejected():
    with pytest.raises(qchan.InvalidChoiError):
        qchan.choi_from_map(lambda x: x.T, 2)
    with pytest.raises(qchan.InvalidChoiError):
        qchan.choi_from_map(lambda x: 2 * x, 2)


def test_tester_probabilities_match_direct_route(rng):
    # Tr(C F) against Tr((Phi x id)(rho) E) computed from the Kraus form
    u = random_unitary(4, rng)
    k0 = np.array([[1, 0], [0, np.sqrt(0.3)]])
    k1 = np.array([[0, np.sqrt(0.7)], [0, 0]])
    kraus = [k0, k1]
    c = qchan.choi_from_map(lambda x: sum(k @ x @ k.conj().T for k in kraus), 2)
    psi = u[:, 0]
    rho = proj(psi)
    v = random_unitary(4, rng)
    povm = [proj(v[:, 0]) + proj(v[:, 1]), proj(v[:, 2]) + proj(v[:, 3])]
    t = qchan.tester_from(rho, povm, 2)
    assert t.is_valid()
    out = sum(np.kron(k, np.eye(2)) @ rho @ np.kron(k, np.eye(2)).conj().T for k in kraus)
    direct = [np.trace(out @ e).real for e in povm]
    assert_allclose(qchan.measure_channel(c, t), direct, atol=1e-12)


def test_purification_invariance(rng):
    # two purifications of the same input give the same tester
    sigma = np.diag([0.6, 0.4])
    psi = np.sqrt(0.6) * np.kron(ket(0), ket(0)) + np.sqrt(0.4) * np.kron(ket(1), ket(1))
    w = random_unitary(2, rng)
    psi2 = np.kron(np.eye(2), w) @ psi
    e = proj(np.kron(ket(0), ket(0)))
    povm = [e, np.eye(4) - e]
    t1 = qchan.tester_from(proj(psi), povm, 2)
    povm2 = [np.kron(np.eye(2), w) @ f @ np.kron(np.eye(2), w).conj().T for f in povm]
    t2 = qchan.tester_from(proj(psi2), povm2, 2)
    for a, b in zip(t1.ops, t2.ops):
        assert_allclose(a, b, atol=1e-12)
    assert_allclose(t1.sigma, sigma.T)


def test_tester_sums_to_identity_times_sigma():
    sigma = np.diag([1.0, 0.0]).astype(complex)
    povm = [proj(ket(0)), proj(ket(1))]
    t = qchan.tester_from(sigma, povm, 2)
    assert_allclose(sum(t.ops), np.kron(np.eye(2), sigma.T))
    with pytest.raises(qchan.InvalidTesterError):
        qchan.tester_from(sigma, [proj(ket(0))], 2)


def test_swap23_is_involution(rng):
    m = rng.normal(size=(16, 16))
    assert_allclose(qchan.swap23_reshuffle(qchan.swap23_reshuffle(m)), m)


def test_product_channel_is_non_signaling():
    a = qchan.identity_channel()
    b = qchan.constant_channel(np.diag([0.25, 0.75]))
    c = qchan.BipartiteChoi.from_product(a, b)
    ns = qchan.ns_check(c)
    assert ns["pass"]
    assert_allclose(ns["C_A"], a.op)
    assert_allclose(ns["C_B"], b.op)


def test_swap_channel_is_signaling():
    swap = np.zeros((4, 4))
    for i in range(2):
        for j in range(2):
            swap[2 * j + i, 2 * i + j] = 1
    c = qchan.choi_from_map(lambda x: swap @ x @ swap.T, 4)
    ns = qchan.ns_check(qchan.BipartiteChoi(c.op))
    assert not ns["pass"]
    assert ns["residuals"]["alice_marginal"] > 0.5


def test_measure_prepare_channel_matches_direct_map():
    data = qchan.measure_prepare_data()
    c = qchan.build_section5_pr_channel(data)
    n_perp = np.eye(2) - data.n
    rho_cor = 0.5 * (np.kron(data.rho1, data.rho1) + np.kron(data.rho2, data.rho2))
    rho_ac = 0.5 * (np.kron(data.rho1, data.rho2) + np.kron(data.rho2, data.rho1))
    q = np.kron(n_perp, n_perp)
    direct = qchan.choi_from_map(lambda x: np.trace(q @ x) * rho_ac + np.trace((np.eye(4) - q) @ x) * rho_cor, 4)
    # a map on C^4 already has A_out, B_out, A_in, B_in ordering
    assert_allclose(direct.op, c.op, atol=1e-15)
    # input |11> goes to the anticorrelated state
    assert_allclose(direct.apply(proj(kron(ket(1), ket(1)))), rho_ac)


def test_measure_prepare_box_and_witness_values():
    data = qchan.measure_prepare_data()
    c = qchan.build_section5_pr_channel(data)
    t1, t2 = data.testers()
    assert qchan.box_from_channel(c, [t1, t2], [t1, t2]).max_difference(boxes.pr_box()) == 0
    for (i, j), ch in qchan.section5_witness_channels(data).items():
        assert ch.is_valid()
        assert_allclose([qchan.measure_channel(ch, t1)[0], qchan.measure_channel(ch, t2)[0]], [i, j], atol=1e-15)


def test_measure_prepare_rotated_inputs(rng):
    u = random_unitary(2, rng)
    rot = lambda m: u @ m @ u.conj().T
    data = qchan.measure_prepare_data(rot(np.diag([1, 0])), rot(np.diag([0, 1])), rot(np.diag([1, 0])))
    c = qchan.build_section5_pr_channel(data)
    assert qchan.ns_check(c)["pass"]
    t1, t2 = data.testers()
    assert qchan.box_from_channel(c, [t1, t2], [t1, t2]).max_difference(boxes.pr_box()) < 1e-12


def test_measure_prepare_input_validation():
    with pytest.raises(ValueError):
        qchan.measure_prepare_data(rho2=np.diag([1, 0]))
    with pytest.raises(ValueError):
        qchan.measure_prepare_data(n=np.diag([0.5, 0]))


def test_hermitian_basis_is_orthonormal():
    basis = qchan.hermitian_basis(4)
    gram = np.array([[np.trace(a @ b) for b in basis] for a in basis])
    assert_allclose(gram, np.eye(16), atol=1e-12)
    assert_allclose(basis[0], np.eye(4) / 2)


def test_channel_space_bridge():
    space = qchan.channel_space(2)
    data = qchan.measure_prepare_data()
    ws = qchan.witness_square_on_channel_space(qchan.section5_witness_channels(data), space)
    f, f2 = data.effects(space)
    assert g.validate_witness_square(ws, f, f2)
    iota, _ = g.build_iota_pi(ws, f, f2)
    c = qchan.tensor_to_bipartite_choi(composites.embed(iota, iota))
    assert np.abs(c.op - qchan.build_section5_pr_channel(data).op).max() < 1e-10


def test_json_round_trips():
    c = qchan.build_section5_pr_channel()
    assert_allclose(qchan.BipartiteChoi.from_dict(c.to_dict()).op, c.op)
    t, _ = qchan.measure_prepare_data().testers()
    back = qchan.Tester.from_dict(t.to_dict())
    assert_allclose(back.sigma, t.sigma)
    ch = qchan.identity_channel()
    assert_allclose(qchan.ChoiMatrix.from_dict(ch.to_dict()).op, ch.op)
