"""Acceptance criteria, one function each, with the stated tolerances and runtime budgets.

Every criterion returns ``(passed, detail)``. Under pytest the results are also
collected and printed as one PASS/FAIL line each in the terminal summary; running
this file directly prints the same lines.
"""

import itertools
import time

import numpy as np

from prlab import boxes, cchan, composites, gpt_core as g, qchan, qubit_pr as q
from prlab.matkit import TolerancePolicy, min_eigenvalue, partial_trace

RESULTS: dict[int, tuple[bool, str]] = {}


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.t0


def criterion_1():
    with Timer() as t:
        b = boxes.pr_box()
        value = boxes.chsh(b)
        verdict = boxes.classify_extremal(b)
    ok = value == 4 and verdict.kind is boxes.Extremality.PR and t.seconds < 1e-3
    return ok, f"chsh={value!r} kind={verdict.kind.value} runtime={t.seconds * 1e3:.3f} ms (< 1 ms)"


def criterion_2():
    rng = np.random.default_rng(2)
    S = g.square()
    with Timer() as t:
        dc = g.degree_of_compatibility(g.pi0(), g.pi1())
        ws = g.find_witness_square(g.pi0(), g.pi1())
        vert_err = max(np.abs(ws[(i, j)].coords - [1, i, j]).max() for i, j in itertools.product(range(2), repeat=2))
        worst = min(g.degree_of_compatibility(g.random_effect(S, rng), g.random_effect(S, rng)) for _ in range(1000))
    ok = abs(dc - 0.5) <= 1e-9 and vert_err <= 1e-9 and worst >= 0.5 - 1e-9 and t.seconds < 5
    return ok, (f"degcom(pi0,pi1)={dc:.12f} vertex_err={vert_err:.1e} min degcom over 1000 pairs={worst:.12f} "
                f"runtime={t.seconds:.2f} s (< 5 s)")


def criterion_3():
    with Timer() as t:
        box = boxes.box_from_state(composites.phi_S(), g.pi0(), g.pi1(), g.pi0(), g.pi1())
        dev = box.max_difference(boxes.pr_box())
        probes = composites.pr_state_uniqueness_search()
    feasible = [k for k, v in probes.items() if v]
    ok = dev <= 1e-12 and not feasible and t.seconds < 1
    return ok, f"box deviation={dev:.1e} feasible probes={feasible or 'none'} of {len(probes)} runtime={t.seconds:.2f} s (< 1 s)"


def criterion_4():
    from conftest import random_pr_implementation

    rng = np.random.default_rng(4)
    worst = 0.0
    with Timer() as t:
        for _ in range(50):
            phi, effects, perp = random_pr_implementation(rng)
            d = composites.decompose_pr_state(phi, *effects)
            worst = max(worst, d.phi_perp.max_difference(perp),
                        d.residuals["Pi_A x Pi_B (phi) = phi_S"],
                        d.embedded.max_difference(phi - perp))
    ok = worst <= 1e-9 and t.seconds < 30
    return ok, f"worst coefficient residual={worst:.1e} (<= 1e-9) runtime={t.seconds:.2f} s (< 30 s)"


def criterion_5():
    with Timer() as t:
        tr = cchan.phi_C().transition
        cor, anti = np.array([0.5, 0, 0, 0.5]), np.array([0, 0.5, 0.5, 0])
        cols_ok = all((tr[:, k] == cor).all() for k in range(3)) and (tr[:, 3] == anti).all()
        res = cchan.simulate(cchan.phi_C(), 100_000, 7)
    ok = cols_ok and res.chsh == 4.0 and t.seconds < 2
    return ok, f"columns exact={cols_ok} chsh estimate={res.chsh!r} runtime={t.seconds:.2f} s (< 2 s)"


def criterion_6():
    tol = TolerancePolicy(eps_psd=1e-10, eps_eq=1e-10)
    with Timer() as t:
        data = qchan.measure_prepare_data()
        c = qchan.build_section5_pr_channel(data)
        ns = qchan.ns_check(c, tol)
        v = q.verify_pr(c, np.eye(2), np.eye(2), tol)
        space = qchan.channel_space(2)
        ws = qchan.witness_square_on_channel_space(qchan.section5_witness_channels(data), space)
        f, f2 = data.effects(space)
        iota, _ = g.build_iota_pi(ws, f, f2, tol)
        embedded = qchan.tensor_to_bipartite_choi(composites.embed(iota, iota))
        diff = float(np.abs(embedded.op - c.op).max())
    ns_worst = max(ns["residuals"].values())
    ok = ns["pass"] and ns_worst <= 1e-10 and v["pass"] and diff <= 1e-10 and t.seconds < 1
    return ok, (f"ns residual={ns_worst:.1e} verify_pr={v['pass']} |C - embed|={diff:.1e} "
                f"runtime={t.seconds:.3f} s (< 1 s)")


def _pr_channel_checks(p, c):
    v = q.verify_pr(c, *p.eta_bases())
    r = v["ns_residuals"]
    cert = q.certify_entanglement_breaking(p)
    return {
        "min_eig": min_eigenvalue(c.op),
        "tp": float(np.abs(partial_trace(c.op, c.dims, [0, 1]) - np.eye(4)).max()),
        "ns": max(r["alice_marginal"], r["bob_marginal"]),
        "prob": v["probability_residual"],
        "certified": cert["certified"],
    }


def _checks_pass(ch):
    return (ch["min_eig"] >= -1e-10 and ch["tp"] <= 1e-9 and ch["ns"] <= 1e-9
            and ch["prob"] <= 1e-9 and ch["certified"])


def criterion_7():
    rng = np.random.default_rng(7)
    cases = list(itertools.product(q.CASES, repeat=2))
    worst = {"min_eig": 0.0, "tp": 0.0, "ns": 0.0, "prob": 0.0}
    failures = 0
    seen = set()
    with Timer() as t:
        for k in range(500):
            case = cases[k % 9]
            p = q.random_params(rng, case)
            seen.add(case)
            ch = _pr_channel_checks(p, q.build_pr_choi(p))
            failures += not _checks_pass(ch)
            worst["min_eig"] = min(worst["min_eig"], ch["min_eig"])
            for key in ("tp", "ns", "prob"):
                worst[key] = max(worst[key], ch[key])
    ok = failures == 0 and len(seen) == 9 and t.seconds < 60
    return ok, (f"failures={failures}/500 cases={len(seen)} min eig={worst['min_eig']:.1e} tp={worst['tp']:.1e} "
                f"ns={worst['ns']:.1e} prob={worst['prob']:.1e} runtime={t.seconds:.1f} s (< 60 s)")


def criterion_8():
    p = q.all_third_params()
    lam = min_eigenvalue(p.b_r())
    ch = _pr_channel_checks(p, q.build_pr_choi(p))
    ok = lam >= -1e-10 and _checks_pass(ch)
    return ok, f"min eig B3={lam:.2e} (>= -1e-10) channel checks={_checks_pass(ch)}"


def criterion_9():
    rng = np.random.default_rng(9)
    worst = 0.0
    for _ in range(100):
        p = q.random_params(rng, ("identity", "identity"))
        worst = max(worst, q.pt_flip_residual(p.b_r(), 3))
    return worst <= 1e-12, f"worst residual over 100 B3={worst:.1e} (<= 1e-12)"


def _perturbed(chans, k, l, delta, which):
    out = dict(chans)
    for ij in which:
        op = chans[ij].op.copy()
        op[k, l] += delta
        op[l, k] += np.conj(delta)
        out[ij] = qchan.ChoiMatrix(2, 2, op)
    return out


def criterion_10():
    rng = np.random.default_rng(10)
    block_err = 0.0
    survivors = []
    unique = True
    with Timer() as t:
        for n in range(20):
            eta = q.random_generic_basis(rng) if n % 2 else np.diag(np.exp(2j * np.pi * rng.random(2)))
            pair = q.canonical_testers(eta)
            chans = pair.witness_square()
            if not q.witness_square_valid(pair, chans):
                survivors.append((n, "unperturbed square invalid"))
            unique &= q.witness_square_is_unique(pair)
            for (i, j), c in chans.items():
                blocks = c.op.reshape(2, 2, 2, 2)  # [out, in, out', in']
                want0 = np.outer(np.eye(2)[1 - i], np.eye(2)[1 - i])
                want1 = np.outer(eta[:, 1 - j], eta[:, 1 - j].conj())
                block_err = max(block_err, np.abs(blocks[:, 0, :, 0] - want0).max(),
                                np.abs(blocks[:, 1, :, 1] - want1).max(),
                                np.abs(blocks[:, 0, :, 1]).max(), np.abs(blocks[:, 1, :, 0]).max())
            for k, l in itertools.combinations(range(4), 2):
                for delta in (1e-3, 1e-3j):
                    # one member perturbed, then all four perturbed alike (keeps the parallelogram)
                    for which in [[ij] for ij in chans] + [list(chans)]:
                        if q.witness_square_valid(pair, _perturbed(chans, k, l, delta, which)):
                            survivors.append((n, k, l, delta, tuple(which)))
    ok = block_err <= 1e-12 and not survivors and unique
    return ok, (f"block error={block_err:.1e} perturbations surviving={len(survivors)} unique={unique} "
                f"runtime={t.seconds:.2f} s")


CRITERIA = {
    1: ("PR-box algebra", criterion_1),
    2: ("maximal incompatibility on the square", criterion_2),
    3: ("phi_S box and uniqueness", criterion_3),
    4: ("PR-state decomposition round trip", criterion_4),
    5: ("classical PR-channel", criterion_5),
    6: ("quantum measure-and-prepare PR-channel", criterion_6),
    7: ("qubit PR-channel family sweep", criterion_7),
    8: ("all-one-third example", criterion_8),
    9: ("partial transpose identity for B3", criterion_9),
    10: ("canonical witness squares", criterion_10),
}


def _run(n):
    name, fn = CRITERIA[n]
    passed, detail = fn()
    RESULTS[n] = (passed, f"{name}: {detail}")
    return passed, detail


def test_criterion_1():
    passed, detail = _run(1)
    assert passed, detail


def test_criterion_2():
    passed, detail = _run(2)
    assert passed, detail


def test_criterion_3():
    passed, detail = _run(3)
    assert passed, detail


def test_criterion_4():
    passed, detail = _run(4)
    assert passed, detail


def test_criterion_5():
    passed, detail = _run(5)
    assert passed, detail


def test_criterion_6():
    passed, detail = _run(6)
    assert passed, detail


def test_criterion_7():
    passed, detail = _run(7)
    assert passed, detail


def test_criterion_8():
    passed, detail = _run(8)
    assert passed, detail


def test_criterion_9():
    passed, detail = _run(9)
    assert passed, detail


def test_criterion_10():
    passed, detail = _run(10)
    assert passed, detail


def format_line(n: int) -> str:
    passed, detail = RESULTS[n]
    return f"[{'PASS' if passed else 'FAIL'}] criterion {n:2d} {detail}"


if __name__ == "__main__":
    import sys
    from pathlib import Path

    sys.path.insert(0, str(Path(__file__).parent))
    for n in CRITERIA:
        _run(n)
        print(format_line(n))
    sys.exit(0 if all(p for p, _ in RESULTS.values()) else 1)
