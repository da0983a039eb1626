"""Command-line front end.

Every subcommand prints a JSON run report on stdout and exits with status 0 iff
all of its verdicts pass. Usage errors exit with status 2, invalid inputs with 3.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import boxes, cchan, composites, gpt_core, qchan, qubit_pr, registry
from .matkit import DEFAULT_TOL, TolerancePolicy, matrix_from_json

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INVALID = 0, 1, 2, 3


class InputError(ValueError):
    pass


class RunReport:
    def __init__(self, command: str, inputs: dict):
        self.command = command
        self.inputs = inputs
        self.results: dict = {}
        self.verdicts: list[dict] = []
        self.timings: dict[str, float] = {}
        self._t0 = time.perf_counter()

    def verdict(self, name: str, passed: bool, residual: float, tol: float):
        self.verdicts.append({"name": name, "pass": bool(passed), "residual": float(residual), "tol": float(tol)})

    def timed(self, label: str, fn, *args, **kwargs):
        t = time.perf_counter()
        out = fn(*args, **kwargs)
        self.timings[label] = 1000 * (time.perf_counter() - t)
        return out

    @property
    def passed(self) -> bool:
        return all(v["pass"] for v in self.verdicts)

    def to_dict(self) -> dict:
        self.timings["total"] = 1000 * (time.perf_counter() - self._t0)
        return {
            "command": self.command,
            "inputs": self.inputs,
            "results": self.results,
            "verdicts": self.verdicts,
            "pass": self.passed,
            "timings_ms": self.timings,
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def _load_json(arg: str):
    p = Path(arg)
    if p.exists():
        return json.loads(p.read_text())
    try:
        return json.loads(arg)
    except json.JSONDecodeError as exc:
        raise InputError(f"{arg!r} is neither a file nor valid JSON: {exc}") from None


def _tol(args) -> TolerancePolicy:
    return TolerancePolicy(args.eps_psd, args.eps_eq)


# compat

def _resolve_space(spec: str) -> gpt_core.StateSpace:
    if spec in gpt_core.BUILTIN_SPACES:
        return gpt_core.space_by_name(spec)
    return gpt_core.StateSpace.from_dict(_load_json(spec))


def _resolve_effect(spec: str, space: gpt_core.StateSpace) -> gpt_core.Effect:
    if ":" in spec and not spec.lstrip().startswith("["):
        sname, ename = spec.split(":", 1)
        if sname != space.name:
            raise InputError(f"effect {spec!r} does not belong to space {space.name!r}")
        named = gpt_core.effects_by_name(space)
        if ename not in named:
            raise InputError(f"unknown effect {ename!r}; known: {sorted(named)}")
        return named[ename]
    return space.effect(np.asarray(_load_json(spec), dtype=float))


def cmd_compat(args) -> RunReport:
    tol = _tol(args)
    rep = RunReport("compat", {"space": args.space, "f": args.f, "g": args.g, "degcom": args.degcom})
    space = _resolve_space(args.space)
    f, g = _resolve_effect(args.f, space), _resolve_effect(args.g, space)
    for name, e in (("f", f), ("g", g)):
        vals = space.vertices @ e.coords
        rep.verdict(f"{name} is an effect", e.is_effect(tol), max(0.0, -vals.min(), vals.max() - 1), tol.eps_eq)
    rep.results["compatible"] = rep.timed("compatibility_lp", gpt_core.are_compatible, f, g, tol)
    if args.degcom:
        rep.results["degcom"] = rep.timed("degcom_lp", gpt_core.degree_of_compatibility, f, g, tol)
    ws = rep.timed("witness_square_lp", gpt_core.find_witness_square, f, g, tol)
    rep.results["maximally_incompatible"] = ws is not None
    if ws is not None:
        rep.results["witness_square"] = {f"x{i}{j}": ws[(i, j)].coords for i, j in [(0, 0), (1, 0), (0, 1), (1, 1)]}
        res = gpt_core.witness_square_residuals(ws, f, g)
        rep.verdict("witness square valid", gpt_core.validate_witness_square(ws, f, g, tol), max(res.values()), tol.eps_eq)
    return rep


# chsh

def _box_report(rep: RunReport, box: boxes.NonLocalBox, tol: TolerancePolicy):
    sig = boxes.signaling_residuals(box)
    rep.results["probabilities"] = box.probs.reshape(-1)
    rep.results["correlations"] = boxes.correlations(box)
    rep.results["chsh"] = boxes.chsh(box)
    rep.verdict("valid box", box.is_valid(tol), box.validity_residual(), tol.eps_eq)
    rep.verdict("non-signaling", max(sig.values()) <= tol.eps_eq, max(sig.values()), tol.eps_eq)
    if max(sig.values()) <= tol.eps_eq:
        rep.results["classification"] = boxes.classify_extremal(box, tol).to_dict()


def _eta(spec: str | None) -> np.ndarray:
    if spec is None:
        return np.eye(2, dtype=complex)
    if spec in registry.TESTER_BASES:
        return registry.TESTER_BASES[spec]()
    return matrix_from_json(_load_json(spec))


def cmd_chsh(args) -> RunReport:
    tol = _tol(args)
    rep = RunReport("chsh", {"target": args.target, "eta_a": args.eta_a, "eta_b": args.eta_b})
    target = args.target
    if target in registry.TENSORS:
        phi = registry.TENSORS[target]()
        sq = gpt_core.square()
        if not (gpt_core.same_space(phi.space_a, sq) and gpt_core.same_space(phi.space_b, sq)):
            raise InputError("built-in tensors are measured with pi0, pi1 on the square")
        box = boxes.box_from_state(phi, gpt_core.pi0(), gpt_core.pi1(), gpt_core.pi0(), gpt_core.pi1())
    elif target in registry.BIPARTITE_CHANNELS:
        c = registry.BIPARTITE_CHANNELS[target]()
        ns = qchan.ns_check(c, tol)
        res = ns["residuals"]
        rep.verdict("channel non-signaling", ns["pass"], max(res.values()), tol.eps_eq)
        pa, pb = qubit_pr.canonical_testers(_eta(args.eta_a)), qubit_pr.canonical_testers(_eta(args.eta_b))
        box = qchan.box_from_channel(c, pa.testers(), pb.testers())
    else:
        obj = _load_json(target)
        kind = obj.get("kind")
        if kind == "tensor":
            phi = composites.BipartiteTensor.from_dict(obj)
            effs = obj.get("effects", ["pi0", "pi1", "pi0", "pi1"])
            na, nb = gpt_core.effects_by_name(phi.space_a), gpt_core.effects_by_name(phi.space_b)
            box = boxes.box_from_state(phi, na[effs[0]], na[effs[1]], nb[effs[2]], nb[effs[3]])
        elif kind == "classical":
            phi = cchan.channel_to_tensor(cchan.ClassicalBipartiteChannel.from_dict(obj), tol)
            box = boxes.box_from_state(phi, gpt_core.pi0(), gpt_core.pi1(), gpt_core.pi0(), gpt_core.pi1())
        elif kind == "bipartite_choi":
            c = qchan.BipartiteChoi.from_dict(obj)
            ns = qchan.ns_check(c, tol)
            rep.verdict("channel non-signaling", ns["pass"], max(ns["residuals"].values()), tol.eps_eq)
            pa, pb = qubit_pr.canonical_testers(_eta(args.eta_a)), qubit_pr.canonical_testers(_eta(args.eta_b))
            box = qchan.box_from_channel(c, pa.testers(), pb.testers())
        else:
            raise InputError(f"unknown target {target!r}; built-ins: {registry.names()}")
    _box_report(rep, box, tol)
    return rep


# build-prchannel

def cmd_build_prchannel(args) -> RunReport:
    tol = _tol(args)
    rep = RunReport("build-prchannel", {"params": args.params, "out": args.out})
    if args.params in registry.PR_PARAMS:
        params = registry.PR_PARAMS[args.params]()
    else:
        params = qubit_pr.PRChannelParams.from_dict(_load_json(args.params))
    rep.inputs["params_json"] = params.to_dict()
    c = rep.timed("build", qubit_pr.build_pr_choi, params, tol)
    eta_a, eta_b = params.eta_bases()
    v = rep.timed("verify", qubit_pr.verify_pr, c, eta_a, eta_b, tol)
    cert = rep.timed("certify", qubit_pr.certify_entanglement_breaking, params, tol)
    rep.results["verify"] = v
    rep.results["certificate"] = cert
    rep.verdict("PR table", v["probability_residual"] <= tol.eps_eq, v["probability_residual"], tol.eps_eq)
    ns_res = max(v["ns_residuals"][k] for k in ("alice_marginal", "bob_marginal", "tp"))
    rep.verdict("non-signaling channel", ns_res <= tol.eps_eq, ns_res, tol.eps_eq)
    rep.verdict("positive Choi matrix", v["ns_residuals"]["psd"] <= tol.eps_psd, v["ns_residuals"]["psd"], tol.eps_psd)
    margin = min(cert["min_eig_B_r_gamma"], cert["min_eig_choi_pt"], *cert["min_eig_delta0_blocks"].values(), 0.0)
    rep.verdict("entanglement-breaking certificate", cert["certified"], max(0.0, -margin), tol.eps_psd)
    if args.out:
        Path(args.out).write_text(json.dumps(c.to_dict()))
        rep.results["written"] = args.out
    return rep


# simulate

def cmd_simulate(args) -> RunReport:
    tol = _tol(args)
    rep = RunReport("simulate", {"channel": args.channel, "rounds": args.rounds, "seed": args.seed,
                                 "setting": args.setting})
    if args.channel in registry.CLASSICAL_CHANNELS:
        ch = registry.CLASSICAL_CHANNELS[args.channel]()
    else:
        ch = cchan.ClassicalBipartiteChannel.from_dict(_load_json(args.channel))
    sig = ch.signaling_residuals()
    rep.verdict("non-signaling channel", max(sig.values()) <= tol.eps_eq, max(sig.values()), tol.eps_eq)
    policy = "uniform" if args.setting == "uniform" else (int(args.setting[0]), int(args.setting[1]))
    res = rep.timed("simulate", cchan.simulate, ch, args.rounds, args.seed, policy)
    rep.results.update(res.to_dict())
    return rep


# sweep

def cmd_sweep(args) -> RunReport:
    tol = _tol(args)
    rep = RunReport("sweep", {"samples": args.samples, "seed": args.seed, "case": args.case})
    rng = np.random.default_rng(args.seed)
    case = None if args.case is None else tuple(args.case.split(","))
    worst = {"psd": 0.0, "tp": 0.0, "ns": 0.0, "probabilities": 0.0}
    uncertified = 0
    cases: dict[str, int] = {}
    t = time.perf_counter()
    for _ in range(args.samples):
        p = qubit_pr.random_params(rng, case)
        cases[",".join(p.case)] = cases.get(",".join(p.case), 0) + 1
        c = qubit_pr.build_pr_choi(p, tol)
        v = qubit_pr.verify_pr(c, *p.eta_bases(), tol)
        r = v["ns_residuals"]
        worst["psd"] = max(worst["psd"], r["psd"])
        worst["tp"] = max(worst["tp"], r["tp"])
        worst["ns"] = max(worst["ns"], r["alice_marginal"], r["bob_marginal"])
        worst["probabilities"] = max(worst["probabilities"], v["probability_residual"])
        uncertified += not qubit_pr.certify_entanglement_breaking(p, tol)["certified"]
    rep.timings["sweep"] = 1000 * (time.perf_counter() - t)
    rep.results.update({"cases": cases, "worst_residuals": worst, "uncertified": uncertified})
    rep.verdict("positive Choi matrices", worst["psd"] <= tol.eps_psd, worst["psd"], tol.eps_psd)
    rep.verdict("trace preserving", worst["tp"] <= tol.eps_eq, worst["tp"], tol.eps_eq)
    rep.verdict("non-signaling", worst["ns"] <= tol.eps_eq, worst["ns"], tol.eps_eq)
    rep.verdict("PR table", worst["probabilities"] <= tol.eps_eq, worst["probabilities"], tol.eps_eq)
    rep.verdict("entanglement-breaking certificates", uncertified == 0, float(uncertified), 0.0)
    return rep


def _positive_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def _setting(s: str) -> str:
    if s != "uniform" and (len(s) != 2 or any(c not in "01" for c in s)):
        raise argparse.ArgumentTypeError("setting is 'uniform' or a fixed pair like '01'")
    return s


def build_parser() -> argparse.ArgumentParser:
    default_seed = int(os.environ.get("PRLAB_SEED", "7"))
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--eps-psd", type=float, default=DEFAULT_TOL.eps_psd)
    common.add_argument("--eps-eq", type=float, default=DEFAULT_TOL.eps_eq)

    parser = argparse.ArgumentParser(prog="prlab", description="PR-box implementations in GPTs and channels")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compat", parents=[common], help="compatibility of two effects")
    p.add_argument("space", help="built-in space name or StateSpace JSON")
    p.add_argument("f", help="effect, e.g. square:pi0 or a coordinate list")
    p.add_argument("g")
    p.add_argument("--degcom", action="store_true", help="also compute the degree of compatibility")
    p.set_defaults(func=cmd_compat)

    p = sub.add_parser("chsh", parents=[common], help="outcome table and CHSH value")
    p.add_argument("target", help="built-in name or JSON with kind tensor/classical/bipartite_choi")
    p.add_argument("--eta-a", help="tester basis for Alice (identity, flip, hadamard or matrix JSON)")
    p.add_argument("--eta-b")
    p.set_defaults(func=cmd_chsh)

    p = sub.add_parser("build-prchannel", parents=[common], help="assemble and verify a qubit PR-channel")
    p.add_argument("params", help="built-in name or PRChannelParams JSON")
    p.add_argument("--out", help="write the Choi matrix JSON here")
    p.set_defaults(func=cmd_build_prchannel)

    p = sub.add_parser("simulate", parents=[common], help="sample a classical bipartite channel")
    p.add_argument("channel", help="built-in name or channel JSON")
    p.add_argument("--rounds", type=_positive_int, default=100_000)
    p.add_argument("--seed", type=int, default=default_seed)
    p.add_argument("--setting", type=_setting, default="uniform")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", parents=[common], help="random qubit PR-channel property sweep")
    p.add_argument("--samples", type=_positive_int, default=100)
    p.add_argument("--seed", type=int, default=default_seed)
    p.add_argument("--case", help="fix the case, e.g. identity,generic")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _tol(args)
    except ValueError as exc:
        parser.error(str(exc))
    try:
        rep = args.func(args)
    except (InputError, ValueError, KeyError) as exc:
        print(json.dumps({"command": args.command, "error": str(exc)}), file=sys.stderr)
        return EXIT_INVALID
    print(json.dumps(_jsonable(rep.to_dict()), indent=2))
    return EXIT_OK if rep.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
