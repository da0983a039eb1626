"""Qubit PR-channels: canonical maximally incompatible testers and the full structure family.

Every qubit PR-channel has a Choi matrix of the form

    C = (V_out x V_in) B_r (V_out x V_in)^* + sum_{a in D0} 1/2 U_a B_diag(z_a) U_a^* x |a><a|

on ``A_out B_out (x) A_in B_in``, where the inputs ``{0,1}^2`` split into ``D1``
(``r = |D1|`` inputs sharing the output isometry ``V_out``) and ``D0``. The split
and the isometries depend only on whether each side's basis ``eta`` is generic,
the identity, or the flip.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .boxes import pr_box
from .matkit import (
    DEFAULT_TOL,
    TolerancePolicy,
    kron,
    ket,
    matrix_from_json,
    matrix_to_json,
    min_eigenvalue,
    partial_transpose,
    proj,
    random_unitary,
)
from .qchan import BipartiteChoi, ChoiMatrix, Tester, box_from_channel, ns_check

CASES = ("generic", "identity", "flip")
INPUTS = [(0, 0), (0, 1), (1, 0), (1, 1)]

ZERO_TOL = 1e-9
NEAR_THRESHOLD = 1e-6

V = np.array([[0, 1], [1, 0]], dtype=complex)
W = np.zeros((4, 2), dtype=complex)
W[0, 0] = W[3, 1] = 1.0


class NearThresholdError(ValueError):
    """Raised when a basis is too close to the generic/non-generic boundary to classify."""


class InvalidParamsError(ValueError):
    pass


def _label(alpha) -> str:
    return f"{alpha[0]}{alpha[1]}"


def _parse_label(s: str) -> tuple[int, int]:
    if len(s) != 2 or any(c not in "01" for c in s):
        raise InvalidParamsError(f"bad input label {s!r}")
    return int(s[0]), int(s[1])


def _check_unitary(u: np.ndarray, tol: TolerancePolicy = DEFAULT_TOL) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2) or np.max(np.abs(u.conj().T @ u - np.eye(2))) > tol.eps_eq:
        raise InvalidParamsError("eta must be an orthonormal qubit basis (columns of a 2x2 unitary)")
    return u


# Canonical testers

@dataclass(eq=False)
class CanonicalTesterPair:
    """Input ``|0>`` and measure ``{|0>, |1>}``, or input ``|1>`` and measure ``{|eta_0>, |eta_1>}``."""

    eta: np.ndarray

    def __post_init__(self):
        self.eta = _check_unitary(self.eta)

    def testers(self) -> tuple[Tester, Tester]:
        p0, p1 = proj(ket(0)), proj(ket(1))
        e0, e1 = proj(self.eta[:, 0]), proj(self.eta[:, 1])
        a = Tester([np.kron(p0, p0), np.kron(p1, p0)], p0)
        a2 = Tester([np.kron(e0, p1), np.kron(e1, p1)], p1)
        return a, a2

    def witness_square(self) -> dict[tuple[int, int], ChoiMatrix]:
        """``C_ij = |i+1><i+1| x |0><0| + |eta_{j+1}><eta_{j+1}| x |1><1|`` (indices mod 2)."""
        p0, p1 = proj(ket(0)), proj(ket(1))
        out = {}
        for i, j in itertools.product(range(2), repeat=2):
            op = np.kron(proj(ket(1 - i)), p0) + np.kron(proj(self.eta[:, 1 - j]), p1)
            out[(i, j)] = ChoiMatrix(2, 2, op)
        return out


def canonical_testers(eta: np.ndarray) -> CanonicalTesterPair:
    return CanonicalTesterPair(eta)


def witness_square_residuals(pair: CanonicalTesterPair, chans: dict[tuple[int, int], ChoiMatrix],
                             tol: TolerancePolicy = DEFAULT_TOL) -> dict[str, float]:
    ta, ta2 = pair.testers()
    res = {"psd": 0.0, "tp": 0.0, "hermiticity": 0.0, "values": 0.0}
    for (i, j), c in chans.items():
        r = c.residuals(tol)
        for k in ("psd", "tp", "hermiticity"):
            res[k] = max(res[k], r[k])
        vals = (np.trace(c.op @ ta.ops[0]).real, np.trace(c.op @ ta2.ops[0]).real)
        res["values"] = max(res["values"], abs(vals[0] - i), abs(vals[1] - j))
    para = chans[(0, 0)].op + chans[(1, 1)].op - chans[(1, 0)].op - chans[(0, 1)].op
    res["parallelogram"] = float(np.max(np.abs(para)))
    return res


def witness_square_valid(pair, chans, tol: TolerancePolicy = DEFAULT_TOL) -> bool:
    r = witness_square_residuals(pair, chans, tol)
    return r["psd"] <= tol.eps_psd and max(r["tp"], r["hermiticity"], r["values"], r["parallelogram"]) <= tol.eps_eq


def witness_square_is_unique(pair: CanonicalTesterPair) -> bool:
    """Check that positivity plus the parallelogram identity pin the witness square.

    The 0/1 values force rank-one diagonal blocks, so positivity leaves only
    off-diagonal blocks ``z_ij |i><eta_j|``; the parallelogram identity then
    reads ``sum +-z_ij |i><eta_j| = 0``, which has only the zero solution when
    the four operators are linearly independent.
    """
    ops = [np.outer(ket(i), pair.eta[:, j].conj()) for i, j in [(0, 0), (1, 1), (1, 0), (0, 1)]]
    signs = [1, 1, -1, -1]
    a = np.column_stack([s * o.reshape(-1) for s, o in zip(signs, ops)])
    sv = np.linalg.svd(a, compute_uv=False)
    return bool(sv.min() > 1e-9)


# Case table

def classify_unitary(u: np.ndarray) -> str:
    """``identity`` (diagonal), ``flip`` (anti-diagonal) or ``generic`` (no zero entries)."""
    u = _check_unitary(u)
    mags = np.abs(u)
    near = (mags > ZERO_TOL) & (mags < NEAR_THRESHOLD)
    if near.any():
        raise NearThresholdError(f"basis entries {mags[near]} lie between {ZERO_TOL} and {NEAR_THRESHOLD}")
    zero = mags <= ZERO_TOL
    if not zero.any():
        return "generic"
    if zero[0, 1] and zero[1, 0]:
        return "identity"
    if zero[0, 0] and zero[1, 1]:
        return "flip"
    raise AssertionError("a unitary with a zero entry must be diagonal or anti-diagonal")


# (case_A, case_B) -> (D1 as input labels, which factor of V_out carries the side unitary)
# V_out choices: "W", "UA" = (U_A x 1) W, "UB" = (1 x U_B) W, "V" = (1 x V) W
_TABLE_I = {
    ("generic", "generic"): ([(0, 0)], "W"),
    ("generic", "identity"): ([(0, 0), (0, 1)], "W"),
    ("generic", "flip"): ([(1, 0), (1, 1)], "UA"),
    ("identity", "generic"): ([(0, 0), (1, 0)], "W"),
    ("identity", "identity"): ([(0, 0), (0, 1), (1, 0)], "W"),
    ("identity", "flip"): ([(0, 0), (1, 0), (1, 1)], "W"),
    ("flip", "generic"): ([(0, 1), (1, 1)], "UB"),
    ("flip", "identity"): ([(0, 0), (0, 1), (1, 1)], "W"),
    ("flip", "flip"): ([(0, 1), (1, 0), (1, 1)], "V"),
}


@dataclass(eq=False)
class Table1Structure:
    case: tuple[str, str]
    delta0: list[tuple[int, int]]
    delta1: list[tuple[int, int]]
    u_a: np.ndarray
    u_b: np.ndarray
    u_alpha: dict[tuple[int, int], np.ndarray]
    v_out: np.ndarray
    v_in: np.ndarray

    @property
    def r(self) -> int:
        return len(self.delta1)


def _side_unitary(case: str, eta) -> np.ndarray:
    if case == "identity":
        return np.eye(2, dtype=complex)
    if case == "flip":
        return V.copy()
    if case == "generic":
        if eta is None:
            raise InvalidParamsError("generic case needs an explicit eta basis")
        u = _check_unitary(eta)
        if classify_unitary(u) != "generic":
            raise InvalidParamsError("eta basis is not generic")
        return u
    raise InvalidParamsError(f"unknown case tag {case!r}; expected one of {CASES}")


def u_isometry(u_a: np.ndarray, u_b: np.ndarray, k: int, m: int) -> np.ndarray:
    """``U_km = (U_A^k x U_B^m V^{km}) W``: the output support for input ``km``."""
    a = np.linalg.matrix_power(u_a, k)
    b = np.linalg.matrix_power(u_b, m) @ np.linalg.matrix_power(V, k * m)
    return kron(a, b) @ W


def table1_structure(case, eta_a=None, eta_b=None) -> Table1Structure:
    case = tuple(case)
    if case not in _TABLE_I:
        raise InvalidParamsError(f"invalid case {case!r}; each side must be one of {CASES}")
    u_a, u_b = _side_unitary(case[0], eta_a), _side_unitary(case[1], eta_b)
    delta1, vo = _TABLE_I[case]
    delta0 = [a for a in INPUTS if a not in delta1]
    v_out = {
        "W": W,
        "UA": kron(u_a, np.eye(2)) @ W,
        "UB": kron(np.eye(2), u_b) @ W,
        "V": kron(np.eye(2), V) @ W,
    }[vo]
    v_in = np.zeros((4, len(delta1)), dtype=complex)
    for p, (k, m) in enumerate(delta1):
        v_in[2 * k + m, p] = 1.0
    u_alpha = {a: u_isometry(u_a, u_b, *a) for a in INPUTS}
    return Table1Structure(case, delta0, list(delta1), u_a, u_b, u_alpha, v_out.copy(), v_in)


# Parameters and Choi assembly

def b_diag(z: complex) -> np.ndarray:
    return np.array([[1, z], [np.conj(z), 1]], dtype=complex)


def b_off(x: complex, y: complex) -> np.ndarray:
    return np.array([[0, x], [y, 0]], dtype=complex)


def b_r_matrix(z, x=None, y=None) -> np.ndarray:
    """``1/2 (sum_p B_diag(z_p) x |p><p| + sum_{p != q} B_off(x_pq, y_pq) x |p><q|)`` on ``C^2 x C^r``."""
    z = np.asarray(z, dtype=complex).reshape(-1)
    r = z.size
    x = np.zeros((r, r), dtype=complex) if x is None else np.asarray(x, dtype=complex)
    y = np.zeros((r, r), dtype=complex) if y is None else np.asarray(y, dtype=complex)
    out = np.zeros((2 * r, 2 * r), dtype=complex)
    for p, q in itertools.product(range(r), repeat=2):
        unit = np.zeros((r, r))
        unit[p, q] = 1.0
        blk = b_diag(z[p]) if p == q else b_off(x[p, q], y[p, q])
        out += np.kron(blk, unit)
    return 0.5 * out


def _complex(v) -> complex:
    if isinstance(v, (list, tuple)):
        return complex(v[0], v[1])
    return complex(v)


def _cjson(v: complex) -> list[float]:
    return [float(np.real(v)), float(np.imag(v))]


@dataclass(eq=False)
class PRChannelParams:
    case: tuple[str, str] = ("identity", "identity")
    z: np.ndarray = field(default_factory=lambda: np.zeros(3, dtype=complex))
    x: np.ndarray | None = None
    y: np.ndarray | None = None
    z_alpha: dict[tuple[int, int], complex] = field(default_factory=dict)
    eta_a: np.ndarray | None = None
    eta_b: np.ndarray | None = None

    def __post_init__(self):
        self.case = tuple(self.case)
        self.z = np.asarray(self.z, dtype=complex).reshape(-1)
        r = self.z.size
        self.x = np.zeros((r, r), dtype=complex) if self.x is None else np.asarray(self.x, dtype=complex)
        self.y = np.zeros((r, r), dtype=complex) if self.y is None else np.asarray(self.y, dtype=complex)
        self.z_alpha = {(_parse_label(k) if isinstance(k, str) else tuple(k)): complex(v) for k, v in self.z_alpha.items()}

    def structure(self) -> Table1Structure:
        return table1_structure(self.case, self.eta_a, self.eta_b)

    def eta_bases(self) -> tuple[np.ndarray, np.ndarray]:
        s = self.structure()
        return s.u_a, s.u_b

    def b_r(self) -> np.ndarray:
        return b_r_matrix(self.z, self.x, self.y)

    def to_dict(self) -> dict:
        return {
            "case": list(self.case),
            "etaA": None if self.eta_a is None else matrix_to_json(self.eta_a),
            "etaB": None if self.eta_b is None else matrix_to_json(self.eta_b),
            "z": [_cjson(v) for v in self.z],
            "x": [[_cjson(v) for v in row] for row in self.x],
            "y": [[_cjson(v) for v in row] for row in self.y],
            "z_alpha": {_label(k): _cjson(v) for k, v in self.z_alpha.items()},
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "PRChannelParams":
        def mat(rows):
            return None if rows is None else np.array([[_complex(v) for v in row] for row in rows], dtype=complex)

        eta = {k: (None if obj.get(k) is None else matrix_from_json(obj[k])) for k in ("etaA", "etaB")}
        return cls(
            case=tuple(obj.get("case", ("identity", "identity"))),
            z=np.array([_complex(v) for v in obj.get("z", [])], dtype=complex),
            x=mat(obj.get("x")),
            y=mat(obj.get("y")),
            z_alpha={k: _complex(v) for k, v in obj.get("z_alpha", {}).items()},
            eta_a=eta["etaA"],
            eta_b=eta["etaB"],
        )


def validate_params(p: PRChannelParams, tol: TolerancePolicy = DEFAULT_TOL) -> Table1Structure:
    s = p.structure()
    if p.z.size != s.r:
        raise InvalidParamsError(f"case {p.case} has r = {s.r} but {p.z.size} diagonal parameters were given")
    if p.x.shape != (s.r, s.r) or p.y.shape != (s.r, s.r):
        raise InvalidParamsError(f"x and y must be {s.r}x{s.r}")
    if set(p.z_alpha) != set(s.delta0):
        raise InvalidParamsError(
            f"z_alpha keys {sorted(map(_label, p.z_alpha))} do not match D0 = {sorted(map(_label, s.delta0))}"
        )
    big = [abs(v) for v in list(p.z) + list(p.z_alpha.values()) if abs(v) > 1 + tol.eps_eq]
    if big:
        raise InvalidParamsError(f"|z| ≤ 1 violated (|z| = {max(big):.6g})")
    herm = max((abs(p.x[q, k] - np.conj(p.y[k, q])) for k, q in itertools.permutations(range(s.r), 2)), default=0.0)
    if herm > tol.eps_eq:
        raise InvalidParamsError(f"B_r is not Hermitian: x_qp != conj(y_pq) (residual {herm:.3e})")
    lam = min_eigenvalue(p.b_r(), tol)
    if lam < -tol.eps_psd:
        raise InvalidParamsError(f"B_r is not positive semidefinite (min eigenvalue {lam:.3e})")
    return s


def build_pr_choi(p: PRChannelParams, tol: TolerancePolicy = DEFAULT_TOL) -> BipartiteChoi:
    s = validate_params(p, tol)
    iso = np.kron(s.v_out, s.v_in)
    op = iso @ p.b_r() @ iso.conj().T
    for a in s.delta0:
        u = s.u_alpha[a]
        e = np.zeros((4, 4))
        e[2 * a[0] + a[1], 2 * a[0] + a[1]] = 1.0
        op = op + 0.5 * np.kron(u @ b_diag(p.z_alpha[a]) @ u.conj().T, e)
    return BipartiteChoi(op, 2)


def support_projector(s: Table1Structure) -> np.ndarray:
    """``P = sum_a U_a U_a^* x |a><a|``; a PR-channel satisfies ``C = P C P``."""
    out = np.zeros((16, 16), dtype=complex)
    for a in INPUTS:
        u = s.u_alpha[a]
        e = np.zeros((4, 4))
        e[2 * a[0] + a[1], 2 * a[0] + a[1]] = 1.0
        out += np.kron(u @ u.conj().T, e)
    return out


# Verification and certification

def verify_pr(c: BipartiteChoi, eta_a: np.ndarray, eta_b: np.ndarray, tol: TolerancePolicy = DEFAULT_TOL) -> dict:
    box = box_from_channel(c, canonical_testers(eta_a).testers(), canonical_testers(eta_b).testers())
    prob_res = box.max_difference(pr_box())
    ns = ns_check(c, tol)
    return {
        "pass": prob_res <= tol.eps_eq and ns["pass"],
        "probabilities": box.probs.reshape(-1).tolist(),
        "probability_residual": prob_res,
        "ns_residuals": ns["residuals"],
        "tol": {"eps_eq": tol.eps_eq, "eps_psd": tol.eps_psd},
    }


def pt_flip_residual(b: np.ndarray, r: int) -> float:
    """``|| B^Gamma - (V x 1_r) B (V x 1_r) ||_max`` with the transpose on the qubit factor."""
    vv = np.kron(V, np.eye(r))
    return float(np.max(np.abs(partial_transpose(b, [2, r], 0) - vv @ b @ vv)))


def certify_entanglement_breaking(p: PRChannelParams, tol: TolerancePolicy = DEFAULT_TOL) -> dict:
    """PPT certificate for every separable piece of the Choi matrix.

    ``B_r`` lives on ``C^2 x C^r`` with ``r <= 3`` where PPT implies separability,
    and each ``D0`` term is a product with a fixed input. The full Choi matrix is
    also checked for PPT across the output/input cut as an independent necessary test.
    """
    s = validate_params(p, tol)
    b = p.b_r()
    b_gamma = partial_transpose(b, [2, s.r], 0)
    c = build_pr_choi(p, tol)
    blocks = {_label(a): min_eigenvalue(0.5 * b_diag(p.z_alpha[a]), tol) for a in s.delta0}
    res = {
        "r": s.r,
        "min_eig_B_r": min_eigenvalue(b, tol),
        "min_eig_B_r_gamma": min_eigenvalue(b_gamma, tol),
        "pt_flip_residual": pt_flip_residual(b, s.r),
        "min_eig_delta0_blocks": blocks,
        "min_eig_choi_pt": min_eigenvalue(partial_transpose(c.op, [4, 4], 1), tol),
    }
    ok = (
        s.r <= 3
        and res["min_eig_B_r"] >= -tol.eps_psd
        and res["min_eig_B_r_gamma"] >= -tol.eps_psd
        and res["pt_flip_residual"] <= tol.eps_eq
        and all(v >= -tol.eps_psd for v in blocks.values())
        and res["min_eig_choi_pt"] >= -tol.eps_psd
    )
    res["certified"] = bool(ok)
    return res


# Measure-and-prepare subfamily

def measure_prepare_pr_choi(m_list, w_list, w0: complex) -> BipartiteChoi:
    """Choi matrix of ``1/2 (<11|rho|11> W~ B(w0) W~^* + sum_l Tr(M_l rho) W B(w_l) W^*)``, ``W~ = (V x 1) W``."""
    w_t = np.kron(V, np.eye(2)) @ W
    e11 = proj(ket(3, 4))
    op = np.kron(0.5 * w_t @ b_diag(w0) @ w_t.conj().T, e11.T)
    for m, w in zip(m_list, w_list):
        op = op + np.kron(0.5 * W @ b_diag(w) @ W.conj().T, np.asarray(m, dtype=complex).T)
    return BipartiteChoi(op, 2)


def params_from_measure_prepare(m_list, w_list, w0: complex, tol: TolerancePolicy = DEFAULT_TOL) -> PRChannelParams:
    """Parameters for the ``(identity, identity)`` case reproducing :func:`measure_prepare_pr_choi`.

    ``z_p = sum_l w_l <a_p|M_l|a_p>``, ``x_pq = sum_l w_l <a_q|M_l|a_p>``,
    ``y_pq = sum_l conj(w_l) <a_q|M_l|a_p>`` and ``z_11 = conj(w0)``.
    """
    m_list = [np.asarray(m, dtype=complex) for m in m_list]
    target = np.eye(4) - proj(ket(3, 4))
    if np.max(np.abs(sum(m_list) - target)) > tol.eps_eq:
        raise InvalidParamsError("effects must sum to 1 - |11><11|")
    for m in m_list:
        if min_eigenvalue(m, tol) < -tol.eps_psd:
            raise InvalidParamsError("M_l must be positive")
    if any(abs(w) > 1 + tol.eps_eq for w in list(w_list) + [w0]):
        raise InvalidParamsError("|z| ≤ 1 violated for a weight w_l")
    alphas = [0, 1, 2]  # |00>, |01>, |10>
    z = np.array([sum(w * m[a, a] for m, w in zip(m_list, w_list)) for a in alphas])
    x = np.zeros((3, 3), dtype=complex)
    y = np.zeros((3, 3), dtype=complex)
    for p, q in itertools.permutations(range(3), 2):
        x[p, q] = sum(w * m[alphas[q], alphas[p]] for m, w in zip(m_list, w_list))
        y[p, q] = sum(np.conj(w) * m[alphas[q], alphas[p]] for m, w in zip(m_list, w_list))
    return PRChannelParams(("identity", "identity"), z, x, y, {(1, 1): np.conj(w0)})


# Named examples

def example6_params() -> PRChannelParams:
    return PRChannelParams(("identity", "identity"), np.zeros(3), None, None, {(1, 1): 0.0})


def phi_pm_params(sign: int = 1) -> PRChannelParams:
    return PRChannelParams(("identity", "identity"), np.full(3, float(sign)), None, None, {(1, 1): float(sign)})


def all_third_params() -> PRChannelParams:
    t = np.full((3, 3), 1 / 3, dtype=complex)
    return PRChannelParams(("identity", "identity"), np.full(3, 1 / 3), t, t.copy(), {(1, 1): 1 / 3})


# Random valid parameters

def _unit_disc(rng: np.random.Generator, size=None):
    rad = np.sqrt(rng.random(size))
    return rad * np.exp(2j * np.pi * rng.random(size))


def random_generic_basis(rng: np.random.Generator) -> np.ndarray:
    while True:
        u = random_unitary(2, rng)
        try:
            if classify_unitary(u) == "generic":
                return u
        except NearThresholdError:
            continue


def random_params(rng: np.random.Generator, case=None) -> PRChannelParams:
    """Random valid parameters for ``case`` (uniform over the nine cases when ``None``).

    ``z``, ``x``, ``y`` are drawn uniformly from the unit disc (``x_qp = conj(y_pq)``
    for Hermiticity). With ``D`` the block diagonal and ``O`` the off-diagonal part
    of ``B_r``, the off-diagonals are scaled by ``t = min(1, s t*)`` where ``t*``
    is the largest factor keeping ``D + t O`` positive and ``s ~ U(1/2, 1)``.
    Eigenvalue clipping is avoided because it would move the fixed diagonal.
    """
    if case is None:
        case = (CASES[rng.integers(3)], CASES[rng.integers(3)])
    case = tuple(case)
    eta_a = random_generic_basis(rng) if case[0] == "generic" else None
    eta_b = random_generic_basis(rng) if case[1] == "generic" else None
    s = table1_structure(case, eta_a, eta_b)
    r = s.r
    z = _unit_disc(rng, r)
    x = np.zeros((r, r), dtype=complex)
    y = np.zeros((r, r), dtype=complex)
    for p, q in itertools.combinations(range(r), 2):
        x[p, q], y[p, q] = _unit_disc(rng, 2)
        x[q, p], y[q, p] = np.conj(y[p, q]), np.conj(x[p, q])
    if r > 1:
        d = b_r_matrix(z)
        o = b_r_matrix(np.zeros(r), x, y) - b_r_matrix(np.zeros(r))
        w, v = np.linalg.eigh(d)
        d_isqrt = v @ np.diag(w ** -0.5) @ v.conj().T
        mu = np.linalg.eigvalsh(d_isqrt @ o @ d_isqrt).min()
        t_star = np.inf if mu >= 0 else -1.0 / mu
        t = min(1.0, rng.uniform(0.5, 1.0) * t_star)
        x, y = t * x, t * y
    z_alpha = {a: complex(_unit_disc(rng)) for a in s.delta0}
    return PRChannelParams(case, z, x, y, z_alpha, eta_a, eta_b)
