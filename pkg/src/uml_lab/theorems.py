"""Numerical certification of the variance-reduction results.

Each ``check_*`` function evaluates one statement on one configuration and
returns a :class:`CheckOutcome`; it never raises on a mathematical
violation. :func:`run_suite` draws randomized ensembles, one replayable
integer seed per configuration, and folds outcomes into
:class:`TheoremReport` records.

Matrices here are the unscaled shared-parameter blocks ``sum A_c^T A_c``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import linalg
from .dgp import LatentPartition, LinearDgpSpec, make_orthogonal_spec, stream
from .errors import InvalidInput
from .estimation import Mode, fisher_from_counts, fisher_info, monte_carlo_cov, crlb_common, schur_profile

PASS, FAIL, UNMET = "pass", "fail", "precondition_unmet"
MARGIN = 1e-10  # relative margin for strict inequalities


@dataclass
class CheckOutcome:
    status: str
    violation: float = 0.0
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status == PASS


def _margin(*values) -> float:
    return MARGIN * max(1.0, *(abs(float(v)) for v in values))


def _strict_less(lhs: float, rhs: float, what: str, details: dict) -> CheckOutcome:
    m = _margin(lhs, rhs)
    details.update({f"{what}_lhs": lhs, f"{what}_rhs": rhs, "margin": m})
    if lhs < rhs - m:
        return CheckOutcome(PASS, 0.0, details)
    return CheckOutcome(FAIL, lhs - rhs + m, details)


def shared_blocks(spec: LinearDgpSpec, n_x: int, n_y: int):
    """Unscaled (M_X, M_Y) for the given sample counts."""
    mx = fisher_info(spec, Mode.X_ONLY, n_x, 0).cc if n_x else np.zeros((spec.partition.d_c,) * 2)
    my = fisher_info(spec, Mode.Y_ONLY, 0, n_y).cc if n_y else np.zeros((spec.partition.d_c,) * 2)
    return mx, my


def _used_slots(spec: LinearDgpSpec, modality: str, n: int) -> list:
    counts = spec.slot_counts(modality, n)
    return [spec.designs(modality)[k][0] for k in range(len(counts)) if counts[k]]


# --- joint never worse -------------------------------------------------------------

def thm1_blocks(MX, MY) -> CheckOutcome:
    """Strict ordering ``M_X < M_X + M_Y`` and, when ``M_X`` is PD, of the inverses."""
    MX, MY = linalg.as_sym(MX), linalg.as_sym(MY)
    MXY = MX + MY
    info = linalg.loewner_compare(MX, MXY)
    details = {"info_relation": info.relation.value, "info_min_eig": info.min_eig_of_difference}
    if info.relation is not linalg.Relation.STRICTLY_LESS:
        return CheckOutcome(FAIL, -info.min_eig_of_difference + info.tol, details)
    x_pd = linalg.rank(MX) == MX.shape[0]
    details["mx_positive_definite"] = x_pd
    if x_pd:
        var = linalg.loewner_compare(linalg.pinv(MXY), linalg.pinv(MX))
        details.update(var_relation=var.relation.value, var_min_eig=var.min_eig_of_difference)
        if var.relation is not linalg.Relation.STRICTLY_LESS:
            return CheckOutcome(FAIL, -var.min_eig_of_difference + var.tol, details)
    return CheckOutcome(PASS, 0.0, details)


def check_thm1(spec: LinearDgpSpec, n_x: int, n_y: int) -> CheckOutcome:
    d_c = spec.partition.d_c
    full_rank = [B for B in _used_slots(spec, "Y", n_y) if np.linalg.matrix_rank(B) == d_c]
    if not full_rank:
        return CheckOutcome(UNMET, 0.0, {"reason": "no Y shared block has full column rank"})
    MX, MY = shared_blocks(spec, n_x, n_y)
    out = thm1_blocks(MX, MY)
    if n_x and spec.partition.d_x + spec.partition.d_y:
        # exact profile convention reported beside the block statement
        fx = fisher_info(spec, Mode.X_ONLY, n_x, 0)
        fxy = fisher_info(spec, Mode.JOINT, n_x, n_y)
        prof = linalg.loewner_compare(schur_profile(fx), schur_profile(fxy))
        out.details["profile_info_relation"] = prof.relation.value
    return out


# --- directional gains, contraction and rescue ---------------------------------------------

def thm2_blocks(MX, MY, v) -> CheckOutcome:
    """Directional information gain along ``v`` and the matching variance statement.

    Outside range(M_X) the X-only variance is flagged infinite and the joint
    one must be finite. Inside, the reduction is asserted on the restriction
    to S = range(M_X) whenever ``(P_S M_Y P_S) M_X^+ v != 0``; the true
    pseudoinverse comparison is reported alongside.
    """
    MX, MY = linalg.as_sym(MX), linalg.as_sym(MY)
    v = np.asarray(v, dtype=np.float64)
    if not np.any(v):
        raise InvalidInput("direction must be nonzero")
    gain = float(v @ MY @ v)
    if gain <= _margin(gain, v @ v * np.abs(MY).max(initial=0.0)):
        return CheckOutcome(UNMET, 0.0, {"reason": "B_c v = 0 for every Y slot"})
    MXY = MX + MY
    details = {}
    out = _strict_less(float(v @ MX @ v), float(v @ MXY @ v), "information", details)
    if not out.passed:
        return out
    in_range = bool(np.any(MX)) and linalg.range_contains(MX, v)
    details["case"] = 2 if in_range else 1
    if not in_range:
        joint_ok = linalg.range_contains(MXY, v)
        joint_var = float(v @ linalg.pinv(MXY) @ v) if joint_ok else math.inf
        details.update(x_identifiable=False, joint_identifiable=joint_ok, joint_variance=joint_var)
        if joint_ok and math.isfinite(joint_var) and joint_var > 0:
            return CheckOutcome(PASS, 0.0, details)
        return CheckOutcome(FAIL, 1.0, details)
    P = linalg.range_projector(MX)
    MX_pinv = linalg.pinv(MX)
    cond = (P @ MY @ P) @ (MX_pinv @ v)
    cond_holds = float(np.linalg.norm(cond)) > 1e-9 * max(1.0, float(np.linalg.norm(MY))) * float(np.linalg.norm(MX_pinv @ v))
    var_x = float(v @ MX_pinv @ v)
    true_joint = float(v @ linalg.pinv(MXY) @ v)
    details.update(strictness_condition=cond_holds, x_variance=var_x, true_joint_variance=true_joint,
                   true_reduction=true_joint < var_x - _margin(true_joint, var_x))
    if not cond_holds:
        return CheckOutcome(PASS, 0.0, details)
    restricted_joint = float(v @ linalg.pinv(P @ MXY @ P) @ v)
    details["restricted_joint_variance"] = restricted_joint
    return _strict_less(restricted_joint, var_x, "variance", details)


def check_thm2(spec: LinearDgpSpec, v, n_x: int, n_y: int) -> CheckOutcome:
    MX, MY = shared_blocks(spec, n_x, n_y)
    return thm2_blocks(MX, MY, v)


def contraction_factor(a: float, b: float) -> float:
    """Ratio of joint to X-only variance along a common eigenvector: a / (a + b)."""
    if not (a > 0 and b > 0):
        raise InvalidInput("contraction factor needs positive a and b")
    return a / (a + b)


def common_eigenvector_spec(a, b, seed: int = 0, sigma: float = 1.0, d_x: int = 1, d_y: int = 1,
                            basis: Optional[np.ndarray] = None) -> LinearDgpSpec:
    """One-slot spec with ``M_X = Q diag(a) Q^T`` and ``M_Y = Q diag(b) Q^T``.

    Shared and specific blocks occupy disjoint rows, so the profile and
    block conventions coincide exactly.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    d_c = a.size
    if b.size != d_c or np.any(a < 0) or np.any(b < 0):
        raise InvalidInput("a and b must be non-negative vectors of equal length")
    rng = stream(seed, 7)
    Q = basis if basis is not None else np.linalg.qr(rng.standard_normal((d_c, d_c)))[0]

    def block(diag, d_s):
        C = np.zeros((d_c + d_s, d_c))
        C[:d_c] = np.sqrt(diag)[:, None] * Q.T
        S = np.zeros((d_c + d_s, d_s))
        S[d_c:] = rng.standard_normal((d_s, d_s)) + 2.0 * np.eye(d_s)
        return C, S

    p = LatentPartition(d_c, d_x, d_y)
    theta = stream(seed, 8).standard_normal(p.d)
    return LinearDgpSpec(p, theta, [block(a, d_x)], [block(b, d_y)], sigma, sigma,
                         meta={"generator": "common_eigenvector", "basis": Q.tolist()})


def check_contraction(a_vec, b_vec, k: int = 0, seed: int = 0) -> CheckOutcome:
    """Realized pinv variance ratio along basis vector ``k`` against a/(a+b)."""
    spec = common_eigenvector_spec(a_vec, b_vec, seed)
    MX, MY = shared_blocks(spec, 1, 1)
    v = np.asarray(spec.meta["basis"])[:, k]
    a, b = float(v @ MX @ v), float(v @ MY @ v)
    ratio = float(v @ linalg.pinv(MX + MY) @ v) / float(v @ linalg.pinv(MX) @ v)
    expected = contraction_factor(a, b)
    err = abs(ratio - expected)
    details = {"a": a, "b": b, "ratio": ratio, "expected": expected}
    return CheckOutcome(PASS if err <= 1e-10 else FAIL, err, details)


def rescue_blocks(MX, MY, v) -> CheckOutcome:
    """Direction unseen by X but seen by Y: X variance infinite, joint finite."""
    MX, MY = linalg.as_sym(MX), linalg.as_sym(MY)
    v = np.asarray(v, dtype=float)
    vx, vy = float(v @ MX @ v), float(v @ MY @ v)
    scale = float(v @ v) * max(1.0, float(np.abs(MX).max()), float(np.abs(MY).max()))
    if abs(vx) > 1e-12 * scale or vy <= 1e-12 * scale:
        return CheckOutcome(UNMET, 0.0, {"vMXv": vx, "vMYv": vy})
    x_ident = bool(np.any(MX)) and linalg.range_contains(MX, v)
    j_ident = linalg.range_contains(MX + MY, v)
    jv = float(v @ linalg.pinv(MX + MY) @ v) if j_ident else math.inf
    details = {"x_identifiable": x_ident, "joint_identifiable": j_ident, "joint_variance": jv}
    ok = (not x_ident) and j_ident and math.isfinite(jv)
    return CheckOutcome(PASS if ok else FAIL, 0.0 if ok else 1.0, details)


def eigenvector_reduction_blocks(MX, MY, k: int = 0) -> CheckOutcome:
    """Eigenvector ``k`` of M_X (positive eigenvalue) with Y information along it."""
    ed = linalg.sym_eig(MX)
    lam, v = float(ed.eigenvalues[k]), ed.eigenvectors[:, k]
    if lam <= 1e-12 * max(1.0, float(ed.eigenvalues[0])) or float(v @ linalg.as_sym(MY) @ v) <= 0:
        return CheckOutcome(UNMET, 0.0, {"eigenvalue": lam})
    MX, MY = linalg.as_sym(MX), linalg.as_sym(MY)
    var_x = float(v @ linalg.pinv(MX) @ v)
    details = {"eigenvalue": lam, "x_variance_vs_inverse_eig": abs(var_x - 1.0 / lam) * lam}
    if details["x_variance_vs_inverse_eig"] > 1e-9:
        return CheckOutcome(FAIL, details["x_variance_vs_inverse_eig"], details)
    if linalg.rank(MX) == MX.shape[0]:
        joint = float(v @ linalg.pinv(MX + MY) @ v)
    else:
        P = linalg.range_projector(MX)
        joint = float(v @ linalg.pinv(P @ (MX + MY) @ P) @ v)
    return _strict_less(joint, var_x, "variance", details)


# --- strict gain witness -------------------------------------------------------------

def thm3_blocks(IX, IY) -> CheckOutcome:
    """Witness ``v`` orthogonal to range(I_X) built from a range(I_Y) vector escaping it."""
    IX, IY = linalg.as_sym(IX), linalg.as_sym(IY)
    UY = linalg.range_basis(IY)
    if not np.any(IX):
        PX = np.zeros_like(IX)
    else:
        PX = linalg.range_projector(IX)
    escaping = [UY[:, k] for k in range(UY.shape[1]) if np.linalg.norm(UY[:, k] - PX @ UY[:, k]) > 1e-9]
    if not escaping:
        return CheckOutcome(UNMET, 0.0, {"reason": "range(I_Y) is contained in range(I_X)"})
    w = escaping[0]
    v = w - PX @ w
    v /= np.linalg.norm(v)
    vx, vy = float(v @ IX @ v), float(v @ IY @ v)
    details = {"witness": v.tolist(), "vIXv": vx, "vIYv": vy}
    if abs(vx) > _margin(vx, vy, float(np.abs(IX).max(initial=0.0))):
        return CheckOutcome(FAIL, abs(vx), details)
    return _strict_less(vx, vy, "information", details)


def check_thm3(spec: LinearDgpSpec, m: Optional[int] = None) -> CheckOutcome:
    """Compare the first ``m`` X samples with the first ``m`` Y samples (default: max slots)."""
    if m is None:
        m = max(len(spec.x_designs), len(spec.y_designs))
    IX, IY = shared_blocks(spec, m, m)
    return thm3_blocks(IX, IY)


# --- Lemmas ----------------------------------------------------------------

def lemma_order_reversal(M, N) -> CheckOutcome:
    """SPD ``M < N`` implies ``N^-1 < M^-1``."""
    pre = linalg.loewner_compare(M, N)
    if pre.relation is not linalg.Relation.STRICTLY_LESS or linalg.rank(M) < np.shape(M)[0]:
        return CheckOutcome(UNMET)
    v = linalg.loewner_compare(linalg.pinv(N), linalg.pinv(M))
    ok = v.relation is linalg.Relation.STRICTLY_LESS
    return CheckOutcome(PASS if ok else FAIL, 0.0 if ok else v.tol - v.min_eig_of_difference,
                        {"min_eig": v.min_eig_of_difference})


def lemma_pinv_monotone(M, N) -> CheckOutcome:
    """PSD M, N with a common kernel K and M < N on K^perp: N^+ < M^+ on K^perp.

    With a nontrivial kernel strict order can only hold on K^perp, so the
    comparison is made in an orthonormal basis of K^perp; on the full space
    the pseudoinverses must still satisfy ``N^+ <= M^+``.
    """
    M, N = linalg.as_sym(M), linalg.as_sym(N)
    UM, UN = linalg.range_basis(M), linalg.range_basis(N)
    if UM.shape[1] != UN.shape[1] or np.linalg.norm(UM @ UM.T - UN @ UN.T) > 1e-8:
        return CheckOutcome(UNMET, 0.0, {"reason": "kernels differ"})
    U = UM
    pre = linalg.loewner_compare(U.T @ M @ U, U.T @ N @ U)
    if pre.relation is not linalg.Relation.STRICTLY_LESS:
        return CheckOutcome(UNMET, 0.0, {"reason": "M < N fails on the range"})
    Mp, Np = linalg.pinv(M), linalg.pinv(N)
    on_range = linalg.loewner_compare(U.T @ Np @ U, U.T @ Mp @ U)
    full = linalg.loewner_compare(Np, Mp)
    ok = on_range.relation is linalg.Relation.STRICTLY_LESS and full.relation in (
        linalg.Relation.STRICTLY_LESS, linalg.Relation.LESS_OR_EQUAL)
    return CheckOutcome(PASS if ok else FAIL, 0.0 if ok else on_range.tol - on_range.min_eig_of_difference,
                        {"range_min_eig": on_range.min_eig_of_difference, "full_relation": full.relation.value})


def lemma_directional(M, N, v) -> CheckOutcome:
    """Both clauses of directional order reversal for SPD ``M <= N`` with ``v^T M v < v^T N v``."""
    M, N = linalg.as_sym(M), linalg.as_sym(N)
    v = np.asarray(v, dtype=float)
    D = N - M
    if linalg.rank(M) < M.shape[0] or not linalg.is_psd(D) or float(v @ D @ v) <= _margin(v @ N @ v):
        return CheckOutcome(UNMET)
    Mi, Ni = linalg.pinv(M), linalg.pinv(N)
    gap = float(v @ Mi @ v - v @ Ni @ v)
    scale = _margin(v @ Mi @ v)
    cond = float(np.linalg.norm(D @ Mi @ v)) > 1e-9 * max(1.0, float(np.linalg.norm(D))) * float(np.linalg.norm(Mi @ v))
    details = {"gap": gap, "strict_condition": cond}
    if gap < -scale:
        return CheckOutcome(FAIL, -gap, details)
    if cond and gap <= scale:
        return CheckOutcome(FAIL, scale - gap, details)
    # clause 2: u = M^{1/2} z for the top eigenvector z of C = M^{-1/2} D M^{-1/2}
    ed = linalg.sym_eig(M)
    Mh = (ed.eigenvectors * np.sqrt(ed.eigenvalues)) @ ed.eigenvectors.T
    Mhi = (ed.eigenvectors / np.sqrt(ed.eigenvalues)) @ ed.eigenvectors.T
    z = linalg.sym_eig(Mhi @ D @ Mhi).eigenvectors[:, 0]
    u = Mh @ z
    ugap = float(u @ Mi @ u - u @ Ni @ u)
    details["witness_gap"] = ugap
    if ugap <= _margin(u @ Mi @ u):
        return CheckOutcome(FAIL, -ugap, details)
    return CheckOutcome(PASS, 0.0, details)


# --- randomized ensembles --------------------------------------------------

def _dims(rng, min_dc: int = 1):
    d_c = int(rng.integers(min_dc, 7))
    d_x = int(rng.integers(0, 4))
    d_y = int(rng.integers(0, 4))
    m = d_c + d_x + int(rng.integers(0, 12 - d_c - d_x + 1))
    n = d_c + d_y + int(rng.integers(0, 12 - d_c - d_y + 1))
    return LatentPartition(d_c, d_x, d_y), m, n


def make_nonorthogonal_spec(partition, m, n, n_slots_x, n_slots_y, seed, c_rank_x=None) -> LinearDgpSpec:
    """I.i.d. standard-normal designs with no orthogonality between blocks."""
    rng = stream(seed, 3)
    p = partition
    rx = p.d_c if c_rank_x is None else c_rank_x

    def c_block(rows, r):
        if r >= p.d_c:
            return rng.standard_normal((rows, p.d_c))
        return rng.standard_normal((rows, r)) @ rng.standard_normal((r, p.d_c))

    xs = [(c_block(m, rx), rng.standard_normal((m, p.d_x))) for _ in range(n_slots_x)]
    ys = [(c_block(n, p.d_c), rng.standard_normal((n, p.d_y))) for _ in range(n_slots_y)]
    return LinearDgpSpec(p, stream(seed, 2).standard_normal(p.d), xs, ys, 1.0, 1.0,
                         meta={"generator": "nonorthogonal", "seed": seed})


def _random_spec(rng, seed, orthogonal=True, min_dc=1, x_rank="any", single_x_slot=False):
    p, m, n = _dims(rng, min_dc)
    sx = 1 if single_x_slot else int(rng.integers(1, 5))
    sy = int(rng.integers(1, 5))
    if x_rank == "full":
        rx = p.d_c
    elif x_rank == "deficient":
        rx = int(rng.integers(1, p.d_c))
    else:
        rx = int(rng.integers(1, p.d_c + 1))
    if orthogonal:
        spec = make_orthogonal_spec(p, m, n, sx, sy, (1.0, 1.0), seed, c_rank_x=rx)
    else:
        spec = make_nonorthogonal_spec(p, m, n, sx, sy, seed, c_rank_x=rx)
    n_x = sx * int(rng.integers(1, 4))
    n_y = sy * int(rng.integers(1, 4))
    return spec, n_x, n_y


def _cfg_thm1(seed, orthogonal):
    rng = stream(seed, 50)
    spec, nx, ny = _random_spec(rng, seed, orthogonal)
    return spec, check_thm1(spec, nx, ny)


def _cfg_thm2_case1(seed, orthogonal):
    rng = stream(seed, 51)
    spec, nx, ny = _random_spec(rng, seed, orthogonal, min_dc=2, x_rank="deficient", single_x_slot=True)
    v = rng.standard_normal(spec.partition.d_c)
    out = check_thm2(spec, v, nx, ny)
    if out.passed and out.details.get("case") != 1:
        return spec, CheckOutcome(UNMET, 0.0, {"reason": "random direction landed in range(M_X)"})
    return spec, out


def _cfg_thm2_case2(seed, orthogonal):
    rng = stream(seed, 52)
    spec, nx, ny = _random_spec(rng, seed, orthogonal)
    MX, _ = shared_blocks(spec, nx, ny)
    v = MX @ rng.standard_normal(spec.partition.d_c)
    return spec, check_thm2(spec, v, nx, ny)


def _cfg_thm3(seed, orthogonal):
    rng = stream(seed, 53)
    spec, _, _ = _random_spec(rng, seed, orthogonal, min_dc=2, x_rank="deficient", single_x_slot=True)
    return spec, check_thm3(spec, 1)


def _cfg_contraction(seed, orthogonal):
    rng = stream(seed, 54)
    d_c = int(rng.integers(1, 7))
    a = 0.1 + rng.exponential(1.0, d_c)
    b = 0.1 + rng.exponential(1.0, d_c)
    k = int(rng.integers(0, d_c))
    spec = common_eigenvector_spec(a, b, seed)
    return spec, check_contraction(a, b, k, seed)


def _cfg_rescue(seed, orthogonal):
    rng = stream(seed, 55)
    spec, nx, ny = _random_spec(rng, seed, orthogonal, min_dc=2, x_rank="deficient", single_x_slot=True)
    MX, MY = shared_blocks(spec, nx, ny)
    K = linalg.kernel_basis(MX)
    v = K @ rng.standard_normal(K.shape[1])
    return spec, rescue_blocks(MX, MY, v)


def _cfg_eigvec(seed, orthogonal):
    rng = stream(seed, 56)
    spec, nx, ny = _random_spec(rng, seed, orthogonal, x_rank="full")
    MX, MY = shared_blocks(spec, nx, ny)
    return spec, eigenvector_reduction_blocks(MX, MY, int(rng.integers(0, spec.partition.d_c)))


def _cfg_lemma1(seed, orthogonal):
    rng = stream(seed, 57)
    d = int(rng.integers(1, 7))
    M = linalg.random_spd(rng, d)
    N = M + linalg.random_spd(rng, d)
    return None, lemma_order_reversal(M, N)


def _cfg_lemma2(seed, orthogonal):
    rng = stream(seed, 58)
    d = int(rng.integers(2, 7))
    r = int(rng.integers(1, d + 1))
    Q = np.linalg.qr(rng.standard_normal((d, d)))[0][:, :r]

    def on_range():
        G = linalg.random_spd(rng, r)
        return Q @ G @ Q.T

    M = on_range()
    N = M + on_range()
    return None, lemma_pinv_monotone(M, N)


def _cfg_directional(seed, orthogonal):
    rng = stream(seed, 59)
    d = int(rng.integers(1, 7))
    M = linalg.random_spd(rng, d)
    D = linalg.random_spd(rng, d, rank=int(rng.integers(1, d + 1)))
    v = rng.standard_normal(d)
    return None, lemma_directional(M, M + D, v)


STATEMENTS: dict = {
    "thm1": _cfg_thm1,
    "thm2_case1": _cfg_thm2_case1,
    "thm2_case2": _cfg_thm2_case2,
    "thm3": _cfg_thm3,
    "cor_variance_contraction": _cfg_contraction,
    "cor_rescue_unidentifiable": _cfg_rescue,
    "cor_eigenvector_reduction": _cfg_eigvec,
    "lemma_order_reversal": _cfg_lemma1,
    "lemma_pinv_monotone": _cfg_lemma2,
    "lemma_directional": _cfg_directional,
}

TOLERANCES = {"strict_margin_relative": MARGIN, "loewner_strict": "1e-10*(1+||B-A||_F)",
              "range_membership": 1e-9, "contraction_abs": 1e-10}


@dataclass
class TheoremReport:
    theorem_id: str
    n_configs_tested: int = 0
    n_passed: int = 0
    n_precondition_unmet: int = 0
    failures: list = field(default_factory=list)
    tolerances: dict = field(default_factory=lambda: dict(TOLERANCES))

    def to_dict(self) -> dict:
        return {"theorem_id": self.theorem_id, "n_configs_tested": self.n_configs_tested,
                "n_passed": self.n_passed, "n_precondition_unmet": self.n_precondition_unmet,
                "failures": self.failures, "tolerances": self.tolerances}


def config_seed(base_seed: int, statement: str, index: int) -> int:
    k = list(STATEMENTS).index(statement)
    return int(np.random.SeedSequence(base_seed, spawn_key=(k, index)).generate_state(1, np.uint32)[0])


def replay(statement: str, seed: int, orthogonal: bool = True) -> CheckOutcome:
    """Re-run one configuration from the seed stored in a failure record."""
    return STATEMENTS[statement](seed, orthogonal)[1]


def run_statement(statement: str, n_configs: int, base_seed: int, orthogonal: bool = True,
                  max_draws_factor: int = 4) -> TheoremReport:
    """Draw configurations until ``n_configs`` satisfy the premises (or the draw cap hits)."""
    gen: Callable = STATEMENTS[statement]
    rep = TheoremReport(statement)
    i = 0
    while rep.n_configs_tested < n_configs and i < max_draws_factor * n_configs:
        seed = config_seed(base_seed, statement, i)
        i += 1
        spec, out = gen(seed, orthogonal)
        if out.status == UNMET:
            rep.n_precondition_unmet += 1
            continue
        rep.n_configs_tested += 1
        if out.passed:
            rep.n_passed += 1
        else:
            rep.failures.append({"seed": seed, "spec_digest": spec.digest() if spec is not None else None,
                                 "violation": float(out.violation)})
    return rep


def run_suite(n_configs: int = 500, base_seed: int = 0, orthogonal: bool = True,
              statements: Optional[list] = None) -> list:
    return [run_statement(s, n_configs, base_seed, orthogonal) for s in (statements or list(STATEMENTS))]


# --- budget sweep ----------------------------------------------------------

@dataclass
class BudgetCurve:
    total_budget: int
    fractions: list
    n_x: list
    n_y: list
    crlb_trace: list  # math.inf where theta_c is not identified
    mc_trace: list  # None when Monte-Carlo was skipped or impossible
    flags: list

    def argmin_fraction(self) -> float:
        vals = [(t, f) for t, f, fl in zip(self.crlb_trace, self.fractions, self.flags) if fl == "ok"]
        if not vals:
            raise InvalidInput("no identifiable allocation on the grid")
        return min(vals)[1]

    def rows(self) -> list:
        return [dict(fraction=f, n_x=a, n_y=b, crlb_trace=t, mc_trace=m, flag=fl) for f, a, b, t, m, fl in
                zip(self.fractions, self.n_x, self.n_y, self.crlb_trace, self.mc_trace, self.flags)]


def budget_sweep(spec: LinearDgpSpec, n_total: int, grid, seed: int = 0, trials: int = 0) -> BudgetCurve:
    """Trace of the profile CRLB on theta_c for each Y-fraction of a fixed budget.

    Fraction ``f`` gives ``n_y = round(f * n_total)`` Y samples and the rest
    to X. Information is noise-scaled so modalities with different noise
    levels compare honestly.
    """
    if n_total < 2:
        raise InvalidInput("total budget must be at least 2")
    grid = [float(f) for f in grid]
    if not grid or any(not 0.0 <= f <= 1.0 for f in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
        raise InvalidInput("grid must be a non-empty strictly increasing list in [0, 1]")
    curve = BudgetCurve(n_total, grid, [], [], [], [], [])
    for k, f in enumerate(grid):
        ny = int(round(f * n_total))
        nx = n_total - ny
        if (nx and not spec.x_designs) or (ny and not spec.y_designs):
            raise InvalidInput("spec lacks design slots for a requested modality")
        fisher = fisher_from_counts(spec, spec.slot_counts("X", nx), spec.slot_counts("Y", ny), noise_scaled=True)
        prof = schur_profile(fisher)
        ident = linalg.rank(prof) == spec.partition.d_c
        trace = float(np.trace(crlb_common(fisher, profile=True))) if ident else math.inf
        mc = None
        if trials and ident:
            mc = float(np.trace(monte_carlo_cov(spec, fisher.mode, nx, ny, trials, seed * 1000 + k).cov))
        curve.n_x.append(nx)
        curve.n_y.append(ny)
        curve.crlb_trace.append(trace)
        curve.mc_trace.append(mc)
        curve.flags.append("ok" if ident else "unidentifiable")
    return curve
