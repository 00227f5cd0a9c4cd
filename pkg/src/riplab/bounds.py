"""Closed-form complexity constants and sufficient sample sizes.

Every absolute constant (``c``, ``C``) defaults to 1 and can be overridden;
results echo the constants they used.  Sample-size predictions whose right-hand
side depends on ``m`` through logarithms are solved by the monotone fixed-point
iteration ``m <- ceil(rhs(m))`` started at ``m = 1``, which converges to the
smallest integer solution whenever ``rhs`` is nondecreasing.
"""

import math
from dataclasses import dataclass, field

from ._validation import check_interval, check_positive_int
from .sparsity import AtomicPolytope, CanonicalL1, SchattenBall, TensorHull, conjugate_exponent

__all__ = [
    "BoundParams",
    "Prediction",
    "Unsatisfiable",
    "exponent_e",
    "maurey_bound",
    "e21_bound",
    "type_p_constant",
    "complexity_constant",
    "solve_fixed_point",
    "sample_conditions",
    "predict_m",
    "polytope_m",
    "dual_type_m",
    "gaussian_dual_norm_bound",
    "gordon_gaussian_m",
    "tensor_m",
]

M_MAX = 2**63


class Unsatisfiable(ValueError):
    """No m <= 2**63 satisfies the sample-size condition at these constants."""


def exponent_e(p):
    """Log exponent: 1 for 1 <= p < 2 and 3 for p = 2."""
    p = check_interval(p, "p", 1.0, 2.0)
    return 3 if p == 2.0 else 1


def maurey_bound(N, m, l, norm_v, c=1.0):
    """Entropy-number bound e_l(v) <= c ||v|| sqrt((1+ln(N/l))(1+ln m)) / sqrt(l) for v: l_1^N -> l_inf^m(H)."""
    N, m, l = (check_positive_int(v, name) for v, name in ((N, "N"), (m, "m"), (l, "l")))
    return c * norm_v * math.sqrt((1 + math.log(N / l)) * (1 + math.log(m))) / math.sqrt(l)


def e21_bound(N, m, block_dim, norm_v, C=1.0):
    """Dudley-sum bound C sqrt((1+ln N)(1+ln m)) (1 + ln m + ln b) ||v||."""
    N, m, b = (check_positive_int(v, name) for v, name in ((N, "N"), (m, "m"), (block_dim, "block_dim")))
    return C * math.sqrt((1 + math.log(N)) * (1 + math.log(m))) * (1 + math.log(m) + math.log(b)) * norm_v


def type_p_constant(p, C=1.0, c=1.0):
    """c(p) = c (1/2 - 1/p')^{-1} C^{p'} for 1 < p < 2."""
    p = check_interval(p, "p", 1.0, 2.0, low_open=True, high_open=True)
    pd = conjugate_exponent(p)
    return c * C**pd / (0.5 - 1.0 / pd)


@dataclass
class BoundParams:
    s: float = 1.0
    delta: float = 0.5
    zeta: float = 0.1
    block_dim: int = 1
    p: float = 2.0
    type_constant: float = None
    c: float = 1.0
    C: float = 1.0

    def __post_init__(self):
        check_interval(self.s, "s", 1.0)
        check_interval(self.delta, "delta", 0.0, low_open=True)
        check_interval(self.zeta, "zeta", 0.0, 1.0, low_open=True, high_open=True)
        check_interval(self.p, "p", 1.0, 2.0, low_open=True)
        check_positive_int(self.block_dim, "block_dim")


def complexity_constant(model, p=2.0, block_dim=1, m=1, C=1.0, type_constant=None):
    """Entropy-type complexity M_{p,alpha}(K) of a sparsity model.

    * l1 ball: ``C sqrt(1+ln N) (1+ln b)``;
    * polytope with M atoms: ``C sqrt(1+ln M) (1+ln b)``;
    * tensor hull: polytope bound with ``ln M <= 3nd(1+ln d)``;
    * Schatten-q (square-function incoherence): ``C (1+ln b)^{3/2} q'^{3/2}``
      for q > 1 and ``(1+ln b)^{3/2} (1+ln n)^{3/2}`` for q = 1;
    * any model with ``type_constant`` T = T_p(X^*) given: ``C T^3 (1+ln m)^{3/2}``
      at p = 2 and ``c(p) T^{p'+1} m^{2/p-1} (1+ln m)^{1/2}`` for p < 2.
    """
    p = check_interval(p, "p", 1.0, 2.0, low_open=True)
    b = check_positive_int(block_dim, "block_dim")
    m = check_positive_int(m, "m")
    if type_constant is not None:
        T = float(type_constant)
        if p == 2.0:
            return C * T**3 * (1 + math.log(m)) ** 1.5
        pd = conjugate_exponent(p)
        return type_p_constant(p, C=C) * T ** (pd + 1) * m ** (2 / p - 1) * math.sqrt(1 + math.log(m))
    if p != 2.0:
        raise ValueError(f"no p < 2 complexity bound for {type(model).__name__} without a type constant")
    if isinstance(model, CanonicalL1):
        return C * math.sqrt(1 + math.log(model.N)) * (1 + math.log(b))
    if isinstance(model, AtomicPolytope):
        return C * math.sqrt(1 + math.log(model.M)) * (1 + math.log(b))
    if isinstance(model, TensorHull):
        log_m = 3 * model.n * model.d * (1 + math.log(model.d))
        return C * math.sqrt(1 + log_m) * (1 + math.log(b))
    if isinstance(model, SchattenBall):
        if model.q == 1.0:
            return (1 + math.log(b)) ** 1.5 * (1 + math.log(model.n)) ** 1.5
        return C * (1 + math.log(b)) ** 1.5 * conjugate_exponent(model.q) ** 1.5
    raise TypeError(f"unknown sparsity model {model!r}")


@dataclass
class Prediction:
    m: int
    iterations: int
    formula: str
    constants: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "formula": self.formula,
            "value": self.m,
            "iterations": self.iterations,
            "inputs": self.inputs,
            "constants": self.constants,
        }


def solve_fixed_point(rhs, max_iter=200):
    """Smallest integer m >= 1 with m >= rhs(m), for nondecreasing ``rhs``.

    Returns ``(m, iterations)``.  Falls back to doubling + bisection if the
    plain iteration has not settled after ``max_iter`` steps.
    """
    m = 1
    for it in range(1, max_iter + 1):
        r = rhs(m)
        if not math.isfinite(r) or r > M_MAX:
            raise Unsatisfiable(f"required m exceeds 2**63 (rhs={r:.3g})")
        nxt = max(1, math.ceil(r - 1e-9))
        if nxt <= m:
            return m, it
        m = nxt
    lo, hi = m, m
    while hi < rhs(hi):
        hi *= 2
        if hi > M_MAX:
            raise Unsatisfiable("required m exceeds 2**63")
    while lo < hi:
        mid = (lo + hi) // 2
        if mid >= rhs(mid) - 1e-9:
            hi = mid
        else:
            lo = mid + 1
    return lo, max_iter


def _log_term(m):
    return 1 + math.log(m)


def sample_conditions(m, s, delta, zeta, complexity, alpha, op_norm, p=2.0, c=1.0):
    """Both sample-size inequalities of the general RIP theorem at a given m.

    ``complexity`` may be a number or a callable of m; ``alpha`` and
    ``op_norm`` are the (deterministic) incoherence moments.
    """
    Mc = complexity(m) if callable(complexity) else complexity
    first = m ** (1 / p) / _log_term(m) ** (exponent_e(p) / 2) >= c * Mc * math.sqrt(s) / delta * alpha * (1 - 1e-12)
    second = m >= c * s * math.log(1 / zeta) * op_norm**2 / delta**2 * (1 - 1e-12)
    return first, second


def predict_m(params, model, incoherence, op_norm=None):
    """Smallest m satisfying both general sample-size conditions.

    ``incoherence`` bounds sup_j alpha(v_j) and ``op_norm`` bounds sup_j ||v_j||
    (defaults to ``incoherence``, the operator-norm choice of alpha).
    """
    op_norm = incoherence if op_norm is None else op_norm
    P = params
    e = exponent_e(P.p)

    def complexity(m):
        return complexity_constant(model, P.p, P.block_dim, m, C=P.C, type_constant=P.type_constant)

    def rhs1(m):
        return (P.c * complexity(m) * math.sqrt(P.s) / P.delta * incoherence
                * _log_term(m) ** (e / 2)) ** P.p

    rhs2 = P.c * P.s * math.log(1 / P.zeta) * op_norm**2 / P.delta**2
    m, iterations = solve_fixed_point(lambda m: max(rhs1(m), rhs2))
    return Prediction(
        m, iterations, "general",
        constants={"c": P.c, "C": P.C, "e(p)": e},
        inputs={"s": P.s, "delta": P.delta, "zeta": P.zeta, "p": P.p, "block_dim": P.block_dim,
                "incoherence": incoherence, "op_norm": op_norm, "type_constant": P.type_constant,
                "model": type(model).__name__},
    )


def polytope_m(s, delta, zeta, M, incoherence, block_dim=1, c=1.0):
    """m >= c delta^-2 s max((1+ln m)(1+ln mb)^2 (1+ln M), ln(1/zeta)) ||u||^2."""
    b = check_positive_int(block_dim, "block_dim")

    def rhs(m):
        logs = _log_term(m) * (1 + math.log(m * b)) ** 2 * (1 + math.log(M))
        return c * s * max(logs, math.log(1 / zeta)) * incoherence**2 / delta**2

    m, it = solve_fixed_point(rhs)
    return Prediction(m, it, "polytope", {"c": c},
                      {"s": s, "delta": delta, "zeta": zeta, "M": M,
                       "incoherence": incoherence, "block_dim": b})


def dual_type_m(s, delta, zeta, eta_dual_norm, type_constant, p=2.0, c=1.0, c_p=None):
    """Scalar measurements on a space whose dual has type p.

    m^{1-1/p} / (1+ln m)^{e(p)/2} >= c_p delta^-1 sqrt(s) T^{p'+1} ||eta||_{X*}
    and m >= c delta^-2 s ln(1/zeta) ||eta||_{X*}^2.
    """
    p = check_interval(p, "p", 1.0, 2.0, low_open=True)
    pd = conjugate_exponent(p)
    c_p = (c if p == 2.0 else type_p_constant(p)) if c_p is None else c_p
    e = exponent_e(p)
    base = c_p * math.sqrt(s) / delta * type_constant ** (pd + 1) * eta_dual_norm
    rhs2 = c * s * math.log(1 / zeta) * eta_dual_norm**2 / delta**2

    def rhs(m):
        return max((base * _log_term(m) ** (e / 2)) ** pd, rhs2)

    m, it = solve_fixed_point(rhs)
    return Prediction(m, it, "dual_type", {"c": c, "c_p": c_p},
                      {"s": s, "delta": delta, "zeta": zeta, "p": p,
                       "eta_dual_norm": eta_dual_norm, "type_constant": type_constant})


def gaussian_dual_norm_bound(n, d, zeta):
    """Tail threshold sqrt(2(1 + 3nd(1+ln d) + ln(1/zeta))) for the Gaussian dual norm."""
    n, d = check_positive_int(n, "n"), check_positive_int(d, "d")
    zeta = check_interval(zeta, "zeta", 0.0, 1.0, low_open=True, high_open=True)
    return math.sqrt(2 * (1 + 3 * n * d * (1 + math.log(d)) + math.log(1 / zeta)))


def gordon_gaussian_m(n, d, delta, zeta, c=1.0):
    """Unstructured Gaussian baseline m >= c delta^-2 (nd(1+ln d) + ln(1/zeta))."""
    n, d = check_positive_int(n, "n"), check_positive_int(d, "d")
    value = c * (n * d * (1 + math.log(d)) + math.log(1 / zeta)) / delta**2
    return Prediction(max(1, math.ceil(value - 1e-9)), 0, "gordon", {"c": c},
                      {"n": n, "d": d, "delta": delta, "zeta": zeta})


def tensor_m(n, d, s, delta, zeta, c=1.0):
    """Group-structured rank-1 tensor RIP: m >= c delta^-2 s (1+ln m)^3 (1+3nd(1+ln d)+ln(1/zeta))^2."""
    n, d = check_positive_int(n, "n"), check_positive_int(d, "d")
    zeta = check_interval(zeta, "zeta", 0.0, 1.0, low_open=True, high_open=True)
    tail = (1 + 3 * n * d * (1 + math.log(d)) + math.log(1 / zeta)) ** 2

    def rhs(m):
        return c * s * _log_term(m) ** 3 * tail / delta**2

    m, it = solve_fixed_point(rhs)
    return Prediction(m, it, "tensor", {"c": c},
                      {"n": n, "d": d, "s": s, "delta": delta, "zeta": zeta})
