"""Sparsity models: the convex body K, its gauge norm and dual norm.

A vector ``x`` is (K, s)-sparse when ``norm_x(K, x) <= sqrt(s) * ||x||_2``.
Four concrete bodies are supported:

* :class:`CanonicalL1` -- the unit l1 ball of C^N;
* :class:`AtomicPolytope` -- the absolute convex hull of M atoms in B_2^N;
* :class:`SchattenBall` -- the unit ball of the Schatten-q class on n x n
  matrices, 1 <= q <= 2;
* :class:`TensorHull` -- the absolute convex hull of rank-1 tensors
  ``y_1 (x) ... (x) y_d`` with unit factors in C^n (projective tensor ball).

Signals are flat complex vectors; matrices and tensors are flattened in C order.
Exact projective/injective tensor norms are intractable for ``d >= 3``, so the
tensor model reports :class:`NormBounds` instead of a single value.
"""

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy.optimize import linprog

from ._validation import as_signal, check_interval, check_positive_int, check_random_state

__all__ = [
    "CanonicalL1",
    "AtomicPolytope",
    "SchattenBall",
    "TensorHull",
    "NormBounds",
    "SparseSample",
    "SamplingError",
    "conjugate_exponent",
    "schatten_norm",
    "norm_x",
    "dual_norm",
    "is_sparse",
    "sample_sparse",
    "model_to_dict",
    "model_from_dict",
    "parse_model",
]

# Dense LP size limit for the polytope gauge.
POLYTOPE_LP_LIMIT = 10**6


class SamplingError(RuntimeError):
    """Raised when the K_s rejection sampler runs out of retries."""


class NormBounds(NamedTuple):
    lower: float
    upper: float

    @property
    def exact(self):
        return np.isclose(self.lower, self.upper, rtol=1e-12, atol=0.0)


class SparseSample(NamedTuple):
    vector: np.ndarray
    certificate: float


@dataclass(frozen=True)
class CanonicalL1:
    N: int

    def __post_init__(self):
        check_positive_int(self.N, "N")

    @property
    def size(self):
        return self.N

    @property
    def effective_dim(self):
        return self.N


@dataclass(frozen=True, eq=False)
class AtomicPolytope:
    """Absolute convex hull of the rows of ``atoms`` (shape (M, N))."""

    atoms: np.ndarray = field(repr=False)

    def __post_init__(self):
        atoms = np.atleast_2d(np.asarray(self.atoms, dtype=np.complex128))
        if atoms.ndim != 2 or atoms.shape[0] == 0:
            raise ValueError("atoms must be a non-empty (M, N) array")
        norms = np.linalg.norm(atoms, axis=1)
        if np.any(norms > 1 + 1e-9):
            raise ValueError("atoms must lie in the unit l2 ball")
        atoms.setflags(write=False)
        object.__setattr__(self, "atoms", atoms)

    @property
    def M(self):
        return self.atoms.shape[0]

    @property
    def size(self):
        return self.atoms.shape[1]

    @property
    def effective_dim(self):
        return self.M

    def __repr__(self):
        return f"AtomicPolytope(M={self.M}, N={self.size})"


@dataclass(frozen=True)
class SchattenBall:
    n: int
    q: float = 1.0

    def __post_init__(self):
        check_positive_int(self.n, "n")
        check_interval(self.q, "q", 1.0, 2.0)

    @property
    def size(self):
        return self.n * self.n

    @property
    def effective_dim(self):
        return self.n

    @property
    def q_dual(self):
        return conjugate_exponent(self.q)


@dataclass(frozen=True)
class TensorHull:
    n: int
    d: int

    def __post_init__(self):
        check_positive_int(self.n, "n")
        check_positive_int(self.d, "d")

    @property
    def size(self):
        return self.n**self.d

    @property
    def effective_dim(self):
        return self.size

    @property
    def shape(self):
        return (self.n,) * self.d


def conjugate_exponent(q):
    """Hoelder conjugate q' with 1/q + 1/q' = 1 (inf for q = 1)."""
    q = float(q)
    if q == 1.0:
        return np.inf
    if q == np.inf:
        return 1.0
    return q / (q - 1.0)


def schatten_norm(matrix, q):
    sv = np.linalg.svd(np.asarray(matrix), compute_uv=False)
    if np.isinf(q):
        return float(sv.max(initial=0.0))
    return float(np.sum(sv**q) ** (1.0 / q))


def _polytope_gauge(atoms, x):
    M, N = atoms.shape
    if M * N > POLYTOPE_LP_LIMIT:
        raise ValueError(f"polytope LP too large: M*N = {M * N} > {POLYTOPE_LP_LIMIT}")
    if not np.any(x):
        return 0.0
    scale = np.max(np.abs(x))
    x = x / scale
    if np.all(atoms.imag == 0) and np.all(x.imag == 0):
        A = atoms.real.T
        res = linprog(
            np.ones(2 * M),
            A_eq=np.hstack([A, -A]),
            b_eq=x.real,
            bounds=(0, None),
            method="highs",
        )
        if res.status == 2:
            return np.inf
        if res.status != 0:
            raise RuntimeError(f"polytope LP failed: {res.message}")
        return float(res.fun) * scale
    # complex coefficients: second-order cone program
    import cvxpy as cp

    c = cp.Variable(M, complex=True)
    prob = cp.Problem(cp.Minimize(cp.norm1(c)), [atoms.T @ c == x])
    prob.solve()
    if prob.status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
        return np.inf
    if prob.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
        raise RuntimeError(f"polytope SOCP failed: {prob.status}")
    return float(prob.value) * scale


def _tensor_norm_bounds(model, x):
    from .nets import greedy_rank_one_deflation

    nrm2 = float(np.linalg.norm(x))
    if model.d == 1 or nrm2 == 0.0:
        return NormBounds(nrm2, nrm2)
    T = x.reshape(model.shape)
    if model.d == 2:
        v = schatten_norm(T, 1)
        return NormBounds(v, v)
    # every matricization of a rank-1 tensor is rank-1 with equal norm,
    # so nuclear norms of unfoldings bound the projective norm from below
    lower = nrm2
    for axis in range(model.d):
        unfolding = np.moveaxis(T, axis, 0).reshape(model.n, -1)
        lower = max(lower, schatten_norm(unfolding, 1))
    coeffs, residual = greedy_rank_one_deflation(T)
    upper = min(
        float(np.sum(np.abs(coeffs)) + np.sum(np.abs(residual))),
        float(np.sum(np.abs(x))),
    )
    return NormBounds(min(lower, upper), upper)


def norm_x(model, x):
    """Gauge (Minkowski functional) of ``x`` with respect to ``model``.

    Returns a float, or :class:`NormBounds` for :class:`TensorHull`.  For a
    polytope, ``x`` outside the span of the atoms has norm ``inf``.
    """
    x = as_signal(x, model.size)
    if isinstance(model, CanonicalL1):
        return float(np.sum(np.abs(x)))
    if isinstance(model, SchattenBall):
        return schatten_norm(x.reshape(model.n, model.n), model.q)
    if isinstance(model, AtomicPolytope):
        return _polytope_gauge(model.atoms, x)
    if isinstance(model, TensorHull):
        return _tensor_norm_bounds(model, x)
    raise TypeError(f"unknown sparsity model {model!r}")


def _tensor_dual_bounds(model, eta, atoms=None, restarts=10, rng=0):
    from .nets import best_rank_one, default_tensor_atoms, net_dual_norm

    nrm2 = float(np.linalg.norm(eta))
    if model.d == 1 or nrm2 == 0.0:
        return NormBounds(nrm2, nrm2)
    T = eta.reshape(model.shape)
    if model.d == 2:
        v = schatten_norm(T, np.inf)
        return NormBounds(v, v)
    lower, _ = best_rank_one(T, restarts=restarts, rng=rng)
    upper = nrm2
    if atoms is None:
        atoms = default_tensor_atoms(model.n, model.d)
    if atoms is not None:
        if not np.any(eta.imag):
            net_bound = net_dual_norm(eta.real, atoms).value
        else:
            # unit complex factor a + ib splits into two real ones with
            # coefficient mass ||a|| + ||b|| <= sqrt(2) per factor
            net_bound = 2 ** (model.d / 2) * (
                net_dual_norm(eta.real, atoms).value + net_dual_norm(eta.imag, atoms).value
            )
        upper = min(upper, net_bound)
    return NormBounds(min(lower, upper), upper)


def dual_norm(model, eta, **tensor_kwargs):
    """Dual norm ``sup_{x in K} |<x, eta>|``.

    Exact for the l1, polytope and Schatten models.  For :class:`TensorHull`
    returns :class:`NormBounds`: the lower bound comes from alternating rank-1
    maximization, the upper bound from ``e`` times the maximum over a product
    net (or ``||eta||_2`` when no admissible net is available).
    ``tensor_kwargs`` (``atoms``, ``restarts``, ``rng``) are forwarded to the
    tensor branch.
    """
    eta = as_signal(eta, model.size, name="eta")
    if isinstance(model, CanonicalL1):
        return float(np.max(np.abs(eta)))
    if isinstance(model, AtomicPolytope):
        return float(np.max(np.abs(model.atoms.conj() @ eta)))
    if isinstance(model, SchattenBall):
        return schatten_norm(eta.reshape(model.n, model.n), model.q_dual)
    if isinstance(model, TensorHull):
        return _tensor_dual_bounds(model, eta, **tensor_kwargs)
    raise TypeError(f"unknown sparsity model {model!r}")


def is_sparse(model, x, s):
    """Whether ``x`` is (K, s)-sparse.

    Returns ``True``/``False``; for :class:`TensorHull` the answer is ``None``
    when the norm bounds straddle the threshold.  The zero vector is sparse at
    every level.
    """
    s = check_interval(s, "s", 0.0, low_open=True)
    x = as_signal(x, model.size)
    level = np.sqrt(s) * np.linalg.norm(x)
    value = norm_x(model, x)
    tol = 1e-9 * max(level, 1.0)
    if isinstance(value, NormBounds):
        if value.upper <= level + tol:
            return True
        if value.lower > level + tol:
            return False
        return None
    return bool(value <= level + tol)


def _complex_normal(rng, size):
    return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / np.sqrt(2)


def _random_unit(rng, n, real=False):
    v = rng.standard_normal(n) if real else _complex_normal(rng, n)
    return v / np.linalg.norm(v)


def sample_sparse(model, s, rng=None, n_atoms=None, real=False, max_tries=1000):
    """Draw a unit vector in K_s together with its membership certificate.

    ``n_atoms`` atoms of the model are combined with random coefficients
    (default ``floor(s)``).  The certificate is the coefficient l1 mass over
    the l2 norm of the combination, which upper-bounds ``norm_x`` of the
    normalized vector; draws with certificate above ``sqrt(s)`` are rejected.
    """
    rng = check_random_state(rng)
    s = check_interval(s, "s", 1.0, model.effective_dim)
    k = int(np.floor(s)) if n_atoms is None else check_positive_int(n_atoms, "n_atoms")
    bound = np.sqrt(s) * (1 + 1e-12)

    def coefficients(size):
        return rng.standard_normal(size) if real else _complex_normal(rng, size)

    for _ in range(max_tries):
        if isinstance(model, CanonicalL1):
            k_eff = min(k, model.N)
            support = rng.choice(model.N, size=k_eff, replace=False)
            c = coefficients(k_eff)
            vec = np.zeros(model.N, dtype=np.complex128)
            vec[support] = c
        elif isinstance(model, AtomicPolytope):
            idx = rng.choice(model.M, size=min(k, model.M), replace=False)
            c = coefficients(idx.size)
            vec = c @ model.atoms[idx]
        elif isinstance(model, SchattenBall):
            r = min(k, model.n)
            if real:
                U = np.linalg.qr(rng.standard_normal((model.n, r)))[0]
                V = np.linalg.qr(rng.standard_normal((model.n, r)))[0]
            else:
                U = np.linalg.qr(_complex_normal(rng, (model.n, r)))[0]
                V = np.linalg.qr(_complex_normal(rng, (model.n, r)))[0]
            c = np.abs(rng.standard_normal(r)) + 1e-3
            vec = ((U * c) @ V.conj().T).reshape(-1)
        elif isinstance(model, TensorHull):
            from .nets import rank_one_tensor

            c = coefficients(k)
            vec = np.zeros(model.size, dtype=np.complex128)
            for coef in c:
                factors = [_random_unit(rng, model.n, real) for _ in range(model.d)]
                vec += coef * rank_one_tensor(factors).reshape(-1)
        else:
            raise TypeError(f"unknown sparsity model {model!r}")
        nrm = np.linalg.norm(vec)
        if nrm == 0.0:
            continue
        certificate = float(np.sum(np.abs(c)) / nrm)
        if certificate <= bound:
            return SparseSample(vec / nrm, min(certificate, np.sqrt(s)))
    raise SamplingError(
        f"no draw with certificate <= sqrt({s}) after {max_tries} tries; "
        f"s may be too small for {k} atoms"
    )


def model_to_dict(model):
    """JSON-ready description of a sparsity model."""
    if isinstance(model, CanonicalL1):
        return {"type": "l1", "N": model.N}
    if isinstance(model, SchattenBall):
        return {"type": "schatten", "n": model.n, "q": model.q}
    if isinstance(model, TensorHull):
        return {"type": "tensor", "n": model.n, "d": model.d}
    if isinstance(model, AtomicPolytope):
        a = model.atoms
        return {"type": "polytope", "atoms": np.stack([a.real, a.imag], axis=-1).tolist()}
    raise TypeError(f"unknown sparsity model {model!r}")


def model_from_dict(data):
    kind = data["type"]
    if kind == "l1":
        return CanonicalL1(int(data["N"]))
    if kind == "schatten":
        return SchattenBall(int(data["n"]), float(data.get("q", 1.0)))
    if kind == "tensor":
        return TensorHull(int(data["n"]), int(data["d"]))
    if kind == "polytope":
        a = np.asarray(data["atoms"], dtype=float)
        if a.ndim == 3:
            a = a[..., 0] + 1j * a[..., 1]
        return AtomicPolytope(a)
    raise ValueError(f"unknown sparsity model type {kind!r}")


def parse_model(spec):
    """Model from a dict, a model instance or shorthand.

    Shorthand: ``l1:N``, ``schatten:n:q`` (q defaults to 1) and ``tensor:n:d``.
    """
    if isinstance(spec, (CanonicalL1, AtomicPolytope, SchattenBall, TensorHull)):
        return spec
    if isinstance(spec, dict):
        return model_from_dict(spec)
    name, *args = str(spec).split(":")
    try:
        if name == "l1" and len(args) == 1:
            return CanonicalL1(int(args[0]))
        if name == "schatten" and len(args) in (1, 2):
            return SchattenBall(int(args[0]), float(args[1]) if len(args) == 2 else 1.0)
        if name == "tensor" and len(args) == 2:
            return TensorHull(int(args[0]), int(args[1]))
    except ValueError as exc:
        raise ValueError(f"cannot parse model spec {spec!r}: {exc}") from None
    raise ValueError(f"cannot parse model spec {spec!r}")
