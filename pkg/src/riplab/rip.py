"""Estimates of the restricted isometry deviation

    delta_hat = sup_{x in K_s} | ||A x||^2 - <x, Phi x> |.

Exact values are available only for the canonical model over exactly s-sparse
vectors (enumeration of supports).  Everything else is a lower bound from
sampling (:func:`monte_carlo_rip`) or from projected ascent started at the
same samples (:func:`ascent_rip`).
"""

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._validation import as_batch, check_positive_int, check_random_state
from .measurement import MeasurementOperator
from .nets import best_rank_one, greedy_rank_one_deflation, rank_one_tensor
from .sparsity import (
    AtomicPolytope,
    CanonicalL1,
    SchattenBall,
    TensorHull,
    sample_sparse,
)

__all__ = [
    "RipEstimate",
    "BudgetExceeded",
    "rip_constant",
    "as_matrix",
    "exact_canonical_rip",
    "monte_carlo_rip",
    "ascent_rip",
]

EXACT_BUDGET = 10**9


class BudgetExceeded(ValueError):
    """Exact enumeration would exceed the combinatorial budget."""


@dataclass
class RipEstimate:
    delta: float
    kind: str
    method: str
    samples: int = 0
    restarts: int = 0
    seed: object = None
    witness: Optional[np.ndarray] = field(default=None, repr=False)
    history: Optional[np.ndarray] = field(default=None, repr=False)
    degenerate: bool = False

    @property
    def rip_constant(self):
        return rip_constant(self.delta)

    def to_dict(self):
        return {
            "delta": self.delta,
            "rip_constant": self.rip_constant,
            "kind": self.kind,
            "method": self.method,
            "samples": self.samples,
            "restarts": self.restarts,
            "seed": self.seed,
            "degenerate": self.degenerate,
        }


def rip_constant(deviation):
    """Smallest delta with max(delta, delta^2) >= deviation."""
    deviation = float(deviation)
    return deviation if deviation <= 1.0 else math.sqrt(deviation)


def as_matrix(A):
    """Dense matrix of a :class:`MeasurementOperator` or array-like operator."""
    if isinstance(A, MeasurementOperator):
        return A.to_dense()
    A = np.asarray(A)
    if A.ndim != 2:
        raise ValueError("operator must be a 2-D matrix")
    return A


def _seed_of(rng):
    return rng if isinstance(rng, (int, np.integer)) else None


def exact_canonical_rip(A, s, budget=EXACT_BUDGET, chunk=65536):
    """max over |S| = s of ||A_S^* A_S - I||, by enumerating supports.

    This is the exact supremum over exactly s-sparse unit vectors, a subset of
    K_s for the l1 model (equality of the two at s = 1).
    """
    A = as_matrix(A)
    N = A.shape[1]
    s = check_positive_int(s, "s")
    if s > N:
        raise ValueError(f"s={s} exceeds N={N}")
    work = math.comb(N, s) * s**3
    if work > budget:
        raise BudgetExceeded(f"C({N},{s}) * s^3 = {work} exceeds budget {budget}")
    G = A.conj().T @ A
    best, witness = -1.0, None
    combos = itertools.combinations(range(N), s)
    while True:
        idx = np.fromiter(itertools.chain.from_iterable(itertools.islice(combos, chunk)),
                          dtype=np.intp)
        if idx.size == 0:
            break
        idx = idx.reshape(-1, s)
        sub = G[idx[:, :, None], idx[:, None, :]]
        ev = np.linalg.eigvalsh(sub)
        dev = np.maximum(np.abs(ev[:, 0] - 1.0), np.abs(ev[:, -1] - 1.0))
        i = int(np.argmax(dev))
        if dev[i] > best:
            best = float(dev[i])
            w, V = np.linalg.eigh(sub[i])
            col = 0 if abs(w[0] - 1.0) >= abs(w[-1] - 1.0) else -1
            witness = np.zeros(N, dtype=np.complex128)
            witness[idx[i]] = V[:, col]
    return RipEstimate(best, "exact", "enumeration", witness=witness)


def _reference_energy(X, phi):
    if phi is None:
        return np.sum(np.abs(X) ** 2, axis=1)
    return np.real(np.einsum("ij,ij->i", X.conj(), X @ np.asarray(phi).T))


def _draw_starts(model, s, count, rng, sampler_kwargs):
    return np.array([
        sample_sparse(model, s, rng, **sampler_kwargs).vector for _ in range(count)
    ]).reshape(count, model.size)


def monte_carlo_rip(A, model, s, trials, rng=None, phi=None, **sampler_kwargs):
    """Largest |‖Ax‖² - <x, Phi x>| over ``trials`` random draws from K_s (a lower bound)."""
    trials = check_positive_int(trials, "trials")
    seed = _seed_of(rng)
    rng = check_random_state(rng)
    X = _draw_starts(model, s, trials, rng, sampler_kwargs)
    if isinstance(A, MeasurementOperator):
        energy = A.energy(X)
    else:
        Y = as_batch(X, model.size) @ np.asarray(A).T
        energy = np.sum(np.abs(Y) ** 2, axis=1)
    values = np.abs(energy - _reference_energy(X, phi))
    i = int(np.argmax(values))
    return RipEstimate(
        float(values[i]), "lower_bound", "monte_carlo",
        samples=trials, seed=seed, witness=X[i], history=np.maximum.accumulate(values),
    )


def _project(model, x, s):
    """Map ``x`` to a unit vector of K_s near it, or ``None`` if no cheap projection works."""
    k = max(int(np.floor(s)), 1)
    if isinstance(model, CanonicalL1):
        y = np.zeros_like(x)
        keep = np.argpartition(np.abs(x), -k)[-k:]
        y[keep] = x[keep]
    elif isinstance(model, SchattenBall):
        U, sv, Vh = np.linalg.svd(x.reshape(model.n, model.n))
        y = ((U[:, :k] * sv[:k]) @ Vh[:k]).reshape(-1)
    elif isinstance(model, TensorHull):
        T = x.reshape(model.shape)
        if k > 1:
            coeffs, residual = greedy_rank_one_deflation(T, max_terms=k, rtol=0.0)
            y = (T - residual).reshape(-1)
            ny = np.linalg.norm(y)
            if ny > 0 and np.sum(np.abs(coeffs)) <= np.sqrt(s) * ny:
                return y / ny
        value, factors = best_rank_one(T, restarts=0)
        y = rank_one_tensor(factors).reshape(-1)
    elif isinstance(model, AtomicPolytope):
        scores = np.abs(model.atoms.conj() @ x)
        sel = np.argpartition(scores, -min(k, model.M))[-min(k, model.M):]
        B = model.atoms[sel].T
        c = np.linalg.lstsq(B, x, rcond=None)[0]
        y = B @ c
        ny = np.linalg.norm(y)
        if ny == 0 or np.sum(np.abs(c)) > np.sqrt(s) * ny * (1 + 1e-12):
            return None
        return y / ny
    else:
        raise TypeError(f"unknown sparsity model {model!r}")
    ny = np.linalg.norm(y)
    return None if ny == 0 else y / ny


def ascent_rip(A, model, s, restarts, steps=50, rng=None, phi=None, **sampler_kwargs):
    """Projected gradient ascent on |x^*(A^*A - Phi)x| from ``restarts`` K_s samples.

    Starting points are drawn exactly as :func:`monte_carlo_rip` draws its
    samples, and steps are only accepted when they improve the objective, so
    with the same seed and ``restarts == trials`` the result is never below
    the Monte Carlo value.  Both signs of the deviation are climbed.
    """
    seed = _seed_of(rng)
    if restarts == 0:
        return RipEstimate(0.0, "lower_bound", "ascent", seed=seed, degenerate=True)
    restarts = check_positive_int(restarts, "restarts")
    rng = check_random_state(rng)
    X0 = _draw_starts(model, s, restarts, rng, sampler_kwargs)
    M = as_matrix(A)
    D = M.conj().T @ M
    D = D - (np.eye(D.shape[0]) if phi is None else np.asarray(phi))
    step0 = 1.0 / max(np.linalg.norm(M, 2) ** 2, 1e-300)

    def objective(x):
        return float(np.real(np.vdot(x, D @ x)))

    best, witness = -1.0, None
    for x0 in X0:
        start = abs(objective(x0))
        if start > best:
            best, witness = start, x0
        for sign in (1.0, -1.0):
            x, h = x0, sign * objective(x0)
            for _ in range(steps):
                grad = 2.0 * sign * (D @ x)
                t, moved = step0, False
                for _ in range(40):
                    cand = _project(model, x + t * grad, s)
                    if cand is not None:
                        hc = sign * objective(cand)
                        if hc > h + 1e-15:
                            x, h, moved = cand, hc, True
                            break
                    t *= 0.5
                if not moved:
                    break
            if abs(h) > best:
                best, witness = abs(h), x
    return RipEstimate(best, "lower_bound", "ascent", samples=restarts * steps,
                       restarts=restarts, seed=seed, witness=witness)
