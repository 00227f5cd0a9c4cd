"""Epsilon-nets on the real unit sphere and the rank-1 tensor machinery built on them.

A greedy farthest-point net of the sphere S^{n-1} with threshold ``eps`` is
both an eps-packing (pairwise distances > eps) and, once validated, an
eps-covering.  Its d-fold product gives a finite family of rank-1 tensors
whose absolute convex hull, expanded by ``e``, contains the projective tensor
ball when ``1/(d+1) < 3 eps <= 1/d``.  Net geometry is real; complex tensors
are handled by the callers through their real and imaginary parts.
"""

import functools
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from ._validation import check_interval, check_positive_int, check_random_state

__all__ = [
    "SphereNet",
    "TensorAtomSet",
    "NetBound",
    "Rounding",
    "TailResult",
    "rank_one_tensor",
    "best_rank_one",
    "greedy_rank_one_deflation",
    "sphere_net",
    "tensor_atoms",
    "admissible_epsilon",
    "default_tensor_atoms",
    "net_dual_norm",
    "round_to_net",
    "round_rank_one",
    "gaussian_dual_tail_experiment",
    "moment_constants",
]

ENUMERATION_LIMIT = 10**7


# --------------------------------------------------------------------------
# rank-1 tensors


def rank_one_tensor(factors):
    out = np.asarray(factors[0])
    for f in factors[1:]:
        out = np.multiply.outer(out, np.asarray(f))
    return out


def _contract_except(T, factors, skip):
    out = T
    for axis in reversed(range(T.ndim)):
        if axis != skip:
            out = np.tensordot(out, factors[axis].conj(), axes=([axis], [0]))
    return out


def _hopm(T, factors, max_iter, tol):
    value = 0.0
    for _ in range(max_iter):
        for k in range(T.ndim):
            v = _contract_except(T, factors, k)
            nv = np.linalg.norm(v)
            if nv == 0.0:
                return 0.0, factors
            factors[k] = v / nv
        previous, value = value, nv
        if value - previous <= tol * max(value, 1.0):
            break
    return float(value), factors


def best_rank_one(T, restarts=5, rng=None, max_iter=200, tol=1e-13):
    """Alternating (higher-order power) maximization of ``|<y_1 (x) ... (x) y_d, T>|``.

    Starts from the leading singular vectors of each unfolding and from
    ``restarts`` random points; returns ``(value, factors)`` of the best run.
    The value is a lower bound on the injective norm of ``T``.
    """
    T = np.asarray(T)
    rng = check_random_state(rng)
    d = T.ndim
    complex_ = np.iscomplexobj(T)
    starts = []
    hosvd = []
    for axis in range(d):
        unfolding = np.moveaxis(T, axis, 0).reshape(T.shape[axis], -1)
        u = np.linalg.svd(unfolding, full_matrices=False)[0][:, 0]
        hosvd.append(u)
    starts.append(hosvd)
    for _ in range(restarts):
        fs = []
        for n in T.shape:
            v = rng.standard_normal(n) + (1j * rng.standard_normal(n) if complex_ else 0)
            fs.append(v / np.linalg.norm(v))
        starts.append(fs)
    best = (-1.0, None)
    for fs in starts:
        value, fs = _hopm(T, [f.astype(T.dtype if complex_ else float) for f in fs], max_iter, tol)
        if value > best[0]:
            best = (value, fs)
    return best


def greedy_rank_one_deflation(T, max_terms=100, rtol=1e-12, restarts=3, rng=0):
    """Greedily peel rank-1 terms off ``T``.

    Returns ``(coefficients, residual)`` with ``T = sum_i c_i u_i + residual``
    for unit rank-1 tensors ``u_i``.  ``sum |c_i| + ||residual||_1`` is then an
    upper bound on the projective norm of ``T``.
    """
    T = np.array(T, dtype=np.complex128)
    rng = check_random_state(rng)
    scale = np.linalg.norm(T)
    coeffs = []
    for _ in range(max_terms):
        if np.linalg.norm(T) <= rtol * scale:
            break
        _, factors = best_rank_one(T, restarts=restarts, rng=rng)
        u = rank_one_tensor(factors)
        c = np.vdot(u, T)
        if abs(c) == 0.0:
            break
        T = T - c * u
        coeffs.append(c)
    return np.array(coeffs), T


# --------------------------------------------------------------------------
# sphere nets


@dataclass(frozen=True, eq=False)
class SphereNet:
    points: np.ndarray = field(repr=False)
    epsilon: float
    seed: object = None
    covering_radius: float = float("nan")
    validation_samples: int = 0

    @property
    def n(self):
        return self.points.shape[1]

    def __len__(self):
        return self.points.shape[0]

    @property
    def cardinality_bound(self):
        """Volumetric packing bound (1 + 2/eps)^n."""
        return (1.0 + 2.0 / self.epsilon) ** self.n

    def min_separation(self):
        P = self.points
        if len(P) < 2:
            return np.inf
        G = np.linalg.norm(P[:, None, :] - P[None, :, :], axis=-1)
        np.fill_diagonal(G, np.inf)
        return float(G.min())

    def distance_to_net(self, Y, chunk=8192):
        Y = np.atleast_2d(Y)
        out = np.empty(Y.shape[0])
        P = self.points
        for start in range(0, Y.shape[0], chunk):
            block = Y[start:start + chunk]
            # |y - p|^2 = 2 - 2 <y, p> on the sphere, but keep it general
            d2 = (
                np.sum(block**2, axis=1)[:, None]
                - 2 * block @ P.T
                + np.sum(P**2, axis=1)[None, :]
            )
            out[start:start + chunk] = np.sqrt(np.maximum(d2.min(axis=1), 0.0))
        return out

    def to_dict(self):
        return {
            "type": "sphere_net",
            "n": self.n,
            "epsilon": self.epsilon,
            "seed": self.seed,
            "cardinality": len(self),
            "cardinality_bound": self.cardinality_bound,
            "covering_radius": self.covering_radius,
            "validation_samples": self.validation_samples,
            "points": self.points.tolist(),
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            points=np.asarray(data["points"], dtype=float),
            epsilon=float(data["epsilon"]),
            seed=data.get("seed"),
            covering_radius=float(data.get("covering_radius", float("nan"))),
            validation_samples=int(data.get("validation_samples", 0)),
        )


def _sphere_sample(rng, size, n):
    Y = rng.standard_normal((size, n))
    return Y / np.linalg.norm(Y, axis=1, keepdims=True)


def _greedy_extend(points, candidates, eps, max_points):
    """Farthest-point insertion of candidates until all are within eps."""
    if points:
        P = np.array(points)
        dist = np.sqrt(np.maximum(
            np.sum(candidates**2, 1)[:, None] - 2 * candidates @ P.T + np.sum(P**2, 1)[None, :],
            0.0,
        )).min(axis=1)
    else:
        points.append(candidates[0])
        dist = np.linalg.norm(candidates - candidates[0], axis=1)
    while True:
        i = int(np.argmax(dist))
        if dist[i] <= eps:
            return points
        if len(points) >= max_points:
            raise RuntimeError(f"net exceeded {max_points} points before covering")
        p = candidates[i]
        points.append(p)
        dist = np.minimum(dist, np.linalg.norm(candidates - p, axis=1))


def sphere_net(n, epsilon, rng=None, pool_size=None, validation_samples=100_000,
               max_rounds=20, max_points=200_000):
    """Greedy farthest-point eps-net of the real unit sphere in R^n.

    The net is grown over a random pool and then checked against
    ``validation_samples`` fresh sphere points; uncovered points are inserted
    (which keeps the packing property) and validation is repeated until a
    round finds nothing farther than ``epsilon``.
    """
    n = check_positive_int(n, "n")
    epsilon = check_interval(epsilon, "epsilon", 0.0, 1.0, low_open=True, high_open=True)
    seed = rng if isinstance(rng, (int, type(None))) else None
    rng = check_random_state(rng)
    if n == 1:
        return SphereNet(np.array([[1.0], [-1.0]]), epsilon, seed, 0.0, 0)
    if pool_size is None:
        pool_size = int(min(max(20_000, 20 * (1 + 2 / epsilon) ** n), 2_000_000))
    points = _greedy_extend([], _sphere_sample(rng, pool_size, n), epsilon, max_points)
    radius = np.inf
    for _ in range(max_rounds):
        net = SphereNet(np.array(points), epsilon)
        Y = _sphere_sample(rng, validation_samples, n)
        dist = net.distance_to_net(Y)
        radius = float(dist.max())
        if radius <= epsilon:
            return SphereNet(np.array(points), epsilon, seed, radius, validation_samples)
        points = _greedy_extend(points, Y[dist > epsilon], epsilon, max_points)
    raise RuntimeError(
        f"covering not validated after {max_rounds} rounds (last radius {radius:.4g})"
    )


def admissible_epsilon(epsilon, d):
    """Window 1/(d+1) < 3 eps <= 1/d for the product-net expansion bound."""
    return 1.0 / (d + 1) < 3.0 * epsilon <= 1.0 / d + 1e-15


@dataclass(frozen=True, eq=False)
class TensorAtomSet:
    """Implicit product set of rank-1 tensors ``z_1 (x) ... (x) z_d`` with ``z_i`` in the net."""

    base: SphereNet
    d: int
    expansion: float = math.e

    @property
    def n(self):
        return self.base.n

    @property
    def log_cardinality(self):
        return self.d * math.log(len(self.base))

    @property
    def cardinality(self):
        return len(self.base) ** self.d

    @property
    def log_cardinality_bound(self):
        return 3.0 * self.n * self.d * (1.0 + math.log(self.d))


def tensor_atoms(net, d):
    d = check_positive_int(d, "d")
    if not admissible_epsilon(net.epsilon, d):
        raise ValueError(
            f"epsilon={net.epsilon:.6g} outside the admissible window "
            f"1/{d + 1} < 3*eps <= 1/{d}"
        )
    atoms = TensorAtomSet(net, d)
    if atoms.log_cardinality > atoms.log_cardinality_bound:
        raise RuntimeError(
            f"ln M = {atoms.log_cardinality:.4g} exceeds 3nd(1+ln d) = "
            f"{atoms.log_cardinality_bound:.4g}"
        )
    return atoms


@functools.lru_cache(maxsize=16)
def default_tensor_atoms(n, d, seed=0):
    """Cached product net at eps = 1/(3d), or ``None`` if enumeration is too large."""
    if n > 3:
        return None
    net = sphere_net(n, 1.0 / (3 * d), rng=seed, validation_samples=20_000)
    if len(net) ** d > ENUMERATION_LIMIT:
        return None
    return tensor_atoms(net, d)


class NetBound(NamedTuple):
    value: float
    certified: bool
    mode: str


def _net_values(T, P):
    out = T
    for _ in range(T.ndim):
        out = np.tensordot(out, P, axes=([0], [1]))
    return out


def net_dual_norm(xi, atoms, mode="enumerate", restarts=50, rng=None, expand=True):
    """Maximum of ``|<z_1 (x) ... (x) z_d, xi>|`` over the product net, times ``e``.

    ``enumerate`` scans all ``|net|^d`` atoms and certifies an upper bound on
    the projective dual norm; ``alternate`` runs discrete coordinate ascent
    over net factors (non-certified, never above the enumerated value).
    """
    n, d = atoms.n, atoms.d
    T = np.asarray(xi).reshape((n,) * d)
    P = atoms.base.points
    factor = atoms.expansion if expand else 1.0
    if mode == "enumerate":
        if atoms.cardinality > ENUMERATION_LIMIT:
            raise ValueError(f"{atoms.cardinality} atoms exceed enumeration limit")
        return NetBound(factor * float(np.max(np.abs(_net_values(T, P)))), True, mode)
    if mode != "alternate":
        raise ValueError(f"unknown mode {mode!r}")
    rng = check_random_state(rng)
    K = len(P)
    first = np.resize(rng.permutation(K), restarts)
    best = 0.0
    for r in range(restarts):
        idx = [int(first[r])] + [int(i) for i in rng.integers(K, size=d - 1)]
        value = -1.0
        while True:
            previous = value
            for k in range(d):
                fs = [P[i] for i in idx]
                vals = np.abs(P @ _contract_except(T, fs, k))
                idx[k] = int(np.argmax(vals))
                value = float(vals[idx[k]])
            if value <= previous * (1 + 1e-12):
                break
        best = max(best, value)
    return NetBound(factor * best, False, mode)


class Rounding(NamedTuple):
    coefficients: np.ndarray
    indices: np.ndarray
    residual: float

    @property
    def mass(self):
        return float(np.sum(np.abs(self.coefficients)))


def round_to_net(y, net, rtol=1e-13, max_terms=500):
    """Expand ``y`` in net points by repeatedly rounding the normalized residual.

    Each step shrinks the residual by at least the covering radius, so the
    coefficient mass stays below ``||y|| / (1 - eps)``.
    """
    y = np.asarray(y, dtype=float)
    r = y.copy()
    coeffs, idx = [], []
    stop = rtol * max(np.linalg.norm(y), 1e-300)
    for _ in range(max_terms):
        nr = np.linalg.norm(r)
        if nr <= stop:
            break
        j = int(np.argmin(np.linalg.norm(net.points - r / nr, axis=1)))
        coeffs.append(nr)
        idx.append(j)
        r = r - nr * net.points[j]
    return Rounding(np.array(coeffs), np.array(idx, dtype=int), float(np.linalg.norm(r)))


def round_rank_one(factors, net, **kwargs):
    """Round each factor of a rank-1 tensor; returns per-factor roundings and the product mass."""
    roundings = [round_to_net(f, net, **kwargs) for f in factors]
    return roundings, float(np.prod([r.mass for r in roundings]))


class TailResult(NamedTuple):
    threshold: float
    raw_rate: float
    deflated_rate: float
    sigma: float
    draws: int
    values: np.ndarray


def gaussian_dual_tail_experiment(n, d, draws, zeta, rng=None, atoms=None):
    """Empirical exceedance of the Gaussian dual-norm tail threshold.

    Each standard Gaussian ``xi`` in R^{n^d} is scored by the enumerated net
    bound.  ``raw_rate`` uses the bound as is (includes the factor ``e``);
    ``deflated_rate`` divides it out, i.e. counts ``max_net |<z, xi>|``.
    """
    from .bounds import gaussian_dual_norm_bound

    draws = check_positive_int(draws, "draws")
    zeta = check_interval(zeta, "zeta", 0.0, 1.0, low_open=True, high_open=True)
    rng = check_random_state(rng)
    if atoms is None:
        atoms = tensor_atoms(sphere_net(n, 1.0 / (3 * d), rng=rng), d)
    threshold = gaussian_dual_norm_bound(n, d, zeta)
    values = np.array([
        net_dual_norm(rng.standard_normal(n**d), atoms).value for _ in range(draws)
    ])
    raw = float(np.mean(values >= threshold))
    deflated = float(np.mean(values / atoms.expansion >= threshold))
    sigma = math.sqrt(zeta * (1 - zeta) / draws)
    return TailResult(threshold, raw, deflated, sigma, draws, values)


def moment_constants(n, d, r_values, draws, rng=None, atoms=None):
    """Fitted constants ``c_r = (E bound^r)^{1/r} / max(sqrt r, sqrt(3nd(1+ln d)))``.

    A report only; the constant in the moment inequality is not pinned.
    """
    rng = check_random_state(rng)
    if atoms is None:
        atoms = tensor_atoms(sphere_net(n, 1.0 / (3 * d), rng=rng), d)
    values = np.array([
        net_dual_norm(rng.standard_normal(n**d), atoms).value for _ in range(draws)
    ])
    scale = math.sqrt(3 * n * d * (1 + math.log(d)))
    return {
        int(r): float(np.mean(values**r) ** (1.0 / r) / max(math.sqrt(r), scale))
        for r in r_values
    }
