"""Instruments and group-structured measurement operators.

An instrument is a linear map ``u: C^N -> C^b``.  Given a group with
representation ``sigma`` and elements ``g_1..g_m`` the measurement operator is

    A x = (1/sqrt(m)) (u sigma(g_j) x)_{j=1..m}

so ``E ||A x||^2 = <x, Phi x>`` with ``Phi = E sigma(g)^* u^* u sigma(g)``,
which equals ``Id`` for an isotropic group and ``tr(u^* u) = N``.
"""

import warnings
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from ._validation import as_batch, as_signal, check_positive_int, check_random_state
from .groups import element_from_json, element_to_json, group_average, parse_group
from .sparsity import (
    AtomicPolytope,
    CanonicalL1,
    SchattenBall,
    TensorHull,
    dual_norm,
)

__all__ = [
    "Instrument",
    "MeasurementOperator",
    "CovarianceReport",
    "parse_instrument",
    "draw_operator",
    "gaussian_operator",
    "incoherence",
    "square_function_incoherence",
    "covariance",
]


def _cjson(a):
    a = np.asarray(a, dtype=np.complex128)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def _from_cjson(obj):
    a = np.asarray(obj, dtype=float)
    return a[..., 0] + 1j * a[..., 1]


@dataclass(frozen=True, eq=False)
class Instrument:
    """A b x N complex matrix ``u`` with bookkeeping about how it was built.

    ``kind`` is ``functional`` (one row, ``u(x) = <eta, x>``), ``block``,
    ``gaussian`` (a functional row with i.i.d. standard normal ``eta``, trace
    normalized) or ``gaussian_raw`` (the same draw left unnormalized, so that
    ``tr(u^* u) = N`` only holds in expectation).
    """

    kind: str
    matrix: np.ndarray
    seed: Optional[int] = None

    @property
    def block_dim(self):
        return self.matrix.shape[0]

    @property
    def N(self):
        return self.matrix.shape[1]

    @property
    def eta(self):
        if self.block_dim != 1:
            raise ValueError("eta is only defined for single-row instruments")
        return self.matrix[0].conj()

    @property
    def trace(self):
        """tr(u^* u) = squared Frobenius norm."""
        return float(np.linalg.norm(self.matrix) ** 2)

    def __call__(self, x):
        return self.matrix @ as_signal(x, self.N)

    @staticmethod
    def _normalized(matrix, normalize, warn):
        N = matrix.shape[1]
        tr = np.linalg.norm(matrix) ** 2
        if tr == 0.0:
            raise ValueError("instrument must be nonzero")
        if normalize and not np.isclose(tr, N, rtol=1e-12):
            if warn:
                warnings.warn(
                    f"instrument rescaled so that tr(u^* u) = {N} (was {tr:.6g})",
                    stacklevel=3,
                )
            matrix = matrix * np.sqrt(N / tr)
        matrix.setflags(write=False)
        return matrix

    @classmethod
    def functional(cls, eta, normalize=True):
        eta = as_signal(eta, name="eta")
        return cls("functional", cls._normalized(eta.conj()[None, :].copy(), normalize, True))

    @classmethod
    def ones(cls, N):
        return cls.functional(np.ones(N))

    @classmethod
    def block(cls, matrix, normalize=True):
        matrix = np.array(np.atleast_2d(matrix), dtype=np.complex128)
        return cls("block", cls._normalized(matrix, normalize, True))

    @classmethod
    def gaussian(cls, N, seed=None, rng=None, normalize=True):
        if seed is not None:
            rng = np.random.default_rng(seed)
        rng = check_random_state(rng)
        eta = rng.standard_normal(check_positive_int(N, "N")).astype(np.complex128)
        kind = "gaussian" if normalize else "gaussian_raw"
        return cls(kind, cls._normalized(eta[None, :], normalize, False), seed)

    def to_dict(self):
        if self.kind in ("gaussian", "gaussian_raw") and self.seed is not None:
            return {"type": self.kind, "N": self.N, "seed": int(self.seed)}
        if self.kind in ("functional", "gaussian", "gaussian_raw"):
            return {"type": "functional", "eta": _cjson(self.eta)}
        return {"type": "block", "matrix": _cjson(self.matrix)}

    @classmethod
    def from_dict(cls, data):
        kind = data["type"]
        if kind in ("gaussian", "gaussian_raw"):
            return cls.gaussian(data["N"], seed=data["seed"], normalize=kind == "gaussian")
        if kind == "functional":
            return cls.functional(_from_cjson(data["eta"]), normalize=False)
        if kind == "block":
            return cls.block(_from_cjson(data["matrix"]), normalize=False)
        raise ValueError(f"unknown instrument type {kind!r}")


def parse_instrument(spec, N, rng=None):
    """Instrument from a shorthand string, dict, array or :class:`Instrument`.

    Shorthand: ``ones``, ``identity`` (u = Id, block_dim = N), ``gaussian``
    (fresh draw from ``rng``), ``gaussian:SEED``, and ``gaussian-raw`` /
    ``gaussian-raw:SEED`` for the unnormalized draw.
    """
    if isinstance(spec, Instrument):
        inst = spec
    elif isinstance(spec, dict):
        inst = Instrument.from_dict(spec)
    elif isinstance(spec, str):
        name, _, arg = spec.partition(":")
        if name == "ones":
            inst = Instrument.ones(N)
        elif name == "identity":
            inst = Instrument.block(np.eye(N))
        elif name in ("gaussian", "gaussian-raw"):
            inst = Instrument.gaussian(N, seed=int(arg) if arg else None, rng=rng,
                                       normalize=name == "gaussian")
        else:
            raise ValueError(f"cannot parse instrument spec {spec!r}")
    else:
        arr = np.asarray(spec)
        inst = Instrument.functional(arr) if arr.ndim == 1 else Instrument.block(arr)
    if inst.N != N:
        raise ValueError(f"instrument acts on C^{inst.N}, group on C^{N}")
    return inst


class MeasurementOperator:
    """A = (1/sqrt(m)) (u sigma(g_j))_j for recorded group elements ``g_j``."""

    def __init__(self, group, instrument, elements):
        self.group = parse_group(group)
        if instrument.N != self.group.N:
            raise ValueError(f"instrument acts on C^{instrument.N}, group on C^{self.group.N}")
        self.instrument = instrument
        self.elements = tuple(self.group.check_element(g) for g in elements)
        if not self.elements:
            raise ValueError("need at least one group element")

    @property
    def m(self):
        return len(self.elements)

    @property
    def N(self):
        return self.group.N

    @property
    def block_dim(self):
        return self.instrument.block_dim

    @property
    def scale(self):
        return 1.0 / np.sqrt(self.m)

    @property
    def shape(self):
        return (self.m * self.block_dim, self.N)

    def __repr__(self):
        return f"MeasurementOperator({self.group!r}, m={self.m}, block_dim={self.block_dim})"

    def apply(self, x):
        """Blocks of shape (m, b), or (n_samples, m, b) for a batch of signals."""
        single = np.ndim(x) == 1
        X = as_batch(x, self.N)
        u = self.instrument.matrix
        out = np.empty((X.shape[0], self.m, self.block_dim), dtype=np.complex128)
        for j, g in enumerate(self.elements):
            out[:, j, :] = self.group.apply(g, X) @ u.T
        out *= self.scale
        return out[0] if single else out

    def to_dense(self):
        """Rows of A, shape (m*b, N); block j is ``scale * u sigma(g_j)``."""
        conj_u = np.conj(self.instrument.matrix)
        blocks = [np.conj(self.group.adjoint_apply(g, conj_u)) for g in self.elements]
        return self.scale * np.vstack(blocks)

    def energy(self, x):
        """||A x||^2 for one signal or each row of a batch."""
        y = self.apply(x)
        return np.sum(np.abs(y) ** 2, axis=(-2, -1))

    def to_dict(self):
        return {
            "group": self.group.to_dict(),
            "instrument": self.instrument.to_dict(),
            "elements": [element_to_json(g) for g in self.elements],
        }

    @classmethod
    def from_dict(cls, data):
        group = parse_group(data["group"])
        return cls(group, Instrument.from_dict(data["instrument"]),
                   [element_from_json(g) for g in data["elements"]])


def draw_operator(group, instrument, m, rng=None):
    """Draw ``m`` i.i.d. Haar elements (with replacement) and record them."""
    group = parse_group(group)
    rng = check_random_state(rng)
    instrument = parse_instrument(instrument, group.N, rng=rng)
    m = check_positive_int(m, "m")
    return MeasurementOperator(group, instrument, [group.sample(rng) for _ in range(m)])


def gaussian_operator(N, m, rng=None):
    """Dense m x N matrix with i.i.d. N(0, 1/m) entries (the unstructured baseline)."""
    rng = check_random_state(rng)
    m = check_positive_int(m, "m")
    return rng.standard_normal((m, check_positive_int(N, "N"))) / np.sqrt(m)


def incoherence(model, instrument, group=None):
    """Operator norm ``||u : X -> l_2^b||`` of the instrument on the model's norm.

    The group is accepted for symmetry with the measurement setup but does not
    enter: ``||u sigma(g)|| = ||u||`` whenever sigma(g) preserves K.  For the
    tensor model the certified upper bound on the dual norm is returned.
    """
    u = instrument.matrix
    if u.shape[1] != model.size:
        raise ValueError(f"instrument acts on C^{u.shape[1]}, model on C^{model.size}")
    if isinstance(model, CanonicalL1):
        return float(np.max(np.linalg.norm(u, axis=0)))
    if isinstance(model, AtomicPolytope):
        return float(np.max(np.linalg.norm(model.atoms @ u.T, axis=1)))
    if instrument.block_dim == 1:
        if isinstance(model, SchattenBall):
            return dual_norm(model, instrument.eta)
        if isinstance(model, TensorHull):
            return dual_norm(model, instrument.eta).upper
    raise ValueError(
        f"incoherence of a {instrument.block_dim}-row instrument on {type(model).__name__} "
        "is not supported"
    )


def square_function_incoherence(model, instrument):
    """Noncommutative square-function norm of ``u: S_q -> l_2^b``.

    ``||(sum_j |eta_j|^2)^{1/2}||_{q'} + ||(sum_j |eta_j^*|^2)^{1/2}||_{q'}``
    where ``u_j(x) = <eta_j, x>``.  For one row this is ``2 ||eta||_{S_q'}``.
    """
    if not isinstance(model, SchattenBall):
        raise TypeError("square-function incoherence needs a SchattenBall model")
    n, qd = model.n, model.q_dual
    etas = np.conj(instrument.matrix).reshape(-1, n, n)
    left = np.einsum("jab,jac->bc", etas.conj(), etas)   # sum eta^* eta
    right = np.einsum("jab,jcb->ac", etas, etas.conj())  # sum eta eta^*

    def root_norm(S):
        ev = np.clip(np.linalg.eigvalsh(S), 0.0, None)
        sv = np.sqrt(ev)
        return float(sv.max()) if np.isinf(qd) else float(np.sum(sv**qd) ** (1 / qd))

    return root_norm(left) + root_norm(right)


class CovarianceReport(NamedTuple):
    phi: np.ndarray
    deviation: float
    norm: float


def covariance(group, instrument, mode="exact", trials=1000, rng=None):
    """Phi = avg_g sigma(g)^* u^* u sigma(g), its operator distance to Id and its norm."""
    group = parse_group(group)
    u = instrument.matrix
    T = u.conj().T @ u
    phi = group_average(group, T, mode=mode, trials=trials, rng=rng)
    return CovarianceReport(
        phi,
        float(np.linalg.norm(phi - np.eye(group.N), 2)),
        float(np.linalg.norm(phi, 2)),
    )
