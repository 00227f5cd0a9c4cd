"""Finite groups with affine unitary representations and fast actions.

Every group acts on the last axis of a complex array ``x`` of shape
``(..., N)``; no dense matrix is formed by :meth:`apply`.  Elements are nested
tuples of ints so they hash, compare and serialize to JSON without help.

Affine means multiplicative up to a phase::

    apply(g, apply(h, x)) == phase * apply(gh, x),   (gh, phase) = compose(g, h)

and every shipped representation is isotropic: averaging ``sigma(g)^* T sigma(g)``
over the group gives ``tr(T)/N * Id``.
"""

import itertools
import math
from functools import reduce

import numpy as np

from ._validation import check_positive_int, check_random_state

__all__ = [
    "FiniteGroup",
    "HeisenbergWeyl",
    "SignShift",
    "PauliTensor",
    "ProductGroup",
    "TwoSided",
    "IsotropyTooLarge",
    "group_average",
    "verify_isotropy",
    "commutant_dimension",
    "clifford_generators",
    "clifford_product",
    "parse_group",
    "group_from_dict",
    "element_to_json",
    "element_from_json",
]

# enumeration limit for exact group averages
EXACT_LIMIT = 10**6


class IsotropyTooLarge(ValueError):
    """Exact averaging requested over a group with no structured shortcut."""


def element_to_json(g):
    if isinstance(g, (tuple, list)):
        return [element_to_json(v) for v in g]
    return int(g)


def element_from_json(obj):
    if isinstance(obj, (tuple, list)):
        return tuple(element_from_json(v) for v in obj)
    return int(obj)


def _conjugate(group, g, T):
    """sigma(g)^* T sigma(g) for T of shape (..., N, N)."""
    B = np.swapaxes(group.adjoint_apply(g, np.swapaxes(T, -1, -2)), -1, -2)
    return np.conj(group.adjoint_apply(g, np.conj(B)))


class FiniteGroup:
    """Common interface.  Subclasses define ``N``, ``order`` and the element algebra."""

    N: int
    order: int

    def identity(self):
        raise NotImplementedError

    def apply(self, g, x):
        raise NotImplementedError

    def adjoint_apply(self, g, x):
        raise NotImplementedError

    def compose(self, g, h):
        raise NotImplementedError

    def sample(self, rng=None):
        raise NotImplementedError

    def elements(self):
        raise NotImplementedError

    def generators(self):
        raise NotImplementedError

    def check_element(self, g):
        raise NotImplementedError

    def to_dict(self):
        raise NotImplementedError

    def _check_x(self, x):
        x = np.asarray(x, dtype=np.complex128)
        if x.shape[-1:] != (self.N,):
            raise ValueError(f"last axis has size {x.shape[-1:]}, expected {self.N}")
        return x

    def dense(self, g):
        """Explicit N x N matrix of sigma(g) (testing and export only)."""
        return self.apply(g, np.eye(self.N, dtype=np.complex128)).T

    def conjugate(self, g, T):
        return _conjugate(self, g, np.asarray(T, dtype=np.complex128))

    def average(self, T):
        """Exact group average of sigma(g)^* T sigma(g) over T of shape (..., N, N)."""
        if self.order > EXACT_LIMIT:
            raise IsotropyTooLarge(f"|G| = {self.order} exceeds {EXACT_LIMIT}")
        T = np.asarray(T, dtype=np.complex128)
        acc = np.zeros_like(T)
        for g in self.elements():
            acc += _conjugate(self, g, T)
        return acc / self.order

    def __eq__(self, other):
        return type(self) is type(other) and self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(repr(self.to_dict()))


class HeisenbergWeyl(FiniteGroup):
    """Modulations and cyclic shifts on C^N: sigma(l, k) = Lambda^l Sh^k.

    ``Sh e_r = e_{r+1}`` and ``Lambda e_r = exp(2 pi i r / N) e_r``.
    """

    def __init__(self, N):
        self.N = check_positive_int(N, "N")
        self.order = self.N**2
        self._r = np.arange(self.N)

    def __repr__(self):
        return f"HeisenbergWeyl(N={self.N})"

    def _phases(self, l):
        return np.exp(2j * np.pi * ((l * self._r) % self.N) / self.N)

    def identity(self):
        return (0, 0)

    def check_element(self, g):
        l, k = g
        if not (0 <= l < self.N and 0 <= k < self.N):
            raise ValueError(f"element {g} out of range for N={self.N}")
        return (int(l), int(k))

    def apply(self, g, x):
        l, k = self.check_element(g)
        x = self._check_x(x)
        return np.roll(x, k, axis=-1) * self._phases(l)

    def adjoint_apply(self, g, x):
        l, k = self.check_element(g)
        x = self._check_x(x)
        return np.roll(x * self._phases(-l), -k, axis=-1)

    def compose(self, g, h):
        l, k = self.check_element(g)
        l2, k2 = self.check_element(h)
        phase = np.exp(-2j * np.pi * ((l2 * k) % self.N) / self.N)
        return ((l + l2) % self.N, (k + k2) % self.N), complex(phase)

    def sample(self, rng=None):
        rng = check_random_state(rng)
        l, k = rng.integers(self.N, size=2)
        return (int(l), int(k))

    def elements(self):
        return itertools.product(range(self.N), repeat=2)

    def generators(self):
        return [(1 % self.N, 0), (0, 1 % self.N)]

    def to_dict(self):
        return {"type": "heisenberg_weyl", "N": self.N}


class SignShift(FiniteGroup):
    """Random signs and cyclic shifts on R^N: sigma(eps, k) = D_eps Sh^k."""

    def __init__(self, N):
        self.N = check_positive_int(N, "N")
        self.order = 2**self.N * self.N

    def __repr__(self):
        return f"SignShift(N={self.N})"

    def identity(self):
        return ((1,) * self.N, 0)

    def check_element(self, g):
        eps, k = g
        eps = tuple(int(e) for e in eps)
        if len(eps) != self.N or any(e not in (-1, 1) for e in eps) or not 0 <= k < self.N:
            raise ValueError(f"invalid SignShift element {g}")
        return eps, int(k)

    def apply(self, g, x):
        eps, k = self.check_element(g)
        x = self._check_x(x)
        return np.roll(x, k, axis=-1) * np.array(eps)

    def adjoint_apply(self, g, x):
        eps, k = self.check_element(g)
        x = self._check_x(x)
        return np.roll(x * np.array(eps), -k, axis=-1)

    def compose(self, g, h):
        eps, k = self.check_element(g)
        eps2, k2 = self.check_element(h)
        # Sh^k D_eps' Sh^-k = D_{roll(eps', k)}
        new = np.array(eps) * np.roll(np.array(eps2), k)
        return (tuple(int(e) for e in new), (k + k2) % self.N), 1.0 + 0j

    def sample(self, rng=None):
        rng = check_random_state(rng)
        eps = rng.choice((-1, 1), size=self.N)
        return (tuple(int(e) for e in eps), int(rng.integers(self.N)))

    def elements(self):
        for eps in itertools.product((1, -1), repeat=self.N):
            for k in range(self.N):
                yield (eps, k)

    def generators(self):
        gens = []
        for r in range(self.N):
            eps = [1] * self.N
            eps[r] = -1
            gens.append((tuple(eps), 0))
        gens.append(((1,) * self.N, 1 % self.N))
        return gens

    def average(self, T):
        # the sign average of D T D is the diagonal part of T; then average shifts
        T = np.asarray(T, dtype=np.complex128)
        diag = T * np.eye(self.N)
        ones = (1,) * self.N
        acc = np.zeros_like(T)
        for k in range(self.N):
            acc += _conjugate(self, (ones, k), diag)
        return acc / self.N

    def to_dict(self):
        return {"type": "sign_shift", "N": self.N}


def _parity(values, k):
    out = np.zeros_like(values)
    for bit in range(k):
        out ^= (values >> bit) & 1
    return out


class PauliTensor(FiniteGroup):
    """k-qubit Pauli operators on C^(2^k): sigma(a, b) = (x)_i Z^{a_i} X^{b_i}.

    An element is a bit tuple ``(a_1..a_k, b_1..b_k)``; qubit 1 is the most
    significant bit of the basis index.  Products pick up signs only.
    """

    def __init__(self, k):
        self.k = check_positive_int(k, "k")
        self.N = 2**self.k
        self.order = 4**self.k
        self._r = np.arange(self.N)

    def __repr__(self):
        return f"PauliTensor(k={self.k})"

    def _masks(self, g):
        bits = tuple(int(b) for b in g)
        if len(bits) != 2 * self.k or any(b not in (0, 1) for b in bits):
            raise ValueError(f"invalid Pauli element {g}")
        a = int("".join(map(str, bits[: self.k])), 2)
        b = int("".join(map(str, bits[self.k:])), 2)
        return a, b

    def identity(self):
        return (0,) * (2 * self.k)

    def check_element(self, g):
        self._masks(g)
        return tuple(int(b) for b in g)

    def apply(self, g, x):
        # (Z^a X^b x)_r = (-1)^{<r, a>} x_{r xor b}
        a, b = self._masks(g)
        x = self._check_x(x)
        sign = 1 - 2 * _parity(self._r & a, self.k)
        return x[..., self._r ^ b] * sign

    def adjoint_apply(self, g, x):
        a, b = self._masks(g)
        x = self._check_x(x)
        src = self._r ^ b
        sign = 1 - 2 * _parity(src & a, self.k)
        return x[..., src] * sign

    def compose(self, g, h):
        a, b = self._masks(g)
        a2, b2 = self._masks(h)
        # X^b Z^a' = (-1)^{<a', b>} Z^a' X^b
        sign = -1.0 if _parity(np.array(b & a2), self.k) else 1.0
        bits = tuple(x ^ y for x, y in zip(g, h))
        return tuple(int(v) for v in bits), complex(sign)

    def sample(self, rng=None):
        rng = check_random_state(rng)
        return tuple(int(v) for v in rng.integers(2, size=2 * self.k))

    def elements(self):
        return itertools.product((0, 1), repeat=2 * self.k)

    def generators(self):
        gens = []
        for i in range(2 * self.k):
            bits = [0] * (2 * self.k)
            bits[i] = 1
            gens.append(tuple(bits))
        return gens

    def to_dict(self):
        return {"type": "pauli", "k": self.k}


def _leg_average(group, T, axes, conj=False):
    """Average conjugation by ``group`` on the tensor legs ``axes = (row, col)``."""
    row, col = axes
    moved = np.moveaxis(T, (row, col), (-2, -1))
    if conj:
        avg = np.conj(group.average(np.conj(moved)))
    else:
        avg = group.average(moved)
    return np.moveaxis(avg, (-2, -1), (row, col))


class ProductGroup(FiniteGroup):
    """Tensor product representation of factor groups on C^(N_1 ... N_F).

    Factor ``i`` acts along axis ``i`` of the C-order reshaped signal.
    """

    def __init__(self, factors):
        factors = list(factors)
        if not factors:
            raise ValueError("ProductGroup needs at least one factor")
        self.factors = factors
        self.dims = tuple(f.N for f in factors)
        self.N = math.prod(self.dims)
        self.order = math.prod(f.order for f in factors)

    def __repr__(self):
        return f"ProductGroup({self.factors!r})"

    def identity(self):
        return tuple(f.identity() for f in self.factors)

    def check_element(self, g):
        if len(g) != len(self.factors):
            raise ValueError(f"element has {len(g)} parts, expected {len(self.factors)}")
        return tuple(f.check_element(h) for f, h in zip(self.factors, g))

    def _act(self, g, x, adjoint):
        g = self.check_element(g)
        x = self._check_x(x)
        batch = x.shape[:-1]
        y = x.reshape(batch + self.dims)
        offset = len(batch)
        for i, (f, h) in enumerate(zip(self.factors, g)):
            y = np.moveaxis(y, offset + i, -1)
            y = f.adjoint_apply(h, y) if adjoint else f.apply(h, y)
            y = np.moveaxis(y, -1, offset + i)
        return y.reshape(batch + (self.N,))

    def apply(self, g, x):
        return self._act(g, x, adjoint=False)

    def adjoint_apply(self, g, x):
        return self._act(g, x, adjoint=True)

    def compose(self, g, h):
        parts, phase = [], 1.0 + 0j
        for f, a, b in zip(self.factors, self.check_element(g), self.check_element(h)):
            ab, ph = f.compose(a, b)
            parts.append(ab)
            phase *= ph
        return tuple(parts), phase

    def sample(self, rng=None):
        rng = check_random_state(rng)
        return tuple(f.sample(rng) for f in self.factors)

    def elements(self):
        return itertools.product(*(f.elements() for f in self.factors))

    def generators(self):
        ident = self.identity()
        gens = []
        for i, f in enumerate(self.factors):
            for h in f.generators():
                gens.append(ident[:i] + (h,) + ident[i + 1:])
        return gens

    def average(self, T):
        # averaging over a product factorizes into independent leg averages
        T = np.asarray(T, dtype=np.complex128)
        batch = T.shape[:-2]
        F, b = len(self.factors), len(batch)
        X = T.reshape(batch + self.dims + self.dims)
        for i, f in enumerate(self.factors):
            X = _leg_average(f, X, (b + i, b + F + i))
        return X.reshape(T.shape)

    def to_dict(self):
        return {"type": "product", "factors": [f.to_dict() for f in self.factors]}


class TwoSided(FiniteGroup):
    """Left/right action on n x n matrices: sigma(g, h) X = sigma(g) X sigma(h)^*.

    Signals are flattened matrices (N = n^2, C order); this is the matrix-shape
    adapter used with Schatten-class sparsity models.
    """

    def __init__(self, base):
        self.base = base
        self.n = base.N
        self.N = base.N**2
        self.order = base.order**2

    def __repr__(self):
        return f"TwoSided({self.base!r})"

    def identity(self):
        e = self.base.identity()
        return (e, e)

    def check_element(self, g):
        left, right = g
        return (self.base.check_element(left), self.base.check_element(right))

    def apply(self, g, x):
        left, right = self.check_element(g)
        x = self._check_x(x)
        X = x.reshape(x.shape[:-1] + (self.n, self.n))
        Y = np.swapaxes(self.base.apply(left, np.swapaxes(X, -1, -2)), -1, -2)
        Z = np.conj(self.base.apply(right, np.conj(Y)))
        return Z.reshape(x.shape)

    def adjoint_apply(self, g, x):
        left, right = self.check_element(g)
        x = self._check_x(x)
        X = x.reshape(x.shape[:-1] + (self.n, self.n))
        Y = np.swapaxes(self.base.adjoint_apply(left, np.swapaxes(X, -1, -2)), -1, -2)
        Z = np.conj(self.base.adjoint_apply(right, np.conj(Y)))
        return Z.reshape(x.shape)

    def compose(self, g, h):
        (a, b), (a2, b2) = self.check_element(g), self.check_element(h)
        left, p1 = self.base.compose(a, a2)
        right, p2 = self.base.compose(b, b2)
        return (left, right), p1 * np.conj(p2)

    def sample(self, rng=None):
        rng = check_random_state(rng)
        return (self.base.sample(rng), self.base.sample(rng))

    def elements(self):
        return itertools.product(self.base.elements(), repeat=2)

    def generators(self):
        e = self.base.identity()
        return [(g, e) for g in self.base.generators()] + [(e, g) for g in self.base.generators()]

    def average(self, T):
        # vec(A X B^*) = (A kron conj(B)) vec(X): left leg plain, right leg conjugated
        T = np.asarray(T, dtype=np.complex128)
        batch = T.shape[:-2]
        b = len(batch)
        X = T.reshape(batch + (self.n,) * 4)
        X = _leg_average(self.base, X, (b, b + 2))
        X = _leg_average(self.base, X, (b + 1, b + 3), conj=True)
        return X.reshape(T.shape)

    def to_dict(self):
        return {"type": "two_sided", "base": self.base.to_dict()}


def group_average(group, T, mode="exact", trials=1000, rng=None):
    """Average of sigma(g)^* T sigma(g): exact (structured or enumerated) or Monte Carlo."""
    T = np.asarray(T, dtype=np.complex128)
    if T.shape[-2:] != (group.N, group.N):
        raise ValueError(f"T must be {group.N} x {group.N}")
    if mode == "exact":
        return group.average(T)
    if mode != "monte_carlo":
        raise ValueError(f"unknown mode {mode!r}")
    rng = check_random_state(rng)
    acc = np.zeros_like(T)
    for _ in range(check_positive_int(trials, "trials")):
        acc += group.conjugate(group.sample(rng), T)
    return acc / trials


def verify_isotropy(group, T=None, mode="exact", trials=1000, rng=None):
    """Frobenius distance between the group average of ``T`` and ``tr(T)/N Id``.

    ``T`` defaults to a random complex Gaussian probe.
    """
    rng = check_random_state(rng)
    if T is None:
        T = rng.standard_normal((group.N, group.N)) + 1j * rng.standard_normal((group.N, group.N))
    T = np.asarray(T, dtype=np.complex128)
    avg = group_average(group, T, mode=mode, trials=trials, rng=rng)
    target = np.trace(T) / group.N * np.eye(group.N)
    return float(np.linalg.norm(avg - target))


def commutant_dimension(group, tol=1e-9):
    """Dimension of {T : sigma(g) T = T sigma(g) for all generators g} (brute force)."""
    N = group.N
    if N > 16:
        raise ValueError("commutant check is limited to N <= 16")
    eye = np.eye(N)
    rows = []
    for g in group.generators():
        S = group.dense(g)
        # row-major vec: vec(S T) = (S kron I) vec T, vec(T S) = (I kron S^T) vec T
        rows.append(np.kron(S, eye) - np.kron(eye, S.T))
    sv = np.linalg.svd(np.vstack(rows), compute_uv=False)
    return int(np.sum(sv < tol * max(sv.max(), 1.0)))


_PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
_PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
_PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)


def clifford_generators(k):
    """2k Hermitian, pairwise anticommuting, self-inverse generators on C^(2^k).

    Jordan-Wigner construction: Z (x) ... (x) Z (x) {X or Y} (x) I (x) ... (x) I.
    """
    k = check_positive_int(k, "k")
    gens = []
    for j in range(k):
        for P in (_PAULI_X, _PAULI_Y):
            ops = [_PAULI_Z] * j + [P] + [np.eye(2)] * (k - j - 1)
            gens.append(reduce(np.kron, ops))
    return gens


def clifford_product(bits, generators):
    """Ordered product of the generators selected by ``bits``."""
    out = np.eye(generators[0].shape[0], dtype=np.complex128)
    for b, c in zip(bits, generators):
        if b:
            out = out @ c
    return out


_SHORT = {"hw": HeisenbergWeyl, "ss": SignShift, "pauli": PauliTensor}


def parse_group(spec):
    """Build a group from a shorthand string or a tagged dict.

    Shorthand: ``hw:N``, ``ss:N``, ``pauli:k``, products joined by ``*``
    (``hw:2*hw:2*hw:2``), and ``2s(<spec>)`` for the two-sided matrix action.
    """
    if isinstance(spec, FiniteGroup):
        return spec
    if isinstance(spec, dict):
        return group_from_dict(spec)
    spec = spec.strip()
    if spec.startswith("2s(") and spec.endswith(")"):
        return TwoSided(parse_group(spec[3:-1]))
    parts = spec.split("*")
    if len(parts) > 1:
        return ProductGroup([parse_group(p) for p in parts])
    name, _, arg = spec.partition(":")
    if name not in _SHORT or not arg:
        raise ValueError(f"cannot parse group spec {spec!r}")
    return _SHORT[name](int(arg))


def group_from_dict(data):
    kind = data.get("type")
    if kind == "heisenberg_weyl":
        return HeisenbergWeyl(data["N"])
    if kind == "sign_shift":
        return SignShift(data["N"])
    if kind == "pauli":
        return PauliTensor(data["k"])
    if kind == "product":
        return ProductGroup([group_from_dict(f) for f in data["factors"]])
    if kind == "two_sided":
        return TwoSided(group_from_dict(data["base"]))
    raise ValueError(f"unknown group type {kind!r}")
