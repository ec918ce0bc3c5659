"""Exact sparse multivariate polynomials over the rationals.

A :class:`Polynomial` maps exponent tuples to non-zero :class:`~fractions.Fraction`
coefficients.  Everything here is exact; floating point only appears in
:class:`NumericPolynomial`, the compiled evaluator used by the numerical
modules.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Mapping, Sequence

import numpy as np

Exponent = tuple[int, ...]


class PolynomialError(ValueError):
    pass


class CriticalPointError(PolynomialError):
    """The origin is not a critical point (non-zero constant or linear part)."""


class ZeroPolynomialError(PolynomialError):
    """f is identically zero, so it has no initial form."""


def _as_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, (int, Rational)):
        return Fraction(c)
    if isinstance(c, float):
        return Fraction(c)
    if isinstance(c, str):
        return Fraction(c)
    raise TypeError(f"cannot use {type(c).__name__} as an exact coefficient")


def _grlex_key(exp: Exponent):
    # descending total degree, then lexicographic
    return (-sum(exp), tuple(-e for e in exp))


class Polynomial:
    __slots__ = ("n_vars", "_terms", "_hash")

    def __init__(self, n_vars: int, terms: Mapping[Sequence[int], object] | None = None):
        if n_vars < 1:
            raise PolynomialError("n_vars must be positive")
        self.n_vars = n_vars
        clean: dict[Exponent, Fraction] = {}
        for exp, c in (terms or {}).items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != n_vars:
                raise PolynomialError(f"exponent {exp} has length {len(exp)}, expected {n_vars}")
            if any(e < 0 for e in exp):
                raise PolynomialError(f"negative exponent in {exp}")
            c = _as_fraction(c)
            if c:
                clean[exp] = clean.get(exp, Fraction(0)) + c
                if not clean[exp]:
                    del clean[exp]
        self._terms = clean
        self._hash = None

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls, n_vars: int) -> "Polynomial":
        return cls(n_vars)

    @classmethod
    def constant(cls, n_vars: int, c) -> "Polynomial":
        return cls(n_vars, {(0,) * n_vars: c})

    @classmethod
    def variable(cls, n_vars: int, i: int) -> "Polynomial":
        exp = [0] * n_vars
        exp[i] = 1
        return cls(n_vars, {tuple(exp): 1})

    @classmethod
    def monomial(cls, exp: Sequence[int], c=1) -> "Polynomial":
        return cls(len(exp), {tuple(exp): c})

    @classmethod
    def _raw(cls, n_vars: int, terms: dict[Exponent, Fraction]) -> "Polynomial":
        p = cls.__new__(cls)
        p.n_vars = n_vars
        p._terms = terms
        p._hash = None
        return p

    # -- basic queries ------------------------------------------------

    @property
    def terms(self) -> dict[Exponent, Fraction]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def coefficient(self, exp: Sequence[int]) -> Fraction:
        return self._terms.get(tuple(exp), Fraction(0))

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self):
        return bool(self._terms)

    def __len__(self):
        return len(self._terms)

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(e) for e in self._terms), default=-1)

    def order(self) -> int:
        """Lowest total degree of a term; -1 for the zero polynomial."""
        return min((sum(e) for e in self._terms), default=-1)

    def is_homogeneous(self, d: int | None = None) -> bool:
        degs = {sum(e) for e in self._terms}
        if not degs:
            return True
        if len(degs) != 1:
            return False
        return d is None or degs == {d}

    def homogeneous_part(self, k: int) -> "Polynomial":
        return Polynomial._raw(self.n_vars, {e: c for e, c in self._terms.items() if sum(e) == k})

    def truncate(self, max_degree: int) -> "Polynomial":
        return Polynomial._raw(self.n_vars, {e: c for e, c in self._terms.items() if sum(e) <= max_degree})

    # -- arithmetic ---------------------------------------------------

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.n_vars != self.n_vars:
                raise PolynomialError(f"dimension mismatch: {self.n_vars} vs {other.n_vars}")
            return other
        return Polynomial.constant(self.n_vars, other)

    def __add__(self, other) -> "Polynomial":
        other = self._coerce(other)
        out = dict(self._terms)
        for e, c in other._terms.items():
            s = out.get(e, 0) + c
            if s:
                out[e] = s
            else:
                out.pop(e, None)
        return Polynomial._raw(self.n_vars, out)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial._raw(self.n_vars, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other) -> "Polynomial":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Polynomial":
        return self._coerce(other) - self

    def __mul__(self, other) -> "Polynomial":
        if not isinstance(other, Polynomial):
            c = _as_fraction(other)
            if not c:
                return Polynomial.zero(self.n_vars)
            return Polynomial._raw(self.n_vars, {e: c * v for e, v in self._terms.items()})
        other = self._coerce(other)
        out: dict[Exponent, Fraction] = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return Polynomial._raw(self.n_vars, {e: c for e, c in out.items() if c})

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "Polynomial":
        if k < 0:
            raise PolynomialError("negative power")
        result = Polynomial.constant(self.n_vars, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, Polynomial):
            return self.n_vars == other.n_vars and self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self == Polynomial.constant(self.n_vars, other)
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.n_vars, frozenset(self._terms.items())))
        return self._hash

    # -- calculus -----------------------------------------------------

    def diff(self, i: int) -> "Polynomial":
        out = {}
        for e, c in self._terms.items():
            if e[i]:
                ne = list(e)
                ne[i] -= 1
                out[tuple(ne)] = c * e[i]
        return Polynomial._raw(self.n_vars, out)

    # -- display ------------------------------------------------------

    def sorted_terms(self) -> list[tuple[Exponent, Fraction]]:
        return sorted(self._terms.items(), key=lambda t: _grlex_key(t[0]))

    def to_string(self, names: Sequence[str] | None = None) -> str:
        names = list(names) if names else default_names(self.n_vars)
        if not self._terms:
            return "0"
        parts = []
        for exp, c in self.sorted_terms():
            factors = []
            for name, e in zip(names, exp):
                if e == 1:
                    factors.append(name)
                elif e > 1:
                    factors.append(f"{name}^{e}")
            mag = abs(c)
            if factors:
                body = "*".join(factors)
                if mag != 1:
                    body = f"{mag}*{body}"
            else:
                body = str(mag)
            sign = "-" if c < 0 else "+"
            parts.append((sign, body))
        first_sign, first = parts[0]
        out = ("-" if first_sign == "-" else "") + first
        for sign, body in parts[1:]:
            out += f" {sign} {body}"
        return out

    def __str__(self):
        return self.to_string()

    def __repr__(self):
        return f"Polynomial({self.n_vars}, {self.to_string()!r})"


def default_names(n: int) -> list[str]:
    if n <= 3:
        return ["x", "y", "z"][:n]
    if n == 4:
        return ["x", "y", "z", "w"]
    return [f"x{i + 1}" for i in range(n)]


# -- domain records --------------------------------------------------------


@dataclass(frozen=True)
class InitialFormData:
    omega: Polynomial
    degree_d: int
    remainder_g: Polynomial


@dataclass(frozen=True)
class QuadraticSignature:
    negatives: int
    zeros: int
    positives: int

    @property
    def n_vars(self) -> int:
        return self.negatives + self.zeros + self.positives

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.negatives, self.zeros, self.positives)


class PolyMapGerm:
    """A polynomial map germ (R^n, 0) -> (R^n, 0) with invertible linear part."""

    def __init__(self, components: Sequence[Polynomial]):
        components = list(components)
        n = len(components)
        if n == 0:
            raise PolynomialError("empty map")
        for c in components:
            if c.n_vars != n:
                raise PolynomialError("map components must have n_vars equal to the number of components")
            if c.coefficient((0,) * n):
                raise PolynomialError("map components must vanish at the origin")
        self.components = tuple(components)
        self.n_vars = n
        lin = []
        for c in components:
            row = []
            for j in range(n):
                e = [0] * n
                e[j] = 1
                row.append(c.coefficient(e))
            lin.append(row)
        self.linear_part = tuple(tuple(r) for r in lin)
        if exact_det([list(r) for r in lin]) == 0:
            raise PolynomialError("linear part of the map is not invertible")

    @classmethod
    def linear(cls, matrix: Sequence[Sequence]) -> "PolyMapGerm":
        n = len(matrix)
        comps = []
        for row in matrix:
            comps.append(sum((Polynomial.variable(n, j) * _as_fraction(a) for j, a in enumerate(row)),
                             Polynomial.zero(n)))
        return cls(comps)

    def is_linear(self) -> bool:
        return all(c.is_homogeneous(1) or c.is_zero() for c in self.components)

    def linear_germ(self) -> "PolyMapGerm":
        return PolyMapGerm.linear(self.linear_part)

    def linear_inverse(self) -> "PolyMapGerm":
        return PolyMapGerm.linear(exact_inverse([list(r) for r in self.linear_part]))


# -- operations ------------------------------------------------------------


def evaluate(p: Polynomial, x: Sequence):
    """Evaluate ``p`` at ``x``; exact when every entry of ``x`` is rational."""
    if len(x) != p.n_vars:
        raise PolynomialError(f"point has dimension {len(x)}, polynomial has {p.n_vars} variables")
    exact = all(isinstance(v, (int, Fraction)) for v in x)
    total = Fraction(0) if exact else 0.0
    for exp, c in p.items():
        term = c if exact else float(c)
        for v, e in zip(x, exp):
            if e:
                term = term * v ** e
        total += term
    return total


def gradient(p: Polynomial) -> list[Polynomial]:
    return [p.diff(i) for i in range(p.n_vars)]


def hessian(p: Polynomial) -> list[list[Polynomial]]:
    g = gradient(p)
    return [[gi.diff(j) for j in range(p.n_vars)] for gi in g]


def initial_form(p: Polynomial) -> InitialFormData:
    if p.is_zero():
        raise ZeroPolynomialError("the zero polynomial has no initial form")
    d = p.order()
    omega = p.homogeneous_part(d)
    rest = Polynomial._raw(p.n_vars, {e: c for e, c in p.items() if sum(e) > d})
    return InitialFormData(omega=omega, degree_d=d, remainder_g=rest)


def check_critical_origin(p: Polynomial) -> None:
    """Raise unless p vanishes at 0 with vanishing gradient there."""
    if p.is_zero():
        raise ZeroPolynomialError("f is identically zero")
    if p.order() == 0:
        raise CriticalPointError("origin is not a critical point: non-zero constant term")
    if p.order() == 1:
        raise CriticalPointError("origin is not a critical point: non-zero linear term")


def compose(f: Polynomial, phi: PolyMapGerm) -> Polynomial:
    """Exact composition ``f ∘ phi``."""
    if f.n_vars != phi.n_vars:
        raise PolynomialError(f"dimension mismatch: f has {f.n_vars} variables, map has {phi.n_vars}")
    n = f.n_vars
    powers: dict[tuple[int, int], Polynomial] = {}

    def power(i: int, e: int) -> Polynomial:
        key = (i, e)
        if key not in powers:
            powers[key] = phi.components[i] ** e
        return powers[key]

    out = Polynomial.zero(n)
    for exp, c in f.items():
        term = Polynomial.constant(n, c)
        for i, e in enumerate(exp):
            if e:
                term = term * power(i, e)
        out = out + term
    return out


def symmetric_matrix(q: Polynomial) -> list[list[Fraction]]:
    """Symmetric matrix A with q(x) = x^T A x, for q homogeneous quadratic."""
    if not q.is_homogeneous(2):
        raise PolynomialError("quadratic_signature needs a homogeneous quadratic form")
    n = q.n_vars
    A = [[Fraction(0)] * n for _ in range(n)]
    for exp, c in q.items():
        idx = [i for i, e in enumerate(exp) for _ in range(e)]
        i, j = idx
        if i == j:
            A[i][i] += c
        else:
            A[i][j] += c / 2
            A[j][i] += c / 2
    return A


def matrix_signature(A: Sequence[Sequence]) -> QuadraticSignature:
    """Inertia of a symmetric rational matrix by symmetric Gaussian (Lagrange) reduction."""
    n = len(A)
    M = [[_as_fraction(v) for v in row] for row in A]
    for i in range(n):
        for j in range(n):
            if M[i][j] != M[j][i]:
                raise PolynomialError("matrix is not symmetric")
    neg = pos = 0
    active = list(range(n))
    while active:
        pivot = next((i for i in active if M[i][i] != 0), None)
        if pivot is None:
            pair = next(((i, j) for i in active for j in active if i < j and M[i][j] != 0), None)
            if pair is None:
                break
            i, j = pair
            # e_i <- e_i + e_j makes the (i, i) entry 2*M[i][j] + M[j][j] = 2*M[i][j]
            for k in range(n):
                M[i][k] += M[j][k]
            for k in range(n):
                M[k][i] += M[k][j]
            pivot = i
        a = M[pivot][pivot]
        if a > 0:
            pos += 1
        else:
            neg += 1
        active.remove(pivot)
        row = M[pivot]
        for i in active:
            if row[i]:
                factor = row[i] / a
                Mi = M[i]
                for k in active:
                    Mi[k] -= factor * row[k]
        for i in active:
            M[i][pivot] = M[pivot][i] = Fraction(0)
    return QuadraticSignature(negatives=neg, zeros=n - neg - pos, positives=pos)


def quadratic_signature(q: Polynomial) -> QuadraticSignature:
    return matrix_signature(symmetric_matrix(q))


def exact_det(M: list[list]) -> Fraction:
    M = [[_as_fraction(v) for v in row] for row in M]
    n = len(M)
    det = Fraction(1)
    for col in range(n):
        piv = next((r for r in range(col, n) if M[r][col] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            M[col], M[piv] = M[piv], M[col]
            det = -det
        det *= M[col][col]
        for r in range(col + 1, n):
            if M[r][col]:
                factor = M[r][col] / M[col][col]
                for k in range(col, n):
                    M[r][k] -= factor * M[col][k]
    return det


def exact_inverse(M: list[list]) -> list[list[Fraction]]:
    n = len(M)
    A = [[_as_fraction(v) for v in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(M)]
    for col in range(n):
        piv = next((r for r in range(col, n) if A[r][col] != 0), None)
        if piv is None:
            raise PolynomialError("singular matrix")
        A[col], A[piv] = A[piv], A[col]
        inv = 1 / A[col][col]
        A[col] = [v * inv for v in A[col]]
        for r in range(n):
            if r != col and A[r][col]:
                factor = A[r][col]
                A[r] = [a - factor * b for a, b in zip(A[r], A[col])]
    return [row[n:] for row in A]


def congruent(q: Polynomial, P: Sequence[Sequence]) -> Polynomial:
    """The form x -> q(P x)."""
    return compose(q, PolyMapGerm.linear(P))


# -- numeric shadow --------------------------------------------------------


class NumericPolynomial:
    """Float evaluator for a polynomial, vectorised over points.

    Built from an exact :class:`Polynomial` or from a float term map (used for
    maps with irrational coefficients, which the exact core does not admit).
    """

    def __init__(self, n_vars: int, terms: Mapping[Sequence[int], float]):
        self.n_vars = n_vars
        items = [(tuple(e), float(c)) for e, c in terms.items() if c != 0]
        if items:
            self.exps = np.array([e for e, _ in items], dtype=np.int64)
            self.coeffs = np.array([c for _, c in items], dtype=float)
        else:
            self.exps = np.zeros((0, n_vars), dtype=np.int64)
            self.coeffs = np.zeros(0)
        self.max_exp = int(self.exps.max()) if len(items) else 0
        self._grad = None

    @classmethod
    def from_polynomial(cls, p: Polynomial) -> "NumericPolynomial":
        return cls(p.n_vars, {e: float(c) for e, c in p.items()})

    def terms(self) -> dict[Exponent, float]:
        return {tuple(int(v) for v in e): float(c) for e, c in zip(self.exps, self.coeffs)}

    def __call__(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        if X.shape[1] != self.n_vars:
            raise PolynomialError("dimension mismatch")
        out = np.zeros(X.shape[0])
        if not len(self.coeffs):
            return out[0] if single else out
        # powers[k][:, j] = X[:, j] ** k
        powers = [np.ones_like(X)]
        for _ in range(self.max_exp):
            powers.append(powers[-1] * X)
        P = np.stack(powers)  # (max_exp+1, m, n)
        for exp, c in zip(self.exps, self.coeffs):
            term = np.full(X.shape[0], c)
            for j, e in enumerate(exp):
                if e:
                    term = term * P[e, :, j]
            out += term
        return out[0] if single else out

    def gradient(self) -> list["NumericPolynomial"]:
        if self._grad is None:
            grads = []
            for i in range(self.n_vars):
                t: dict[Exponent, float] = {}
                for exp, c in zip(self.exps, self.coeffs):
                    if exp[i]:
                        ne = exp.copy()
                        ne[i] -= 1
                        key = tuple(int(v) for v in ne)
                        t[key] = t.get(key, 0.0) + c * exp[i]
                grads.append(NumericPolynomial(self.n_vars, t))
            self._grad = grads
        return self._grad

    def grad(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        X2 = np.atleast_2d(X)
        G = np.stack([g(X2) for g in self.gradient()], axis=-1)
        return G[0] if single else G


def numeric_linear_compose(f: Polynomial | NumericPolynomial, matrix) -> NumericPolynomial:
    """Float composition f(A x) for a real matrix A (irrational entries allowed)."""
    A = np.asarray(matrix, dtype=float)
    n = A.shape[0]
    terms = f.terms() if isinstance(f, NumericPolynomial) else {e: float(c) for e, c in f.items()}
    lin = [{tuple(int(k == j) for k in range(n)): A[i, j] for j in range(n) if A[i, j] != 0} for i in range(n)]

    def mul(a: dict, b: dict) -> dict:
        out: dict = {}
        for e1, c1 in a.items():
            for e2, c2 in b.items():
                e = tuple(x + y for x, y in zip(e1, e2))
                out[e] = out.get(e, 0.0) + c1 * c2
        return out

    result: dict = {}
    for exp, c in terms.items():
        term = {(0,) * n: c}
        for i, e in enumerate(exp):
            for _ in range(e):
                term = mul(term, lin[i])
        for k, v in term.items():
            result[k] = result.get(k, 0.0) + v
    return NumericPolynomial(n, {k: v for k, v in result.items() if abs(v) > 0})


def all_monomials(n: int, max_degree: int) -> list[Exponent]:
    """Exponent vectors of total degree <= max_degree, grouped by degree."""
    out = []
    for d in range(max_degree + 1):
        out.extend(monomials_of_degree(n, d))
    return out


def monomials_of_degree(n: int, d: int) -> list[Exponent]:
    if n == 1:
        return [(d,)]
    out = []
    for first in range(d, -1, -1):
        for rest in monomials_of_degree(n - 1, d - first):
            out.append((first,) + rest)
    return out


__all__ = [
    "Polynomial", "PolynomialError", "CriticalPointError", "InitialFormData", "QuadraticSignature",
    "PolyMapGerm", "evaluate", "gradient", "hessian", "initial_form", "compose", "quadratic_signature",
    "matrix_signature", "symmetric_matrix", "check_critical_origin", "NumericPolynomial",
    "numeric_linear_compose", "all_monomials", "monomials_of_degree", "exact_det", "exact_inverse",
    "congruent", "default_names",
]
