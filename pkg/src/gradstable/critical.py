"""Critical points of a homogeneous form restricted to the unit sphere."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .poly import NumericPolynomial, Polynomial, QuadraticSignature, evaluate, gradient, hessian

ZERO_THRESHOLD = 1e-6
MERGE_TOLERANCE = 1e-6


class CriticalKind(str, enum.Enum):
    MIN = "MIN"
    MAX = "MAX"
    SADDLE = "SADDLE"
    DEGENERATE = "DEGENERATE"


@dataclass(frozen=True)
class SphereCriticalPoint:
    location: tuple[float, ...]
    value: float
    tangent_hessian_signature: QuadraticSignature
    classification: CriticalKind

    def to_dict(self) -> dict:
        return {
            "location": [round(v, 12) for v in self.location],
            "value": round(self.value, 12),
            "tangent_hessian_signature": list(self.tangent_hessian_signature.as_tuple()),
            "classification": self.classification.value,
        }


def _starts(n: int, attempts: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    shift = rng.random()
    k = np.arange(attempts) + 0.5
    if n == 2:
        t = 2 * np.pi * ((k / attempts + shift) % 1.0)
        return np.stack([np.cos(t), np.sin(t)], axis=1)
    # Fibonacci lattice, rotated by the seed
    golden = (1 + 5 ** 0.5) / 2
    z = 1 - 2 * k / attempts
    phi = 2 * np.pi * ((k / golden + shift) % 1.0)
    s = np.sqrt(1 - z * z)
    return np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=1)


def _newton(grad, hess, x0: np.ndarray, iters: int = 60, tol: float = 1e-13) -> np.ndarray | None:
    n = len(x0)
    x = x0 / np.linalg.norm(x0)
    lam = float(grad(x) @ x)
    for _ in range(iters):
        g = grad(x)
        F = np.concatenate([g - lam * x, [(x @ x - 1) / 2]])
        if np.linalg.norm(F) < tol * max(1.0, np.linalg.norm(g)):
            return x / np.linalg.norm(x)
        J = np.zeros((n + 1, n + 1))
        J[:n, :n] = hess(x) - lam * np.eye(n)
        J[:n, n] = -x
        J[n, :n] = x
        step = np.linalg.lstsq(J, -F, rcond=None)[0]
        norm = np.linalg.norm(step[:n])
        if norm > 0.5:
            step *= 0.5 / norm
        x = x + step[:n]
        lam = lam + step[n]
        if not np.all(np.isfinite(x)):
            return None
    return None


def _tangent_signature(omega: Polynomial, H: list[list[Polynomial]], point: np.ndarray,
                       threshold: float = ZERO_THRESHOLD) -> QuadraticSignature:
    exact = [Fraction(float(v)) for v in point]
    Hm = np.array([[float(evaluate(h, exact)) for h in row] for row in H])
    g = np.array([float(evaluate(q, exact)) for q in gradient(omega)])
    x = point / np.linalg.norm(point)
    lam = float(g @ x)
    # orthonormal basis of the tangent space at x
    q, _ = np.linalg.qr(np.column_stack([x, np.eye(len(x))]))
    B = q[:, 1:len(x)]
    T = B.T @ (Hm - lam * np.eye(len(x))) @ B
    eig = np.linalg.eigvalsh((T + T.T) / 2)
    # "zero" is judged against the size of the ambient second-order data
    scale = max(np.abs(np.linalg.eigvalsh((Hm + Hm.T) / 2)).max(), abs(lam))
    if scale == 0:
        return QuadraticSignature(0, len(eig), 0)
    neg = int((eig < -threshold * scale).sum())
    pos = int((eig > threshold * scale).sum())
    return QuadraticSignature(neg, len(eig) - neg - pos, pos)


def classify_signature(sig: QuadraticSignature) -> CriticalKind:
    if sig.zeros:
        return CriticalKind.DEGENERATE
    if sig.negatives == 0:
        return CriticalKind.MIN
    if sig.positives == 0:
        return CriticalKind.MAX
    return CriticalKind.SADDLE


def find_sphere_critical_points(omega: Polynomial, attempts: int = 64, seed: int = 0,
                                only_negative: bool = True) -> list[SphereCriticalPoint]:
    """Critical points of omega on the unit sphere, found by multi-start Newton.

    By default only points with omega < 0 are returned.  Starts that do not
    converge are dropped; an empty list is a valid answer.
    """
    n = omega.n_vars
    if n not in (2, 3):
        raise ValueError("sphere critical points are searched for n = 2 or 3")
    if not omega.is_homogeneous():
        raise ValueError("omega must be homogeneous")
    num = NumericPolynomial.from_polynomial(omega)
    grads = num.gradient()
    H = hessian(omega)
    Hn = [[NumericPolynomial.from_polynomial(h) for h in row] for row in H]

    def grad(x):
        return np.array([g(x) for g in grads])

    def hess(x):
        return np.array([[h(x) for h in row] for row in Hn])

    found: list[np.ndarray] = []
    for x0 in _starts(n, attempts, seed):
        x = _newton(grad, hess, x0)
        if x is None:
            continue
        x = np.where(np.abs(x) < 1e-14, 0.0, x)
        if any(np.linalg.norm(x - y) < MERGE_TOLERANCE for y in found):
            continue
        found.append(x)
    scale = max(1.0, float(np.abs([float(c) for _, c in omega.items()]).max()))
    out = []
    for x in found:
        value = float(num(x))
        if only_negative and not value < -1e-12 * scale:
            continue
        sig = _tangent_signature(omega, H, x)
        out.append(SphereCriticalPoint(tuple(float(v) for v in x), value, sig, classify_signature(sig)))
    out.sort(key=lambda p: (p.value, p.location))
    return out
