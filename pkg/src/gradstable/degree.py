"""Local degree of -grad f, Euler characteristics from it, and the Milnor number."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .poly import NumericPolynomial, Polynomial, PolynomialError, all_monomials
from .sphere import build_mesh, solid_angle

REGULARITY_THRESHOLD = 1e-12
ROUNDING_TOLERANCE = 0.1
MAX_EXTRA_LEVELS = 4
DEFAULT_RESOLUTION = 4
DEFAULT_MAX_TRUNCATION = 12


class DegreeError(ValueError):
    pass


class DegenerateSphere(DegreeError):
    """The gradient (nearly) vanishes on the chosen sphere."""


class NonIntegral(DegreeError):
    """The computed degree is too far from an integer to be trusted."""


class DegreeMethod(str, enum.Enum):
    WINDING = "WINDING"
    SPHERICAL_AREA = "SPHERICAL_AREA"


@dataclass(frozen=True)
class DegreeResult:
    degree: int
    radius_used: float
    method: DegreeMethod
    regularity_margin: float
    raw_value: float = 0.0

    @property
    def distance_to_integer(self) -> float:
        return abs(self.raw_value - self.degree)

    def to_dict(self) -> dict:
        return {
            "degree": self.degree, "radius_used": self.radius_used, "method": self.method.value,
            "regularity_margin": float(f"{self.regularity_margin:.6e}"),
            "distance_to_integer": float(f"{self.distance_to_integer:.3e}"),
        }


def _field(f: Polynomial):
    grads = NumericPolynomial.from_polynomial(f).gradient()

    def v(X):
        return -np.stack([g(X) for g in grads], axis=-1)

    return v


def _check_margin(norms: np.ndarray) -> float:
    top = float(norms.max())
    margin = float(norms.min())
    if top == 0 or margin <= REGULARITY_THRESHOLD * top:
        raise DegenerateSphere(f"gradient vanishes on the sphere (margin {margin:.3e}, scale {top:.3e}); "
                               "try another radius")
    return margin


def _round(raw: float) -> int:
    d = int(round(raw))
    if abs(raw - d) > ROUNDING_TOLERANCE:
        raise NonIntegral(f"degree estimate {raw:.4f} is not within {ROUNDING_TOLERANCE} of an integer")
    return d


def _winding(v, radius: float, resolution: int) -> tuple[float, float]:
    n0 = 2 ** (resolution + 4)
    t = 2 * np.pi * np.arange(n0 + 1) / n0
    max_points = n0 * 2 ** 12
    while True:
        P = radius * np.stack([np.cos(t), np.sin(t)], axis=1)
        V = v(P)
        norms = np.linalg.norm(V, axis=1)
        margin = _check_margin(norms)
        a, b = V[:-1], V[1:]
        turn = np.arctan2(a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0], np.einsum("ij,ij->i", a, b))
        bad = np.abs(turn) >= np.pi / 2
        if not bad.any() or len(t) > max_points:
            return float(turn.sum() / (2 * np.pi)), margin
        mids = (t[:-1][bad] + t[1:][bad]) / 2
        t = np.sort(np.concatenate([t, mids]))


def _spherical_area(v, radius: float, resolution: int) -> tuple[float, float]:
    mesh = build_mesh(3, radius, resolution)
    mesh.midpoints = dict(mesh.midpoints)
    for _ in range(MAX_EXTRA_LEVELS + 1):
        U = v(mesh.points)
        norms = np.linalg.norm(U, axis=1)
        margin = _check_margin(norms)
        U = U / norms[:, None]
        # widest angle between image vertices of each cell
        Ut = U[mesh.cells]
        dots = np.stack([np.einsum("ij,ij->i", Ut[:, i], Ut[:, j]) for i, j in ((0, 1), (1, 2), (2, 0))], axis=1)
        wide = np.arccos(np.clip(dots.min(axis=1), -1, 1)) >= np.pi / 2
        if not wide.any() or mesh.depth.max() >= MAX_EXTRA_LEVELS:
            break
        keep = ~wide
        children = mesh.split(mesh.cells[wide])
        mesh.cells = np.concatenate([mesh.cells[keep], children])
        mesh.depth = np.concatenate([mesh.depth[keep], np.repeat(mesh.depth[wide] + 1, 4)])
    U = v(mesh.points)
    norms = np.linalg.norm(U, axis=1)
    margin = _check_margin(norms)
    U = U / norms[:, None]
    # fan every cell boundary (hanging vertices included) from the image of its centre
    c, a, b = mesh.segments()
    centre = mesh.vertices[mesh.cells].mean(axis=1)
    centre = radius * centre / np.linalg.norm(centre, axis=1, keepdims=True)
    W = v(centre)
    wn = np.linalg.norm(W, axis=1)
    margin = min(margin, _check_margin(np.concatenate([wn, norms])))
    W = W / wn[:, None]
    total = solid_angle(W[c], U[a], U[b]).sum()
    return float(total / (4 * np.pi)), margin


def local_degree(f: Polynomial, radius: float, resolution: int = DEFAULT_RESOLUTION) -> DegreeResult:
    """Degree of x -> -grad f(x)/|grad f(x)| on the sphere of the given radius."""
    n = f.n_vars
    if n not in (2, 3):
        raise DegreeError("local degree is computed for n = 2 or 3")
    if radius <= 0:
        raise DegreeError("radius must be positive")
    v = _field(f)
    if n == 2:
        raw, margin = _winding(v, radius, resolution)
        method = DegreeMethod.WINDING
    else:
        raw, margin = _spherical_area(v, radius, resolution)
        method = DegreeMethod.SPHERICAL_AREA
    return DegreeResult(_round(raw), float(radius), method, margin, raw)


def euler_from_degree(deg: DegreeResult | int, n: int = 3) -> tuple[int, int]:
    """(chi of {f >= 0}, chi of {f < 0}) on a small 2-sphere from deg(-grad f)."""
    if n != 3:
        raise DegreeError("the degree-to-Euler relation is used for n = 3 only")
    d = deg.degree if isinstance(deg, DegreeResult) else int(deg)
    chi_pos = 1 - d
    return chi_pos, 2 - chi_pos


# -- Milnor number ---------------------------------------------------------


class MilnorStatus(str, enum.Enum):
    CERTIFIED = "CERTIFIED"
    NOT_ISOLATED = "NOT_ISOLATED"


@dataclass(frozen=True)
class MilnorResult:
    mu: int
    truncation_degree: int
    certified: bool
    certificate_degree: int | None = None
    history: tuple[int, ...] = field(default=())

    @property
    def status(self) -> MilnorStatus:
        return MilnorStatus.CERTIFIED if self.certified else MilnorStatus.NOT_ISOLATED

    def to_dict(self) -> dict:
        return {
            "mu": self.mu, "truncation_degree": self.truncation_degree, "certified": self.certified,
            "certificate_degree": self.certificate_degree, "status": self.status.value,
            "history": list(self.history),
        }


class _Echelon:
    """Incrementally reduced sparse rows over Q; columns are integers, smaller = earlier."""

    def __init__(self):
        self.pivots: dict[int, dict[int, Fraction]] = {}

    def reduce(self, row: dict[int, Fraction]) -> dict[int, Fraction]:
        row = dict(row)
        while row:
            col = min(row)
            piv = self.pivots.get(col)
            if piv is None:
                return row
            factor = row[col]
            for k, val in piv.items():
                nv = row.get(k, 0) - factor * val
                if nv:
                    row[k] = nv
                else:
                    row.pop(k, None)
        return row

    def add(self, row: dict[int, Fraction]) -> bool:
        row = self.reduce(row)
        if not row:
            return False
        col = min(row)
        lead = row[col]
        self.pivots[col] = {k: v / lead for k, v in row.items()}
        return True

    @property
    def rank(self) -> int:
        return len(self.pivots)


def _truncated_quotient(g: Polynomial, D: int) -> tuple[int, int | None]:
    """q_D = dim of polys of degree <= D modulo (J + m^{D+1}), and the least
    k <= D with every degree-k monomial in J + m^{D+1} (or None)."""
    n = g.n_vars
    monos = all_monomials(n, D)
    # columns ordered by degree, highest first, so pivots prefer high degree
    monos.sort(key=lambda e: (-sum(e), e))
    col = {e: i for i, e in enumerate(monos)}
    partials = [g.diff(i) for i in range(n)]
    ech = _Echelon()
    for p in partials:
        if p.is_zero():
            continue
        o = p.order()
        for alpha in all_monomials(n, D - o):
            row = {}
            for exp, c in p.items():
                e = tuple(a + b for a, b in zip(alpha, exp))
                if sum(e) <= D:
                    row[col[e]] = c
            if row:
                ech.add(row)
    q = len(monos) - ech.rank
    cert = None
    for k in range(1, D + 1):
        if all(not ech.reduce({col[e]: Fraction(1)}) for e in monos if sum(e) == k):
            cert = k
            break
    return q, cert


def milnor_number(g: Polynomial, max_truncation: int = DEFAULT_MAX_TRUNCATION) -> MilnorResult:
    """Milnor number of g at the origin via truncated Jacobian-ideal quotients.

    Certified when some m^k (k <= D) lies in J + m^{D+1}, which by Nakayama's
    lemma gives m^k in J, and q_D agrees with q_{D+1}.
    """
    if g.is_zero():
        raise PolynomialError("g is identically zero")
    if g.coefficient((0,) * g.n_vars) or g.order() < 2:
        raise PolynomialError("g must have zero constant and linear parts")
    history: list[int] = []
    prev: tuple[int, int | None] | None = None
    for D in range(1, max_truncation + 1):
        q, cert = _truncated_quotient(g, D)
        history.append(q)
        if prev is not None and prev[1] is not None and prev[0] == q:
            return MilnorResult(q, D, True, prev[1], tuple(history))
        prev = (q, cert)
    return MilnorResult(history[-1], max_truncation, False, None, tuple(history))
