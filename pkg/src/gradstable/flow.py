"""Gradient-ascent trajectories x' = grad f(x) from seeds on a small sphere.

All trajectories of a census are advanced together by a vectorised
Dormand-Prince 5(4) pair with per-trajectory step sizes.  Results are
numerical evidence only.
"""

from __future__ import annotations

import enum
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .poly import NumericPolynomial, Polynomial
from .sphere import build_mesh

# Dormand-Prince tableau
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_B4 = np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


class Outcome(str, enum.Enum):
    CONVERGED = "CONVERGED"
    ESCAPED = "ESCAPED"
    STALLED = "STALLED"
    BUDGET = "BUDGET"


_RUNNING, _CONV, _ESC, _STALL, _BUDGET = range(5)
_OUTCOMES = {_CONV: Outcome.CONVERGED, _ESC: Outcome.ESCAPED, _STALL: Outcome.STALLED, _BUDGET: Outcome.BUDGET}


@dataclass(frozen=True)
class FlowParams:
    """Integration settings.  ``rho_stop`` defaults to ``rho_stop_ratio * radius``
    and ``eta`` to twice the largest |f| on the stop sphere."""

    rho_stop: float | None = None
    rho_stop_ratio: float = 1e-2
    eta: float | None = None
    r_out_factor: float = 4.0
    g_min: float = 1e-14
    max_steps: int = 1_000_000
    rtol: float = 1e-9

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrajectoryRecord:
    seed: tuple[float, ...]
    outcome: Outcome
    steps: int
    final_point: tuple[float, ...]
    ell_estimate: float | None = None
    a_estimate: float | None = None
    f_monotone: bool = True
    trace: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "seed": list(self.seed), "outcome": self.outcome.value, "steps": self.steps,
            "final_point": list(self.final_point), "ell_estimate": self.ell_estimate,
            "a_estimate": self.a_estimate, "f_monotone": self.f_monotone,
        }


@dataclass
class CensusResult:
    radius: float
    seeds: int
    converging_fraction: float
    cluster_count: int
    records: list[TrajectoryRecord]
    grid_level: int = 0
    uncertainty: float = 0.0
    counts: dict = field(default_factory=dict)
    clusters: list[list[int]] = field(default_factory=list)
    params: dict = field(default_factory=dict)

    def to_dict(self, with_records: bool = False) -> dict:
        d = {
            "radius": self.radius, "grid_level": self.grid_level, "seeds": self.seeds,
            "converging_fraction": round(self.converging_fraction, 12),
            "uncertainty": round(self.uncertainty, 12), "cluster_count": self.cluster_count,
            "counts": dict(self.counts), "params": dict(self.params),
        }
        if with_records:
            d["records"] = [r.to_dict() for r in self.records]
        return d


def _numeric(f) -> NumericPolynomial:
    return f if isinstance(f, NumericPolynomial) else NumericPolynomial.from_polynomial(f)


def _stop_sphere_scale(num: NumericPolynomial, rho: float) -> float:
    n = num.n_vars
    if n == 2:
        t = np.linspace(0, 2 * np.pi, 720, endpoint=False)
        P = np.stack([np.cos(t), np.sin(t)], axis=1)
    else:
        P = build_mesh(n, 1.0, 3).vertices
    return float(np.abs(num(rho * P)).max())


def _integrate(num: NumericPolynomial, seeds: np.ndarray, params: FlowParams, rho_stop: float, eta: float,
               r_out: float, record: bool = False) -> list[TrajectoryRecord]:
    seeds = np.atleast_2d(np.asarray(seeds, dtype=float))
    m, n = seeds.shape

    def grad(X):
        return num.grad(X)

    X = seeds.copy()
    G = grad(X)
    F = num(X)
    gn = np.linalg.norm(G, axis=1)
    xn = np.linalg.norm(X, axis=1)
    h = 0.01 * xn / np.maximum(gn, 1e-300)
    t = np.zeros(m)
    steps = np.zeros(m, dtype=np.int64)
    outcome = np.full(m, _RUNNING)
    monotone = np.ones(m, dtype=bool)
    history: list[tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]] = []
    traces: list[list[np.ndarray]] | None = [[] for _ in range(m)] if record else None

    def snapshot(idx):
        ratio = np.einsum("ij,ij->i", X[idx], G[idx]) / F[idx]
        history.append((idx, ratio, F[idx].copy(), np.linalg.norm(X[idx], axis=1)))
        if traces is not None:
            for k, i in enumerate(idx):
                traces[i].append(np.concatenate([[t[i]], X[i], [F[i], np.linalg.norm(X[i]), ratio[k]]]))

    active = np.flatnonzero(F < 0)
    outcome[F >= 0] = _ESC
    snapshot(active)
    while len(active):
        x = X[active]
        hh = h[active][:, None]
        K = [G[active]]
        for s in range(1, 7):
            y = x + hh * sum(a * K[j] for j, a in enumerate(_A[s]) if a)
            K.append(grad(y))
        x5 = x + hh * sum(b * K[j] for j, b in enumerate(_B5) if b)
        err_vec = hh * sum(e * K[j] for j, e in enumerate(_E) if e)
        scale = params.rtol * np.maximum(np.abs(x).max(axis=1), np.abs(x5).max(axis=1))
        err = np.abs(err_vec).max(axis=1) / np.maximum(scale, 1e-300)
        ok = err <= 1.0
        factor = np.clip(0.9 * np.power(np.maximum(err, 1e-10), -0.2), 0.2, 5.0)
        h[active] = hh[:, 0] * factor
        acc = active[ok]
        if len(acc):
            f_old = F[acc]
            X[acc] = x5[ok]
            t[acc] += hh[ok, 0]
            F[acc] = num(X[acc])
            G[acc] = grad(X[acc])
            steps[acc] += 1
            monotone[acc] &= F[acc] >= f_old - 1e3 * params.rtol * np.abs(f_old)
            snapshot(acc)
            xn = np.linalg.norm(X[acc], axis=1)
            gn = np.linalg.norm(G[acc], axis=1)
            fa = F[acc]
            conv = (xn <= rho_stop) & (fa < 0) & (fa > -eta)
            esc = ~conv & ((xn >= r_out) | (fa >= 0))
            stall = ~conv & ~esc & (xn > rho_stop) & (xn * gn < params.g_min * np.abs(fa))
            budget = ~conv & ~esc & ~stall & (steps[acc] >= params.max_steps)
            outcome[acc[conv]] = _CONV
            outcome[acc[esc]] = _ESC
            outcome[acc[stall]] = _STALL
            outcome[acc[budget]] = _BUDGET
        active = active[outcome[active] == _RUNNING]

    ell = np.full(m, np.nan)
    amp = np.full(m, np.nan)
    conv_idx = np.flatnonzero(outcome == _CONV)
    if len(conv_idx) and history:
        idx_all = np.concatenate([h_[0] for h_ in history])
        ratio_all = np.concatenate([h_[1] for h_ in history])
        f_all = np.concatenate([h_[2] for h_ in history])
        r_all = np.concatenate([h_[3] for h_ in history])
        order = np.argsort(idx_all, kind="stable")
        idx_all, ratio_all, f_all, r_all = idx_all[order], ratio_all[order], f_all[order], r_all[order]
        starts = np.searchsorted(idx_all, np.arange(m))
        ends = np.searchsorted(idx_all, np.arange(m), side="right")
        for i in conv_idx:
            s, e = starts[i], ends[i]
            tail = slice(s + 3 * (e - s) // 4, e)
            lh = float(np.median(ratio_all[tail]))
            ell[i] = lh
            amp[i] = float(np.median(f_all[tail] / r_all[tail] ** lh))

    out = []
    for i in range(m):
        tr = np.array(traces[i]) if traces is not None else None
        out.append(TrajectoryRecord(
            seed=tuple(float(v) for v in seeds[i]), outcome=_OUTCOMES[int(outcome[i])], steps=int(steps[i]),
            final_point=tuple(float(v) for v in X[i]),
            ell_estimate=None if np.isnan(ell[i]) else float(ell[i]),
            a_estimate=None if np.isnan(amp[i]) else float(amp[i]),
            f_monotone=bool(monotone[i]), trace=tr))
    return out


def _resolve(num: NumericPolynomial, radius: float, params: FlowParams) -> tuple[float, float, float]:
    rho = params.rho_stop if params.rho_stop is not None else params.rho_stop_ratio * radius
    eta = params.eta if params.eta is not None else 2 * _stop_sphere_scale(num, rho)
    return rho, eta, params.r_out_factor * radius


def integrate_trajectory(f: Polynomial | NumericPolynomial, seed, params: FlowParams | None = None,
                         record: bool = False) -> TrajectoryRecord:
    """Follow x' = grad f(x) from ``seed`` (which must satisfy f(seed) < 0).

    The stop radius and escape radius are taken relative to |seed|.
    """
    params = params or FlowParams()
    num = _numeric(f)
    seed = np.asarray(seed, dtype=float)
    if not num(seed) < 0:
        raise ValueError("seed must satisfy f(seed) < 0")
    rho, eta, r_out = _resolve(num, float(np.linalg.norm(seed)), params)
    return _integrate(num, seed[None, :], params, rho, eta, r_out, record)[0]


def census_uncertainty(p: float, total: int) -> float:
    if total == 0:
        return 1.0
    return max(1.0 / total, float(np.sqrt(p * (1 - p) / total)))


def run_census(f: Polynomial | NumericPolynomial, radius: float, grid_level: int,
               params: FlowParams | None = None) -> CensusResult:
    """Integrate from every mesh vertex with f < 0 and cluster the converging ones."""
    params = params or FlowParams()
    num = _numeric(f)
    n = num.n_vars
    if n not in (2, 3):
        raise ValueError("census runs for n = 2 or 3")
    mesh = build_mesh(n, radius, grid_level)
    P = mesh.points
    vals = num(P)
    seed_ids = np.flatnonzero(vals < 0)
    rho, eta, r_out = _resolve(num, radius, params)
    records = _integrate(num, P[seed_ids], params, rho, eta, r_out) if len(seed_ids) else []
    outcomes = np.array([r.outcome.value for r in records], dtype=str)
    counts = {o.value: int((outcomes == o.value).sum()) for o in Outcome}
    decided = counts["CONVERGED"] + counts["ESCAPED"]
    frac = counts["CONVERGED"] / decided if decided else 0.0

    # clusters: converging seeds joined by mesh edges
    conv_vertex = np.zeros(len(P), dtype=bool)
    conv_vertex[seed_ids[outcomes == Outcome.CONVERGED.value]] = True
    cells = mesh.cells
    k = cells.shape[1]
    a = np.concatenate([cells[:, i] for i in range(k)])
    b = np.concatenate([cells[:, (i + 1) % k] for i in range(k)])
    keep = conv_vertex[a] & conv_vertex[b]
    g = coo_matrix((np.ones(int(keep.sum())), (a[keep], b[keep])), shape=(len(P), len(P)))
    _, comp = connected_components(g, directed=False)
    position = {int(v): i for i, v in enumerate(seed_ids)}
    groups: dict[int, list[int]] = {}
    for v in np.flatnonzero(conv_vertex):
        groups.setdefault(int(comp[v]), []).append(position[int(v)])
    clusters = sorted(groups.values())
    echo = params.to_dict()
    echo.update({"rho_stop": rho, "eta": eta, "r_out": r_out})
    return CensusResult(radius=float(radius), seeds=len(seed_ids), converging_fraction=frac,
                        cluster_count=len(clusters), records=records, grid_level=grid_level,
                        uncertainty=census_uncertainty(frac, decided), counts=counts, clusters=clusters,
                        params=echo)
