"""The verdict ladder: sufficient criteria for an infinite set of converging
trajectories and for a stable set with non-empty interior.

Criterion ids:

    T1  b0(S_r) < b0(Omega)
    T2  chi(S_r) < chi(Omega)
    T3  S_r non-empty with chi(S_r) <= 0, or b1(S_r) > 0
    T4  Omega non-empty with chi(Omega) <= 0, or b1(Omega) > 0
    T5  omega quadratic with at least two negative squares
    I1  S'_r empty (strict local maximum)
    I2  rank H^{n-2}(S_r) < rank H^{n-2}(Omega)
    I3  b0(S'_r) < b0(Omega')
    I4  mu even and the quadratic part of signature (n-1, 1, 0)

T-criteria conclude that infinitely many trajectories converge to the
origin, I-criteria that the stable set has non-empty interior.  A1-A3 are
advisories from numerical evidence and never prove anything.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Any

from .critical import CriticalKind, SphereCriticalPoint
from .degree import DegreeResult, MilnorResult
from .poly import PolyMapGerm, QuadraticSignature
from .sphere import TopologySummary

CENSUS_INTERIOR_FRACTION = 0.02


class InconsistentInvariants(RuntimeError):
    """Two certified computations of the same rank disagree."""

    def __init__(self, message: str, dump: dict | None = None):
        super().__init__(message)
        self.dump = dump or {}


class Status(str, enum.Enum):
    PROVED = "PROVED"
    UNKNOWN = "UNKNOWN"


class CriterionOutcome(str, enum.Enum):
    FIRED = "FIRED"
    HELD_UNCERTIFIED = "HELD_UNCERTIFIED"
    NOT_MET = "NOT_MET"
    MISSING_INPUT = "MISSING_INPUT"


T_CRITERIA = ("T1", "T2", "T3", "T4", "T5")
I_CRITERIA = ("I1", "I2", "I3", "I4")
TRANSFERABLE = ("T1", "I3")


@dataclass(frozen=True)
class RankRecord:
    """rank H^{n-2} of a negative side, with how it was obtained."""

    value: int
    source: str  # "direct", "duality" or "direct+duality"
    certified: bool

    def to_dict(self) -> dict:
        return {"value": self.value, "source": self.source, "certified": self.certified}


@dataclass
class InvariantBundle:
    n: int
    degree_d: int
    s_r: TopologySummary | None = None
    s_prime_r: TopologySummary | None = None
    omega: TopologySummary | None = None
    omega_prime: TopologySummary | None = None
    quad_signature: QuadraticSignature | None = None
    theta_signature: QuadraticSignature | None = None
    degree_result: DegreeResult | None = None
    milnor: MilnorResult | None = None
    sphere_criticals: list[SphereCriticalPoint] = field(default_factory=list)
    census: Any = None
    equivalence_source: dict | None = None
    rank_s: RankRecord | None = None
    rank_omega: RankRecord | None = None
    strict_max: bool = False
    conversions: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        def summ(s):
            return None if s is None else s.to_dict()

        def sig(s):
            return None if s is None else list(s.as_tuple())

        return {
            "n": self.n, "degree_d": self.degree_d,
            "s_r": summ(self.s_r), "s_prime_r": summ(self.s_prime_r),
            "omega": summ(self.omega), "omega_prime": summ(self.omega_prime),
            "quad_signature": sig(self.quad_signature), "theta_signature": sig(self.theta_signature),
            "degree_result": None if self.degree_result is None else self.degree_result.to_dict(),
            "milnor": None if self.milnor is None else self.milnor.to_dict(),
            "sphere_criticals": [p.to_dict() for p in self.sphere_criticals],
            "equivalence_source": self.equivalence_source,
            "rank_h_n_minus_2": {
                "s_r": None if self.rank_s is None else self.rank_s.to_dict(),
                "omega": None if self.rank_omega is None else self.rank_omega.to_dict(),
            },
            "strict_max": self.strict_max,
            "conversions": list(self.conversions),
        }


@dataclass(frozen=True)
class CriterionResult:
    id: str
    outcome: CriterionOutcome
    inputs: dict
    certified: bool
    note: str = ""

    @property
    def held(self) -> bool:
        return self.outcome in (CriterionOutcome.FIRED, CriterionOutcome.HELD_UNCERTIFIED)

    def to_dict(self) -> dict:
        d = {"id": self.id, "outcome": self.outcome.value, "inputs": self.inputs, "certified": self.certified}
        if self.note:
            d["note"] = self.note
        return d


@dataclass(frozen=True)
class Advisory:
    id: str
    conclusion: str
    detail: dict

    def to_dict(self) -> dict:
        return {"id": self.id, "conclusion": self.conclusion, "detail": self.detail}


@dataclass
class Verdict:
    t_infinite: Status
    interior_nonempty: Status
    fired_criteria: list[CriterionResult]
    advisories: list[Advisory] = field(default_factory=list)
    evaluations: list[CriterionResult] = field(default_factory=list)
    transferred_from: str | None = None

    def fired_ids(self, certified_only: bool = True) -> list[str]:
        return [c.id for c in self.fired_criteria if c.certified or not certified_only]

    def advisory_conclusions(self) -> list[str]:
        return [a.conclusion for a in self.advisories]

    def to_dict(self) -> dict:
        return {
            "t_infinite": self.t_infinite.value,
            "interior_nonempty": self.interior_nonempty.value,
            "fired_criteria": [c.to_dict() for c in self.fired_criteria],
            "advisories": [a.to_dict() for a in self.advisories],
            "evaluations": [c.to_dict() for c in self.evaluations],
            "transferred_from": self.transferred_from,
        }


# -- duality ---------------------------------------------------------------


def _trusted(s: TopologySummary | None) -> bool:
    return s is not None and s.certified and s.stabilized is not False


def _direct_rank(n: int, s: TopologySummary) -> int | None:
    """rank H^{n-2} of a negative side from its own Betti numbers (reduced for n = 2)."""
    if n == 2:
        return max(s.b0 - 1, 0)
    if n == 3:
        return s.b1
    return None


def _convert_pair(n: int, neg: TopologySummary | None, pos: TopologySummary | None, label: str,
                  notes: list[str]) -> tuple[RankRecord | None, TopologySummary | None, bool]:
    """Returns (rank record, possibly filled positive summary, positive side empty)."""
    if pos is not None and pos.empty:
        notes.append(f"{label}': empty, no duality conversion")
        return None, pos, True
    direct = None
    if neg is not None and (d := _direct_rank(n, neg)) is not None:
        direct = RankRecord(d, "direct", _trusted(neg))
    dual = None
    if pos is not None:
        dual = RankRecord(pos.b0 - 1, "duality", _trusted(pos))
    if direct and dual:
        if direct.value != dual.value:
            if direct.certified and dual.certified:
                raise InconsistentInvariants(
                    f"b0({label}') = {pos.b0} but 1 + rank H^(n-2)({label}) = {1 + direct.value}",
                    {label: neg.to_dict(), label + "'": pos.to_dict()})
            keep = direct if direct.certified else dual
            notes.append(f"{label}: direct and dual ranks differ ({direct.value} vs {dual.value}); "
                         f"kept the {'certified ' if keep.certified else ''}{keep.source} value")
            return keep, pos, False
        return RankRecord(direct.value, "direct+duality", direct.certified or dual.certified), pos, False
    if dual:
        notes.append(f"rank H^(n-2)({label}) = b0({label}') - 1 = {dual.value}")
        return dual, pos, False
    if direct:
        notes.append(f"b0({label}') = 1 + rank H^(n-2)({label}) = {1 + direct.value}")
        filled = TopologySummary(region=label + "'", side="POS", b0=1 + direct.value,
                                 certified=direct.certified, notes=["filled from the duality relation"])
        return direct, filled, False
    return None, pos, False


def duality_convert(bundle: InvariantBundle) -> InvariantBundle:
    """Fill rank H^{n-2} of S_r and Omega (and missing b0 of the closed sides)
    from rank H_0(closed side) = 1 + rank H^{n-2}(open side)."""
    notes: list[str] = []
    rank_s, s_prime, s_empty = _convert_pair(bundle.n, bundle.s_r, bundle.s_prime_r, "S_r", notes)
    rank_o, o_prime, _ = _convert_pair(bundle.n, bundle.omega, bundle.omega_prime, "Omega", notes)
    return replace(bundle, rank_s=rank_s, rank_omega=rank_o, s_prime_r=s_prime, omega_prime=o_prime,
                   strict_max=s_empty and _trusted(bundle.s_prime_r), conversions=notes)


# -- ladder ----------------------------------------------------------------


def _summ_inputs(name: str, s: TopologySummary, *fields: str) -> dict:
    return {f"{f}({name})": getattr(s, f) for f in fields}


def _result(cid: str, held: bool | None, inputs: dict, certified: bool, note: str = "") -> CriterionResult:
    if held is None:
        return CriterionResult(cid, CriterionOutcome.MISSING_INPUT, inputs, False, note)
    if not held:
        return CriterionResult(cid, CriterionOutcome.NOT_MET, inputs, certified, note)
    return CriterionResult(cid, CriterionOutcome.FIRED if certified else CriterionOutcome.HELD_UNCERTIFIED, inputs, certified, note)


def _t_side(b: InvariantBundle) -> list[CriterionResult]:
    out = []
    s, o = b.s_r, b.omega
    both = s is not None and o is not None
    cert = _trusted(s) and _trusted(o)

    if both:
        out.append(_result("T1", s.b0 < o.b0, {"b0(S_r)": s.b0, "b0(Omega)": o.b0}, cert))
    else:
        out.append(_result("T1", None, {}, False))

    if both and s.euler is not None and o.euler is not None:
        inputs = {"chi(S_r)": s.euler, "chi(Omega)": o.euler}
        if b.degree_result is not None and b.n == 3:
            inputs["chi(S_r) from degree"] = 1 + b.degree_result.degree
        out.append(_result("T2", s.euler < o.euler, inputs, cert))
    else:
        out.append(_result("T2", None, {}, False))

    for cid, summ, name in (("T3", s, "S_r"), ("T4", o, "Omega")):
        if summ is None or summ.euler is None:
            out.append(_result(cid, None, {}, False))
            continue
        inputs = {f"empty({name})": summ.empty, f"chi({name})": summ.euler}
        held = (not summ.empty) and summ.euler <= 0
        if b.n == 3:
            inputs[f"b1({name})"] = summ.b1
            held = held or (summ.b1 or 0) > 0
        out.append(_result(cid, held, inputs, _trusted(summ)))

    if b.degree_d == 2 and b.quad_signature is not None:
        out.append(_result("T5", b.quad_signature.negatives >= 2,
                           {"signature(omega)": list(b.quad_signature.as_tuple())}, True))
    else:
        out.append(_result("T5", None, {"d": b.degree_d}, False, "omega is not quadratic"))
    return out


def _i_side(b: InvariantBundle) -> list[CriterionResult]:
    out = []
    sp, op = b.s_prime_r, b.omega_prime
    if sp is not None:
        out.append(_result("I1", sp.empty, {"empty(S'_r)": sp.empty}, _trusted(sp)))
    else:
        out.append(_result("I1", None, {}, False))

    if b.rank_s is not None and b.rank_omega is not None:
        out.append(_result("I2", b.rank_s.value < b.rank_omega.value,
                           {"rank H^(n-2)(S_r)": b.rank_s.value, "rank H^(n-2)(Omega)": b.rank_omega.value,
                            "sources": [b.rank_s.source, b.rank_omega.source]},
                           b.rank_s.certified and b.rank_omega.certified))
    else:
        out.append(_result("I2", None, {}, False, "rank unavailable (empty closed side or n > 3)"))

    if sp is not None and op is not None:
        out.append(_result("I3", sp.b0 < op.b0, {"b0(S'_r)": sp.b0, "b0(Omega')": op.b0},
                           _trusted(sp) and _trusted(op)))
    else:
        out.append(_result("I3", None, {}, False))

    m, th = b.milnor, b.theta_signature
    if m is not None and th is not None:
        target = (b.n - 1, 1, 0)
        out.append(_result("I4", m.mu % 2 == 0 and th.as_tuple() == target,
                           {"mu": m.mu, "mu_certified": m.certified, "signature(theta)": list(th.as_tuple())},
                           m.certified))
    else:
        out.append(_result("I4", None, {}, False))
    return out


def _advisories(b: InvariantBundle) -> list[Advisory]:
    out = []
    for p in b.sphere_criticals:
        if p.value >= 0 or p.classification is CriticalKind.DEGENERATE:
            continue
        if p.classification is not CriticalKind.MIN:
            out.append(Advisory("A1", "infinite (advisory)", p.to_dict()))
        if p.classification is CriticalKind.MAX:
            out.append(Advisory("A2", "interior (advisory)", p.to_dict()))
    c = b.census
    if c is not None and c.seeds:
        detail = {"radius": c.radius, "seeds": c.seeds, "converging_fraction": c.converging_fraction,
                  "uncertainty": c.uncertainty, "cluster_count": c.cluster_count}
        if c.converging_fraction >= CENSUS_INTERIOR_FRACTION and c.cluster_count >= 1:
            out.append(Advisory("A3", "interior (advisory)", detail))
        else:
            out.append(Advisory("A3", "no open set of converging seeds observed", detail))
    return out


def _conclude(evaluations: list[CriterionResult], advisories: list[Advisory],
              transferred_from: str | None = None) -> Verdict:
    fired = [c for c in evaluations if c.held]
    proved = {c.id for c in fired if c.certified}
    interior = Status.PROVED if proved & set(I_CRITERIA) else Status.UNKNOWN
    # an open set of points flowing to the origin contains infinitely many trajectories
    t_inf = Status.PROVED if proved & set(T_CRITERIA) or interior is Status.PROVED else Status.UNKNOWN
    return Verdict(t_inf, interior, fired, advisories, evaluations, transferred_from)


def apply_ladder(bundle: InvariantBundle) -> Verdict:
    """Evaluate every criterion in the fixed order T1..T5, I1..I4.

    A criterion proves its conclusion only when it holds on certified inputs;
    one that holds on uncertified inputs is listed but proves nothing.
    """
    if bundle.rank_s is None and bundle.rank_omega is None and not bundle.conversions:
        bundle = duality_convert(bundle)
    evaluations = _t_side(bundle) + _i_side(bundle)
    return _conclude(evaluations, _advisories(bundle))


def transfer_equivalence(source_verdict: Verdict, phi: PolyMapGerm, target_verdict: Verdict | None = None,
                         source_label: str = "f") -> Verdict:
    """Verdict for g = f o phi.

    The component-count criteria T1 and I3 are invariant under right
    equivalence, so when they fired on f they carry over to g.  Everything
    else comes from ``target_verdict``, the ladder run on g itself.
    """
    n = phi.n_vars
    tag = f"transferred from {source_label} via right-equivalence (n = {n})"
    own = list(target_verdict.evaluations) if target_verdict is not None else []
    own_ids = {c.id for c in own if c.held and c.certified}
    moved = []
    for c in source_verdict.fired_criteria:
        if c.id in TRANSFERABLE and c.certified and c.id not in own_ids:
            moved.append(CriterionResult(c.id, CriterionOutcome.FIRED, dict(c.inputs), True, tag))
    advisories = list(target_verdict.advisories) if target_verdict is not None else []
    verdict = _conclude(own + moved, advisories, transferred_from=tag if moved else None)
    if not moved and target_verdict is not None:
        verdict.transferred_from = target_verdict.transferred_from
    return verdict
