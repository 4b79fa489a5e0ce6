"""Chains of polyhedral spaces standing in for a Gurarii space, and the
constructions run inside them: the extension oracle, approximate inverses,
the back-and-forth between two chains, and the universal embedding.

A :class:`ChainSpace` is a presentation ``S_0 <= S_1 <= ... <= S_K`` (exact
isometric inclusions) that the oracle keeps extending on top.  Subspaces of
a chain are recorded against the stage they were built in and transported
to the current top on demand, so they stay valid while the chain grows.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from . import linalg as la
from .amalgam import (AmalgamCertificate, ExtensionCertificate, amalgamate, extend_isometry,
                      pushout_l1, trivial_amalgam)
from .errors import (CertificateError, ChainExhausted, DefectTooLarge, DimensionMismatch,
                     ScheduleError)
from .linalg import ZERO, q, qstr
from .operators import (DefectCertificate, LinearMap, compose, defect, difference, invert,
                        map_distance, op_norm)
from .spaces import PolyhedralSpace, same_ball, subspace, zero_space

log = logging.getLogger(__name__)

__all__ = [
    "ChainSpace", "ChainSubspace", "EpsilonSchedule", "schedule_make", "step_bound",
    "gurarii_extend", "approximate_inverse", "back_and_forth", "embed_universal",
    "BackAndForthTrace", "UniversalTrace",
]


# ---------------------------------------------------------------------------
# chains

@dataclass(eq=False)
class ChainSpace:
    """An increasing chain of spaces with exact isometric inclusions.

    ``finite=True`` means the last presented stage is the whole space, so
    requests beyond the presentation reuse it; otherwise running past the
    presentation raises :class:`ChainExhausted`.
    """
    stages: list
    inclusions: list
    name: str = ""
    finite: bool = True
    presentation: int = 0
    oracle_log: list = field(default_factory=list)

    def __post_init__(self):
        if not self.stages:
            raise ValueError("a chain needs at least one stage")
        if len(self.inclusions) != len(self.stages) - 1:
            raise ValueError("need exactly one inclusion between consecutive stages")
        for k, inc in enumerate(self.inclusions):
            if not (same_ball(inc.domain, self.stages[k]) and same_ball(inc.codomain, self.stages[k + 1])):
                raise DimensionMismatch(f"inclusion {k} does not connect stages {k} and {k + 1}")
            if defect(inc).epsilon_star != 0:
                raise CertificateError(f"inclusion {k} -> {k + 1} is not an isometry")
        self.presentation = self.presentation or len(self.stages)

    @classmethod
    def from_space(cls, space: PolyhedralSpace, name: str = "", with_zero: bool = False) -> "ChainSpace":
        """The one-stage chain of a finite-dimensional space (``{0} <= X`` if ``with_zero``)."""
        if not with_zero:
            return cls([space], [], name=name)
        zero = zero_space()
        inc = LinearMap(zero, space, la.zeros(space.dimension, 0))
        return cls([zero, space], [inc], name=name)

    @property
    def top(self) -> PolyhedralSpace:
        return self.stages[-1]

    @property
    def top_index(self) -> int:
        return len(self.stages) - 1

    def transport(self, stage: int, to: Optional[int] = None) -> tuple:
        """Matrix of the composed inclusion ``stage -> to`` (default: the top)."""
        to = self.top_index if to is None else to
        m = la.identity(self.stages[stage].dimension)
        for k in range(stage, to):
            m = la.matmul(self.inclusions[k].matrix, m, bcols=self.stages[stage].dimension) \
                if self.inclusions[k].matrix else la.zeros(0, self.stages[stage].dimension)
        return m

    def inclusion_between(self, a: int, b: int) -> LinearMap:
        return LinearMap(self.stages[a], self.stages[b], self.transport(a, b))

    def presentation_stage(self, n: int) -> int:
        if n < self.presentation:
            return n
        if self.finite:
            return self.presentation - 1
        raise ChainExhausted(
            f"chain {self.name or '<unnamed>'} exhausted: stage {n} requested, "
            f"only {self.presentation} presented")

    def append(self, space: PolyhedralSpace, inclusion: LinearMap, entry: dict):
        if defect(inclusion).epsilon_star != 0:
            raise CertificateError("new stage inclusion is not an isometry")
        self.stages.append(space)
        self.inclusions.append(inclusion)
        self.oracle_log.append(entry)


@dataclass(frozen=True, eq=False)
class ChainSubspace:
    """``span(basis)`` inside ``chain.stages[stage]`` with the induced norm."""
    chain: ChainSpace
    stage: int
    basis: tuple  # columns, in coordinates of the stage
    space: PolyhedralSpace

    @classmethod
    def build(cls, chain: ChainSpace, stage: int, columns, name: str = "") -> "ChainSubspace":
        space, inc = subspace(chain.stages[stage], columns, name)
        return cls(chain, stage, inc.matrix, space)

    @property
    def dimension(self) -> int:
        return self.space.dimension

    def columns_in_top(self) -> list:
        m = la.matmul(self.chain.transport(self.stage), self.basis, bcols=self.dimension) \
            if self.chain.top.dimension else ()
        return la.columns(m, self.dimension)

    def embedding(self) -> LinearMap:
        """Isometric embedding of the subspace into the current top."""
        cols = self.columns_in_top()
        return LinearMap(self.space, self.chain.top, la.from_columns(cols, self.chain.top.dimension))


def _coords(cols_basis: list, vectors: list, dim: int) -> tuple:
    """Matrix whose columns are the coordinates of ``vectors`` in ``cols_basis``."""
    b = la.from_columns(cols_basis, dim)
    coords = [la.solve(b, v) for v in vectors]
    return la.from_columns(coords, len(cols_basis))


def _enlarge(chain: ChainSpace, keep: list, extra: list, name: str) -> ChainSubspace:
    # keep comes first so the previous subspace sits on the leading coordinates
    cands = keep + extra
    chosen = la.independent_subset(cands)
    if chosen[:len(keep)] != list(range(len(keep))):
        raise CertificateError("previous basis is not independent inside the enlarged subspace")
    return ChainSubspace.build(chain, chain.top_index, [cands[i] for i in chosen], name)


def _leading_inclusion(a: PolyhedralSpace, b: PolyhedralSpace) -> LinearMap:
    return LinearMap(a, b, la.vstack(la.identity(a.dimension),
                                     la.zeros(b.dimension - a.dimension, a.dimension)))


# ---------------------------------------------------------------------------
# the oracle

@dataclass(frozen=True)
class OracleResult:
    W: PolyhedralSpace
    h: LinearMap
    stage: int


def gurarii_extend(chain: ChainSpace, X: ChainSubspace, Z: PolyhedralSpace, k: LinearMap, delta) -> OracleResult:
    """Serve an extension request: ``X <= top`` and ``k: X -> Z`` isometric.

    Appends a stage ``W`` containing the old top isometrically and returns
    ``h: Z -> W`` with ``h k`` equal to the inclusion of ``X``.  The request
    is served exactly (``h`` is an isometry), which meets any ``delta > 0``.
    """
    delta = q(delta)
    if delta <= 0:
        raise ValueError("delta must be positive")
    if X.chain is not chain:
        raise ValueError("subspace belongs to a different chain")
    if not (same_ball(k.domain, X.space) and same_ball(k.codomain, Z)):
        raise DimensionMismatch("k must map the subspace into Z")
    if defect(k).epsilon_star != 0:
        raise CertificateError("extension request with a non-isometric embedding k")
    e = X.embedding()
    old = chain.top
    if Z.dimension == X.dimension:
        h = compose(e, invert(k))
        W, inc = old, LinearMap(old, old, la.identity(old.dimension))
    else:
        po = pushout_l1(X.space, Z, k, old, e)
        W, h, inc = po.W, po.f_prime, po.y_embed
    if compose(h, k).matrix != compose(inc, e).matrix:
        raise CertificateError("oracle map does not fix the subspace")
    if defect(h).epsilon_star != 0:
        raise CertificateError("oracle map is not an isometry")
    chain.append(W, inc, {"stage": chain.top_index + 1, "request_dim": Z.dimension,
                          "fixed_dim": X.dimension, "delta": qstr(delta)})
    log.debug("chain %s: stage %d of dimension %d", chain.name, chain.top_index, W.dimension)
    return OracleResult(W, LinearMap(Z, W, h.matrix), chain.top_index)


# ---------------------------------------------------------------------------
# approximate inverse

@dataclass(frozen=True)
class InverseCertificate:
    g: LinearMap           # Y -> chain top at `stage`
    stage: int
    eps: Fraction
    delta: Fraction
    eps_prime: Fraction
    delta_prime: Fraction
    distance: Fraction     # ||g f - id_X||
    amalgam: AmalgamCertificate

    def checks(self) -> dict[str, bool]:
        return {
            "eps_prime_below_eps": self.eps_prime < self.eps,
            "delta_prime_below_delta": ZERO < self.delta_prime < self.delta,
            "bookkeeping": (1 + self.delta_prime) * self.eps_prime < self.eps,
            "g_defect": defect(self.g).epsilon_star <= self.delta_prime,
            "distance_bound": self.distance <= (1 + self.delta_prime) * self.eps_prime,
            "distance_below_eps": self.distance < self.eps,
        }


def approximate_inverse(E: ChainSpace, X: ChainSubspace, f: LinearMap, eps, delta,
                        shortcut: bool = True) -> InverseCertificate:
    """A delta-isometry ``g: Y -> E`` with ``||g f - id_X|| < eps``.

    ``eps' = (defect(f) + eps) / 2`` and
    ``delta' = min(delta / 2, (eps / eps' - 1) / 2)``, so that
    ``(1 + delta') eps' < eps``.  ``f`` is amalgamated at ``eps'`` and the
    amalgam pushed into ``E`` through the oracle.  With ``shortcut``, an
    isometric ``f`` is amalgamated trivially.
    """
    eps, delta = q(eps), q(delta)
    if delta <= 0:
        raise ValueError("delta must be positive")
    if not same_ball(f.domain, X.space):
        raise DimensionMismatch("f must be defined on the subspace X")
    star = defect(f).epsilon_star
    if eps <= star:
        raise DefectTooLarge(
            f"eps = {qstr(eps)} must exceed the isometry defect {qstr(star)}", star)
    eps_p = (star + eps) / 2
    delta_p = min(delta / 2, (eps / eps_p - 1) / 2)
    if not (1 + delta_p) * eps_p < eps:
        raise CertificateError("could not choose delta' with (1 + delta') eps' < eps")
    if shortcut and star == 0:
        am = trivial_amalgam(f, eps_p)
    else:
        am = amalgamate(X.space, f.codomain, f, eps_p)
    res = gurarii_extend(E, X, am.Z, am.i, delta_p)
    g = compose(res.h, am.j)
    dist = map_distance(compose(g, f), X.embedding())
    cert = InverseCertificate(g, res.stage, eps, delta, eps_p, delta_p, dist, am)
    failed = [k for k, ok in cert.checks().items() if not ok]
    if failed:
        raise CertificateError(f"approximate inverse failed: {', '.join(failed)}")
    return cert


# ---------------------------------------------------------------------------
# schedules

def step_bound(a, b) -> Fraction:
    """``a + 2ab + b``: the drift allowed between consecutive maps."""
    return a + 2 * a * b + b


@dataclass(frozen=True)
class EpsilonSchedule:
    """Geometric schedule ``eps_n = eps0 * ratio^n`` checked against the summability budget.

    ``total`` is the exact value of ``sum_{n>=0} (eps_n + 2 eps_n eps_{n+1} + eps_{n+1})``:
    the stored terms give the first ``depth`` summands and ``tail_bound``
    the rest in closed form.
    """
    target_eps: Fraction
    eps0: Fraction
    ratio: Fraction
    depth: int
    terms: tuple
    step_bounds: tuple
    tail_bound: Fraction
    total: Fraction

    @property
    def slack(self) -> Fraction:
        return self.target_eps - self.total

    @property
    def budget_lhs(self) -> Fraction:
        """``2 eps0 eps1 + eps1 + sum_{n>=1} (...)``, to be compared with ``target - eps0``."""
        return self.total - self.eps0

    def holds(self) -> bool:
        return self.budget_lhs < self.target_eps - self.eps0


def _tail(eps0: Fraction, r: Fraction, start: int) -> Fraction:
    # sum over n >= start of eps_n + eps_{n+1} + 2 eps_n eps_{n+1}
    return (eps0 * r ** start / (1 - r) + eps0 * r ** (start + 1) / (1 - r)
            + 2 * eps0 ** 2 * r ** (2 * start + 1) / (1 - r ** 2))


def schedule_make(target_eps, eps0=None, ratio=Fraction(1, 4), depth: int = 6) -> EpsilonSchedule:
    """Build and verify a geometric schedule; defaults ``eps0 = target/10``, ratio 1/4, depth 6.

    Raises :class:`ScheduleError` carrying the exact deficit when the
    budget fails.
    """
    target = q(target_eps)
    eps0 = target / 10 if eps0 is None else q(eps0)
    r = q(ratio)
    if target <= 0 or eps0 <= 0:
        raise ValueError("target_eps and eps0 must be positive")
    if not 0 < r < 1:
        raise ValueError("ratio must lie strictly between 0 and 1")
    if depth < 0:
        raise ValueError("depth must be non-negative")
    terms = tuple(eps0 * r ** n for n in range(depth + 1))
    bounds = tuple(step_bound(terms[n], terms[n + 1]) for n in range(depth))
    tail = _tail(eps0, r, depth)
    sched = EpsilonSchedule(target, eps0, r, depth, terms, bounds, tail, sum(bounds, ZERO) + tail)
    if not sched.holds():
        deficit = sched.budget_lhs - (target - eps0)
        raise ScheduleError(
            f"summability budget fails: left side exceeds target - eps0 by {qstr(deficit)}", deficit)
    return sched


# ---------------------------------------------------------------------------
# back and forth

@dataclass(frozen=True)
class StepRecord:
    n: int
    eps_n: Fraction
    eps_next: Fraction
    f_n: LinearMap          # X_n -> Y_n
    g_n: LinearMap          # Y_n -> X_{n+1}
    f_next: LinearMap       # X_{n+1} -> Y_{n+1}
    incl_X: LinearMap       # X_n -> X_{n+1}
    incl_Y: LinearMap       # Y_n -> Y_{n+1}
    defect_f: DefectCertificate
    defect_g: DefectCertificate
    cond3: tuple            # (value, witness) of ||g_n f_n - id||
    cond4: tuple            # (value, witness) of ||f_{n+1} g_n - id||
    drift: tuple            # (value, witness) of ||f_{n+1}|X_n - f_n||
    drift_bound: Fraction
    inverse_g: InverseCertificate
    inverse_f: InverseCertificate

    def checks(self) -> dict[str, bool]:
        return {
            "cond1": self.defect_f.epsilon_star < self.eps_n,
            "cond2": self.defect_g.epsilon_star < self.eps_next,
            "cond3": self.cond3[0] <= self.eps_n,
            "cond4": self.cond4[0] <= self.eps_next,
            "dagger": self.drift[0] <= self.drift_bound,
            "incl_X_isometry": defect(self.incl_X).epsilon_star == 0,
            "incl_Y_isometry": defect(self.incl_Y).epsilon_star == 0,
        }


@dataclass(frozen=True)
class BackAndForthTrace:
    schedule: EpsilonSchedule
    f0: LinearMap
    steps: tuple
    h: LinearMap                 # f_N : X_N -> Y_N
    defect_h: DefectCertificate
    X_to_top: LinearMap          # X_0 -> X_N
    Y_to_top: LinearMap          # Y_0 -> Y_N
    final_distance: tuple        # (value, witness) of ||h|X - f||

    @property
    def drifts(self) -> list:
        return [s.drift[0] for s in self.steps]

    def checks(self) -> dict[str, bool]:
        out = {}
        for s in self.steps:
            for k, ok in s.checks().items():
                out[f"step{s.n}.{k}"] = ok
        sched = self.schedule
        partial = ZERO
        budget_ok = True
        for n, d in enumerate(self.drifts):
            partial += d
            budget_ok &= partial <= sum(sched.step_bounds[: n + 1], ZERO)
        tail = sched.tail_bound
        out["schedule"] = sched.holds()
        out["partial_sums"] = budget_ok
        out["final.cond1"] = self.defect_h.epsilon_star < sched.terms[-1]
        out["final.telescoped"] = self.final_distance[0] <= partial
        out["final.budget"] = partial + tail < sched.target_eps
        out["final.distance"] = self.final_distance[0] < sched.target_eps
        return out


def back_and_forth(E: ChainSpace, F: ChainSpace, X: ChainSubspace, f: LinearMap,
                   schedule: EpsilonSchedule, shortcut: bool = True) -> BackAndForthTrace:
    """Run the alternating construction to ``schedule.depth`` and certify every step.

    ``X`` is a subspace of ``E`` and ``f: X -> F.stages[0]`` an
    ``eps_0``-isometry.  Step ``n`` produces ``g_n`` (an approximate inverse
    of ``f_n`` into ``E``), enlarges ``X_{n+1}`` by ``g_n[Y_n]`` and the next
    presented stage of ``E``, then produces ``f_{n+1}`` symmetrically.
    ``E`` and ``F`` may be the same chain object.
    """
    if X.chain is not E:
        raise ValueError("X must be a subspace of E")
    if not same_ball(f.domain, X.space) or not same_ball(f.codomain, F.stages[0]):
        raise DimensionMismatch("f must map X into the first stage of F")
    eps = schedule.terms
    star = defect(f).epsilon_star
    if not star < eps[0]:
        raise DefectTooLarge(
            f"seed defect {qstr(star)} is not below eps_0 = {qstr(eps[0])}", star)
    n_x = X.dimension
    Y0 = ChainSubspace.build(F, 0, la.columns(f.matrix, n_x))
    f0 = LinearMap(X.space, Y0.space, la.identity(n_x))
    Xn, Yn, fn = X, Y0, f0
    xs_to = LinearMap(X.space, X.space, la.identity(n_x))
    ys_to = LinearMap(Y0.space, Y0.space, la.identity(n_x))
    steps = []
    for n in range(schedule.depth):
        en, en1 = eps[n], eps[n + 1]
        inv_g = approximate_inverse(E, Xn, fn, en, en1, shortcut)
        stage_cols = la.columns(E.transport(E.presentation_stage(n + 1)),
                                E.stages[E.presentation_stage(n + 1)].dimension)
        Xn1 = _enlarge(E, Xn.columns_in_top(),
                       la.columns(inv_g.g.matrix, Yn.dimension) + stage_cols, f"X{n + 1}")
        incl_X = _leading_inclusion(Xn.space, Xn1.space)
        gn = LinearMap(Yn.space, Xn1.space,
                       _coords(Xn1.columns_in_top(), la.columns(inv_g.g.matrix, Yn.dimension),
                               E.top.dimension))
        inv_f = approximate_inverse(F, Yn, gn, en1, en1, shortcut)
        stage_cols = la.columns(F.transport(F.presentation_stage(n + 1)),
                                F.stages[F.presentation_stage(n + 1)].dimension)
        Yn1 = _enlarge(F, Yn.columns_in_top(),
                       la.columns(inv_f.g.matrix, Xn1.dimension) + stage_cols, f"Y{n + 1}")
        incl_Y = _leading_inclusion(Yn.space, Yn1.space)
        fn1 = LinearMap(Xn1.space, Yn1.space,
                        _coords(Yn1.columns_in_top(), la.columns(inv_f.g.matrix, Xn1.dimension),
                                F.top.dimension))
        drift = op_norm(difference(compose(fn1, incl_X), compose(incl_Y, fn)))
        rec = StepRecord(
            n, en, en1, fn, gn, fn1, incl_X, incl_Y, defect(fn), defect(gn),
            op_norm(difference(compose(gn, fn), incl_X)),
            op_norm(difference(compose(fn1, gn), incl_Y)),
            drift, step_bound(en, en1), inv_g, inv_f)
        failed = [k for k, ok in rec.checks().items() if not ok]
        if failed:
            raise CertificateError(f"back-and-forth step {n} failed: {', '.join(failed)}")
        log.info("step %d: dim X=%d dim Y=%d drift=%s", n, Xn1.dimension, Yn1.dimension,
                 qstr(drift[0]))
        steps.append(rec)
        xs_to = compose(incl_X, xs_to)
        ys_to = compose(incl_Y, ys_to)
        Xn, Yn, fn = Xn1, Yn1, fn1
    final = op_norm(difference(compose(fn, xs_to), compose(ys_to, f0)))
    trace = BackAndForthTrace(schedule, f0, tuple(steps), fn, defect(fn), xs_to, ys_to, final)
    failed = [k for k, ok in trace.checks().items() if not ok]
    if failed:
        raise CertificateError(f"back-and-forth trace failed: {', '.join(failed)}")
    return trace


# ---------------------------------------------------------------------------
# universality

@dataclass(frozen=True)
class UniversalStep:
    n: int
    X_n: PolyhedralSpace
    X_next: PolyhedralSpace
    incl: LinearMap                 # X_n -> X_{n+1}
    local: PolyhedralSpace          # span of f_n[X_n] and f_{n+1}[X_{n+1}] in G
    f_n_local: LinearMap            # X_n -> local
    f_next_local: LinearMap         # X_{n+1} -> local
    defect_next: DefectCertificate
    drift: tuple                    # (value, witness)
    extension: ExtensionCertificate

    @property
    def threshold(self) -> Fraction:
        return Fraction(1, 2 ** (self.n + 1))

    @property
    def drift_bound(self) -> Fraction:
        return (1 + Fraction(1, 2 ** (self.n + 1))) * Fraction(1, 2 ** self.n)

    def checks(self) -> dict[str, bool]:
        return {
            "isometry_threshold": self.defect_next.epsilon_star < self.threshold,
            "drift_strict": self.drift[0] < self.drift_bound,
            "drift_double": self.drift_bound <= 2 * Fraction(1, 2 ** self.n),
            "extension_below_eps": self.extension.distance < Fraction(1, 2 ** self.n),
        }


@dataclass(frozen=True)
class UniversalTrace:
    steps: tuple
    maps: tuple        # (stage of G, matrix into that stage) for f_0 .. f_N

    def map_in_top(self, G: ChainSpace, n: int) -> tuple:
        """Matrix of ``f_n`` as a map into the current top of ``G``."""
        stage, m = self.maps[n]
        ncols = len(m[0]) if m else 0
        return la.matmul(G.transport(stage), m, bcols=ncols) if G.top.dimension else ()

    def checks(self) -> dict[str, bool]:
        out = {}
        for s in self.steps:
            for k, ok in s.checks().items():
                out[f"step{s.n}.{k}"] = ok
        return out


def embed_universal(X_chain: ChainSpace, G: ChainSpace, depth: int, shortcut: bool = True) -> UniversalTrace:
    """Maps ``f_n: X_n -> G`` with ``f_n`` a 2^-n-isometry and
    ``||f_{n+1}|X_n - f_n|| < (1 + 2^-(n+1)) 2^-n``.

    ``X_chain`` must start at the zero space; ``f_0 = 0``.
    """
    if X_chain.stages[0].dimension != 0:
        raise ValueError("the chain to embed must start with the zero space")
    maps = [(G.top_index, la.zeros(G.top.dimension, 0))]
    steps = []
    for n in range(depth):
        eps = Fraction(1, 2 ** n)
        a, b = X_chain.presentation_stage(n), X_chain.presentation_stage(n + 1)
        Xn, Xn1 = X_chain.stages[a], X_chain.stages[b]
        incl = X_chain.inclusion_between(a, b)
        stage, m = maps[n]
        fn_top = la.matmul(G.transport(stage), m, bcols=Xn.dimension) if G.top.dimension else ()
        fn_cols = la.columns(fn_top, Xn.dimension)
        Y = ChainSubspace.build(G, G.top_index, fn_cols)
        fnY = LinearMap(Xn, Y.space, la.identity(Xn.dimension))
        ext = extend_isometry(Xn, Xn1, incl, Y.space, fnY, eps, shortcut)
        res = gurarii_extend(G, Y, ext.Y1, ext.y_embed, Fraction(1, 2 ** (n + 1)))
        f_next = compose(res.h, ext.g)
        maps.append((G.top_index, f_next.matrix))
        # witness space: both maps land in a common finite-dimensional subspace of G
        old_cols = la.columns(la.matmul(G.transport(stage), m, bcols=Xn.dimension)
                              if G.top.dimension else (), Xn.dimension)
        new_cols = la.columns(f_next.matrix, Xn1.dimension)
        cands = new_cols + old_cols
        chosen = la.independent_subset(cands)
        local = ChainSubspace.build(G, G.top_index, [cands[i] for i in chosen], f"V{n}")
        basis = [cands[i] for i in chosen]
        fn1_local = LinearMap(Xn1, local.space, _coords(basis, new_cols, G.top.dimension))
        fn_local = LinearMap(Xn, local.space, _coords(basis, old_cols, G.top.dimension))
        drift = op_norm(difference(compose(fn1_local, incl), fn_local))
        step = UniversalStep(n, Xn, Xn1, incl, local.space, fn_local, fn1_local,
                             defect(fn1_local), drift, ext)
        failed = [k for k, ok in step.checks().items() if not ok]
        if failed:
            raise CertificateError(f"universality step {n} failed: {', '.join(failed)}")
        steps.append(step)
    return UniversalTrace(tuple(steps), tuple(maps))
