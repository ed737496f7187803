"""Exact evaluators for the deterministic elimination sequences and the
regret guarantees of the phased and optimistic agents.

Everything here is pure arithmetic on a structure: no simulation, no
randomness.  Bound evaluators return a :class:`BoundReport` with the
per-arm breakdown so callers can see where a guarantee comes from.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .gaps import (
    Structure,
    classify,
    delta_floor,
    gamma_star,
    model_gap,
    models_with_optimal_arm,
    optimal_arm_set,
    optimistic_models,
    psi,
    true_gaps,
)


def k_beta(beta: float, n: int) -> float | None:
    """Slack constant of the elimination sequences.

    Returns ``None`` for ``beta <= 1`` where the expression divides by
    zero (the sequences are undefined there).
    """
    if n < 2:
        raise ValueError(f"k_beta needs n >= 2, got {n}")
    if beta <= 1.0:
        return None
    return math.sqrt((beta + 1.0) ** 2 + 1.0 / math.log(n)) / (beta - 1.0)


@dataclass(frozen=True)
class TheorySequences:
    """Deterministic phase-by-phase elimination schedule of a structure.

    ``active[h]`` is the arm set the phased agent is guaranteed to be
    playing in phase ``h`` (under the usual concentration event),
    ``removed[h]`` the arms it discards at the end of phase ``h``, and
    ``surely_active[h]`` the arms whose removal threshold provably has not
    been reached yet.  ``informative_arms[i]`` is the arm set whose pulls
    suffice to discard every model favouring arm ``i``.
    """

    alpha: float
    beta: float
    n: int
    k_beta: float
    active: tuple[frozenset[int], ...]
    removed: tuple[frozenset[int], ...]
    surely_active: tuple[frozenset[int], ...]
    last_active_phase: dict[int, int]
    informative_arms: dict[int, frozenset[int]]
    unresolved: frozenset[int]
    alpha_beta_mismatch: bool

    @property
    def phase_count(self) -> int:
        return len(self.removed)


def deterministic_sequences(
    structure: Structure, alpha: float, beta: float, n: int
) -> TheorySequences:
    """Compute the elimination schedule for given exploration parameters.

    Phases are evaluated in increasing order.  Arms still active at phase
    ``h`` have not left yet, so the staleness discount applied to their
    separation is 1; arms already removed are discounted by how long ago
    they stopped being pulled.  Arms that survive past phase
    ``ceil(log2(n))`` cannot be resolved at this horizon and are reported
    in ``unresolved`` with the cap as their last phase.
    """
    if beta <= 1.0:
        raise ValueError("deterministic sequences need beta > 1; k_beta diverges at beta = 1")
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if n < 2:
        raise ValueError(f"n must be at least 2, got {n}")
    kb = k_beta(beta, n)
    assert kb is not None
    i_star = structure.optimal_arm
    true = structure.true_model
    a_star = sorted(optimal_arm_set(structure))
    favouring = {i: sorted(models_with_optimal_arm(structure, i)) for i in a_star}
    cap = math.ceil(math.log2(n))

    active: list[frozenset[int]] = [frozenset(a_star)]
    removed: list[frozenset[int]] = []
    surely: list[frozenset[int]] = []
    last: dict[int, int] = {}

    for h in range(cap + 1):
        arms_h = active[h]
        if h == 0:
            under = frozenset(a_star)
        else:
            under = set()
            for i in arms_h:
                score = math.inf
                for k in favouring[i]:
                    model = structure.models[k]
                    worst = 0.0
                    for j in a_star:
                        h_j = last.get(j)
                        stale = 0 if h_j is None else max(h - h_j - 1, 0)
                        g = model_gap(model, true, j) / (2.0 ** stale)
                        if g > worst:
                            worst = g
                    if worst < score:
                        score = worst
                if 2.0 ** (-(h - 1)) > kb * score:
                    under.add(i)
            under = frozenset(under)
        surely.append(under)

        threshold = 2.0 ** (-h)
        gone = set()
        for i in arms_h:
            score = math.inf
            probe = sorted(under | {i})
            for k in favouring[i]:
                model = structure.models[k]
                worst = 0.0
                for j in probe:
                    g = model_gap(model, true, j)
                    if g > worst:
                        worst = g
                if worst < score:
                    score = worst
            if threshold <= score:
                gone.add(i)
        removed.append(frozenset(gone))
        for i in gone:
            last[i] = h
        nxt = frozenset(arms_h - gone)
        active.append(nxt)
        if nxt <= {i_star}:
            break

    unresolved = frozenset(active[-1] - {i_star})
    final_h = len(removed) - 1
    for i in unresolved:
        last[i] = final_h

    informative = {
        i: frozenset(surely[last[i]] | {i}) for i in a_star if i != i_star and i in last
    }

    return TheorySequences(
        alpha=alpha,
        beta=beta,
        n=n,
        k_beta=kb,
        active=tuple(active),
        removed=tuple(removed),
        surely_active=tuple(surely),
        last_active_phase=last,
        informative_arms=informative,
        unresolved=unresolved,
        alpha_beta_mismatch=(alpha != beta * beta),
    )


@dataclass(frozen=True)
class BoundTerm:
    arm: int
    gap: float
    separation: float
    value: float
    note: str = ""


@dataclass(frozen=True)
class BoundReport:
    """A regret guarantee broken into per-arm terms plus an additive constant.

    ``value`` always equals the sum of the term values plus ``constant``
    (infinities propagate).  ``flags`` carries validity information such as
    violated premises; a flagged report still evaluates the formula.
    """

    name: str
    value: float
    terms: tuple[BoundTerm, ...]
    constant: float
    params: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "value": self.value,
            "constant": self.constant,
            "params": dict(self.params),
            "flags": dict(self.flags),
            "terms": [
                {
                    "arm": t.arm,
                    "gap": t.gap,
                    "separation": t.separation,
                    "value": t.value,
                    "note": t.note,
                }
                for t in self.terms
            ],
        }


def _sum_terms(terms: list[BoundTerm], constant: float) -> float:
    total = constant
    for t in terms:
        total += t.value
    return total


def sae_bound(structure: Structure, sequences: TheorySequences, n: int) -> BoundReport:
    """Phased-elimination regret guarantee at horizon ``n``.

    Needs the elimination schedule because each arm's term is measured on
    the arms still informative when it gets discarded.  Stated for
    ``alpha = beta**2`` and ``n >= 64``; an alpha mismatch is flagged, a
    too-small horizon is an error.
    """
    if n < 64:
        raise ValueError(f"the guarantee requires n >= 64, got {n}")
    if n != sequences.n:
        raise ValueError(f"sequences were computed for n = {sequences.n}, not {n}")
    beta = sequences.beta
    c_beta = 4.0 * (1.0 + beta * beta)
    i_star = structure.optimal_arm
    a_star = sorted(optimal_arm_set(structure))
    gaps = true_gaps(structure)
    log_n = math.log(n)

    flags: dict = {}
    if sequences.alpha_beta_mismatch:
        flags["alpha_beta_mismatch"] = True
    if sequences.unresolved:
        flags["unresolved_arms"] = sorted(sequences.unresolved)

    terms = []
    for i in a_star:
        if i == i_star:
            continue
        separation, _ = psi(structure, models_with_optimal_arm(structure, i),
                            sequences.informative_arms[i])
        if separation == 0.0:
            value = math.inf
            note = "zero separation on the informative arms; term unbounded"
            flags["unbounded_term"] = True
        else:
            value = c_beta * gaps[i] * log_n / separation
            note = ""
        terms.append(BoundTerm(arm=i, gap=gaps[i], separation=separation,
                               value=value, note=note))

    constant = 2.0 * len(a_star)
    return BoundReport(
        name="phased_elimination",
        value=_sum_terms(terms, constant),
        terms=tuple(terms),
        constant=constant,
        params={"alpha": sequences.alpha, "beta": beta, "n": n, "c_beta": c_beta},
        flags=flags,
    )


def asae_bound(structure: Structure, n: int) -> BoundReport:
    """Anytime phased-elimination guarantee at horizon ``n``.

    Fixed constants; each arm is measured on the pair (itself, optimal arm)
    so no schedule is needed.  Stated for doubling periods with alpha = 2,
    beta = 1.
    """
    if n < 2:
        raise ValueError(f"n must be at least 2, got {n}")
    i_star = structure.optimal_arm
    a_star = sorted(optimal_arm_set(structure))
    gaps = true_gaps(structure)
    log_n = math.log(n)

    flags: dict = {}
    terms = []
    for i in a_star:
        if i == i_star:
            continue
        separation, _ = psi(structure, models_with_optimal_arm(structure, i), (i, i_star))
        if separation == 0.0:
            value = math.inf
            note = "zero separation on the informative arms; term unbounded"
            flags["unbounded_term"] = True
        else:
            value = 192.0 * gaps[i] * log_n / separation
            note = ""
        terms.append(BoundTerm(arm=i, gap=gaps[i], separation=separation,
                               value=value, note=note))

    constant = 6.0 * len(a_star)
    return BoundReport(
        name="anytime_phased_elimination",
        value=_sum_terms(terms, constant),
        terms=tuple(terms),
        constant=constant,
        params={"n": n},
        flags=flags,
    )


def asae_constant_bound(structure: Structure) -> BoundReport:
    """Horizon-independent guarantee, available when every model that
    disagrees about the optimal arm is separated on the optimal arm itself.
    """
    g_star = gamma_star(structure)
    if g_star == 0.0:
        raise ValueError(
            "constant-regret guarantee needs a positive separation on the optimal arm "
            "(some model disagrees about the optimal arm yet matches its mean exactly)"
        )
    i_star = structure.optimal_arm
    a_star = sorted(optimal_arm_set(structure))
    gaps = true_gaps(structure)

    if math.isinf(g_star):
        t_bar = 2.0 * len(a_star)
    else:
        t_bar = 20.0 * len(a_star) * math.log(2.0) / (g_star * g_star) + 2.0 * len(a_star)

    flags: dict = {}
    terms = []
    log_t_bar = math.log(t_bar) if t_bar > 0 else 0.0
    for i in a_star:
        if i == i_star:
            continue
        separation, _ = psi(structure, models_with_optimal_arm(structure, i), (i, i_star))
        if separation == 0.0:
            value = math.inf
            note = "zero separation on the informative arms; term unbounded"
            flags["unbounded_term"] = True
        else:
            value = 480.0 * gaps[i] * log_t_bar / separation
            note = ""
        terms.append(BoundTerm(arm=i, gap=gaps[i], separation=separation,
                               value=value, note=note))

    constant = 9.0 * len(a_star)
    return BoundReport(
        name="anytime_constant_regret",
        value=_sum_terms(terms, constant),
        terms=tuple(terms),
        constant=constant,
        params={"gamma_star": g_star, "t_bar": t_bar},
        flags=flags,
    )


def sucb_bound(structure: Structure, n: int, c: float = 8.0, c_prime: float = 0.0) -> BoundReport:
    """Optimistic-agent guarantee with the leading constant surfaced.

    Each potentially-optimal arm pays ``c * gap * log(n)`` divided by its
    separation measured on the arm itself over its optimistic models.  The
    default ``c = 8`` comes from a confidence width of sqrt(2 log t / T)
    with the worst-case factor 4 from two-sided concentration.  Arms with
    no optimistic models contribute nothing: optimism never selects them.
    """
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    if c <= 0:
        raise ValueError(f"c must be positive, got {c}")
    i_star = structure.optimal_arm
    a_star = sorted(optimal_arm_set(structure))
    gaps = true_gaps(structure)
    log_n = math.log(n)

    flags: dict = {}
    terms = []
    for i in a_star:
        if i == i_star:
            continue
        optimistic = optimistic_models(structure, i)
        if not optimistic:
            terms.append(BoundTerm(arm=i, gap=gaps[i], separation=math.inf, value=0.0,
                                   note="never pulled under optimism"))
            continue
        separation, _ = psi(structure, optimistic, (i,))
        if separation == 0.0:
            value = math.inf
            note = "optimistic model indistinguishable on the arm itself"
            flags["unbounded_term"] = True
        else:
            value = c * gaps[i] * log_n / separation
            note = ""
        terms.append(BoundTerm(arm=i, gap=gaps[i], separation=separation,
                               value=value, note=note))

    return BoundReport(
        name="optimistic_confidence_set",
        value=_sum_terms(terms, c_prime),
        terms=tuple(terms),
        constant=c_prime,
        params={"n": n, "c": c, "c_prime": c_prime},
        flags=flags,
    )


def ucb_reference_bound(structure: Structure, n: int, c: float = 8.0,
                        c_prime: float = 0.0) -> BoundReport:
    """Structure-blind index-policy reference: ``c log n / gap`` per arm.

    Sums over every arm with a positive gap, not just the potentially
    optimal ones, since a blind policy explores them all.
    """
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    if c <= 0:
        raise ValueError(f"c must be positive, got {c}")
    gaps = true_gaps(structure)
    log_n = math.log(n)
    terms = []
    for i, gap in enumerate(gaps):
        if gap > 0.0:
            terms.append(BoundTerm(arm=i, gap=gap, separation=gap * gap,
                                   value=c * log_n / gap))
    return BoundReport(
        name="index_policy_reference",
        value=_sum_terms(terms, c_prime),
        terms=tuple(terms),
        constant=c_prime,
        params={"n": n, "c": c, "c_prime": c_prime},
        flags={},
    )


def omega(x: float) -> int:
    """Smallest natural number y such that z >= x * log(z) for every z >= y.

    For x <= e the inequality holds everywhere, so y = 1.  Beyond that the
    answer is the ceiling of the larger root of z = x log z, found by
    bisection and then verified against the neighbouring integers.
    """
    if not x > 0 or math.isnan(x):
        raise ValueError(f"omega needs x > 0, got {x}")
    if x <= math.e:
        return 1

    def f(z: float) -> float:
        return z - x * math.log(z)

    lo = x
    hi = 2.0 * x * math.log(x)
    while f(hi) < 0.0:  # defensive; the bracket is valid for all x > e
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    y = math.ceil(hi - 1e-12)
    while y - 1 >= x and f(float(y - 1)) >= 0.0:
        y -= 1
    while f(float(y)) < 0.0:
        y += 1
    return max(y, 1)


def lower_bound_cr(structure: Structure, c: float = 8.0, n: int | None = None) -> BoundReport:
    """Regret floor for structures in the constant-regret family.

    ``c`` is the concentration constant of the optimistic agent the floor
    is stated against (default 8, matching :func:`sucb_bound`).  The report
    carries two validity flags: the horizon must exceed ``1 / gamma_star**2``
    and ``gamma_star`` must be small against the aggregate squared gaps.
    When the logarithmic factor is not positive the floor degenerates to 0
    and is flagged vacuous.
    """
    record = classify(structure)
    if not record.in_constant_regret:
        raise ValueError("structure is not in the constant-regret family")
    g_star = gamma_star(structure)
    if math.isinf(g_star):
        raise ValueError("no model disagrees about the optimal arm; the floor is undefined")
    if not 0.0 < g_star < 1.0:
        raise ValueError(f"the floor needs 0 < gamma_star < 1, got {g_star}")

    i_star = structure.optimal_arm
    a_star = sorted(optimal_arm_set(structure))
    gaps = true_gaps(structure)
    delta = delta_floor(structure)

    d = sum(1.0 / (gaps[i] * gaps[i]) for i in range(structure.arm_count) if i != i_star)
    omega_value = omega(2.0 * c * d)
    gamma_ok = g_star <= math.sqrt(1.0 / omega_value)
    horizon_ok = None if n is None else (n >= 1.0 / (g_star * g_star))

    log_arg = (delta * delta) / (
        4.0 * math.e ** 2 * c * g_star * g_star * math.log(1.0 / (g_star * g_star))
    )
    vacuous = log_arg <= 1.0
    log_factor = 0.0 if vacuous else math.log(log_arg)

    terms = []
    for i in a_star:
        if i == i_star:
            continue
        separation, _ = psi(structure, models_with_optimal_arm(structure, i), (i,))
        value = 0.0 if vacuous else gaps[i] / (2.0 * separation) * log_factor
        terms.append(BoundTerm(arm=i, gap=gaps[i], separation=separation, value=value))

    flags = {
        "vacuous": vacuous,
        "gamma_star_small_enough": gamma_ok,
    }
    if horizon_ok is not None:
        flags["horizon_large_enough"] = horizon_ok

    return BoundReport(
        name="constant_regret_floor",
        value=_sum_terms(terms, 0.0),
        terms=tuple(terms),
        constant=0.0,
        params={
            "c": c,
            "n": n,
            "gamma_star": g_star,
            "delta_floor": delta,
            "aggregate_inverse_gaps": d,
            "omega": omega_value,
            "log_argument": log_arg,
        },
        flags=flags,
    )


def confidence_failure_bound(n: int, alpha: float, beta: float, a_star_count: int) -> float:
    """Probability bound on the true model ever leaving the phased agent's
    confidence set within a run of horizon ``n``.
    """
    if n < 2:
        raise ValueError(f"n must be at least 2, got {n}")
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if beta < 1:
        raise ValueError(f"beta must be at least 1, got {beta}")
    if a_star_count < 0:
        raise ValueError(f"a_star_count must be non-negative, got {a_star_count}")
    return a_star_count * n ** (-2.0 * alpha / (beta * beta)) * (math.log2(n) + 2.0) ** 2
