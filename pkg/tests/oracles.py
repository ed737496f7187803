"""Independent brute-force references for the gap and classifier quantities.

Everything here is written as plain double loops straight off the
definitions, reading only model means and the true index.  The package
implementations are tested against these for exact agreement.
"""

import math

TOL = 1e-12


def _means(structure):
    return [list(m.means) for m in structure.models]


def _argmax(row):
    best = 0
    for j in range(1, len(row)):
        if row[j] > row[best]:
            best = j
    return best


def oracle_optimal_arm_set(structure, subset=None):
    means = _means(structure)
    if subset is None:
        subset = range(len(means))
    return frozenset(_argmax(means[k]) for k in subset)


def oracle_psi(structure, subset, arms):
    means = _means(structure)
    true = means[structure.true_index]
    best_value = math.inf
    best_model = None
    for k in subset:
        worst = -math.inf
        for j in arms:
            gap = abs(means[k][j] - true[j])
            sq = gap * gap
            if sq > worst:
                worst = sq
        if worst < best_value:
            best_value = worst
            best_model = k
    return best_value, best_model


def oracle_gamma_star(structure):
    means = _means(structure)
    true = means[structure.true_index]
    i_star = _argmax(true)
    best = math.inf
    for k, row in enumerate(means):
        if _argmax(row) == i_star:
            continue
        gap = abs(row[i_star] - true[i_star])
        if gap < best:
            best = gap
    return best


def oracle_delta_floor(structure):
    means = _means(structure)
    true = means[structure.true_index]
    i_star = _argmax(true)
    best = math.inf
    for k, row in enumerate(means):
        if _argmax(row) == i_star:
            continue
        gap = row[_argmax(row)] - row[i_star]
        if gap < best:
            best = gap
    return best


def _close(a, b):
    if math.isinf(a) or math.isinf(b):
        return a == b
    return abs(a - b) <= TOL


def oracle_in_wc(structure):
    means = _means(structure)
    true = means[structure.true_index]
    i_star = _argmax(true)
    mu_star = true[i_star]
    arm_count = len(true)
    for i in range(arm_count):
        if i == i_star:
            continue
        optimistic = [k for k, row in enumerate(means)
                      if _argmax(row) == i and row[i] > mu_star]
        blind = [k for k in optimistic
                 if all(abs(means[k][j] - true[j]) <= TOL
                        for j in range(arm_count) if j != i)]
        full, _ = oracle_psi(structure, optimistic, (i,))
        restricted, _ = oracle_psi(structure, blind, (i,))
        if not _close(full, restricted):
            return False
    return True


def oracle_in_opt(structure, informative_arms):
    """Optimality predicate given per-arm elimination sets."""
    means = _means(structure)
    true = means[structure.true_index]
    i_star = _argmax(true)
    mu_star = true[i_star]
    for i in sorted(oracle_optimal_arm_set(structure)):
        if i == i_star:
            continue
        arm_set = sorted(informative_arms[i])
        favouring = [k for k, row in enumerate(means) if _argmax(row) == i]
        optimistic = [k for k in favouring if means[k][i] > mu_star]
        lhs, _ = oracle_psi(structure, optimistic, arm_set)
        rhs, _ = oracle_psi(structure, favouring, arm_set)
        if not _close(lhs, rhs):
            return False
    return True


def oracle_in_cr(structure):
    means = _means(structure)
    true = means[structure.true_index]
    i_star = _argmax(true)
    g_star = oracle_gamma_star(structure)
    for k, row in enumerate(means):
        own = _argmax(row)
        if own == i_star:
            continue
        if not _close(abs(row[i_star] - true[i_star]), g_star):
            return False
        for j in range(len(row)):
            if j in (own, i_star):
                continue
            if abs(row[j] - true[j]) > TOL:
                return False
    return True
