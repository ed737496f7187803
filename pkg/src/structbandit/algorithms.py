"""Bandit agents and the simulation loop.

Four agents behind one select/observe interface:

* ``SaeAgent`` -- phased round-robin elimination against a fixed horizon.
* ``AsaeAgent`` -- anytime wrapper that reruns the elimination schedule over
  squashed-doubling periods, carrying the confidence set across periods.
* ``SucbAgent`` -- optimism baseline that rebuilds the model confidence set
  every step and pulls the most optimistic arm.
* ``Ucb1Agent`` -- structure-blind index baseline.

``Environment`` draws rewards for the true model; ``simulate`` runs one agent
against one environment and records pseudo-regret at checkpoints.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .gaps import RewardSpec, Structure, optimal_arm_set, true_gaps

ALGORITHMS = ("sae", "asae", "sucb", "ucb1")

_DRAW_CHUNK = 8192


@dataclass(frozen=True)
class AgentConfig:
    """Shared agent parameters.

    alpha scales every confidence radius, beta the elimination margin, eta
    the period growth exponent (ASAE only).  horizon is required by SAE;
    SUCB and UCB1 are anytime and ignore it.  sigma2, when given, switches
    the SUCB radius to its sub-Gaussian form 2*alpha*sigma2*log(t)/T.
    """

    algorithm: str
    alpha: float = 2.0
    beta: float = 1.0
    eta: float = 1.0
    horizon: int | None = None
    sigma2: float | None = None

    def __post_init__(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; expected one of {ALGORITHMS}")
        if not self.alpha > 0.0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if not self.beta >= 1.0:
            raise ValueError(f"beta must be >= 1, got {self.beta}")
        if not self.eta > 0.0:
            raise ValueError(f"eta must be > 0, got {self.eta}")
        if self.horizon is not None and self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        if self.sigma2 is not None and not self.sigma2 > 0.0:
            raise ValueError(f"sigma2 must be > 0, got {self.sigma2}")


@dataclass(frozen=True)
class AgentState:
    """Read-only diagnostic snapshot of an agent.

    period, period_horizon and phase_start_counts only carry information for
    ASAE; the other agents report period 0 / horizon None / zero counts.
    """

    pull_counts: tuple[int, ...]
    reward_sums: tuple[float, ...]
    active_models: tuple[int, ...]
    active_arms: tuple[int, ...]
    phase: int
    removal_threshold: float
    period: int
    period_horizon: int | None
    phase_start_counts: tuple[int, ...]


@dataclass(frozen=True)
class PhaseRecord:
    """State captured at the moment a phase opens (after the boundary update)."""

    period: int
    phase: int
    active_arms: tuple[int, ...]
    active_models: tuple[int, ...]
    pull_counts: tuple[int, ...]
    reward_sums: tuple[float, ...]


class _Agent:
    """Alternation bookkeeping shared by every agent."""

    def __init__(self, arm_count: int, config: AgentConfig, reward: RewardSpec | None) -> None:
        self.arm_count = arm_count
        self.config = config
        self._reward = reward
        self._pulls = [0] * arm_count
        self._rewards = [0.0] * arm_count
        self._step = 0
        self._pending: int | None = None

    def select(self) -> int:
        if self._pending is not None:
            raise RuntimeError("select called again before observe")
        arm = self._choose()
        self._pending = arm
        return arm

    def observe(self, arm: int, reward: float) -> None:
        if self._pending is None:
            raise RuntimeError("observe called before select")
        if arm != self._pending:
            raise ValueError(f"observe got arm {arm}, last selected was {self._pending}")
        self._check_reward(reward)
        self._pending = None
        self._pulls[arm] += 1
        self._rewards[arm] += reward
        self._step += 1
        self._after_observe(arm)

    def _check_reward(self, reward: float) -> None:
        if self._reward is not None and self._reward.kind == "bernoulli":
            if reward != 0.0 and reward != 1.0:
                raise ValueError(f"bernoulli reward must be 0 or 1, got {reward}")
        elif not math.isfinite(reward):
            raise ValueError(f"reward must be finite, got {reward}")

    def _choose(self) -> int:
        raise NotImplementedError

    def _after_observe(self, arm: int) -> None:
        pass

    def snapshot(self) -> AgentState:
        raise NotImplementedError


def _empirical_best(pulls: list[int], rewards: list[float]) -> int:
    """Best empirical-mean arm among pulled ones, lowest index on ties."""
    best, best_mean = -1, -math.inf
    for i, count in enumerate(pulls):
        if count == 0:
            continue
        mean = rewards[i] / count
        if mean > best_mean:
            best, best_mean = i, mean
    if best < 0:
        raise RuntimeError("no arm pulled yet")
    return best


class _EliminationAgent(_Agent):
    """Phase machinery shared by the fixed-horizon and anytime eliminators."""

    def __init__(self, structure: Structure, config: AgentConfig) -> None:
        super().__init__(structure.arm_count, config, structure.reward)
        self.structure = structure
        self._margin = (1.0 + 1.0 / config.beta) ** 2
        self._all_models = tuple(range(structure.model_count))
        self._history: list[PhaseRecord] = []

    @property
    def history(self) -> tuple[PhaseRecord, ...]:
        """One record per opened phase, in order."""
        return tuple(self._history)

    @property
    def fallback_arm(self) -> int | None:
        return self._fallback

    def _open_phase(self, period: int, phase: int) -> None:
        self._history.append(PhaseRecord(
            period=period,
            phase=phase,
            active_arms=tuple(self._active_arms),
            active_models=tuple(self._active_models),
            pull_counts=tuple(self._pulls),
            reward_sums=tuple(self._rewards),
        ))

    def _filter_models(self, base: tuple[int, ...], log_n: float) -> list[int]:
        """Models consistent with every pulled arm's empirical mean.

        Strict inequality; arms with zero pulls impose no constraint.
        """
        alpha = self.config.alpha
        constraints = []
        for i in range(self.arm_count):
            if self._pulls[i] > 0:
                mean = self._rewards[i] / self._pulls[i]
                radius = math.sqrt(alpha * log_n / self._pulls[i])
                constraints.append((i, mean, radius))
        kept = []
        for k in base:
            means = self.structure.models[k].means
            if all(abs(mean - means[i]) < radius for i, mean, radius in constraints):
                kept.append(k)
        return kept

    def _next_active_arms(self, models: list[int]) -> list[int]:
        if not models:
            return []
        keep = optimal_arm_set(self.structure, models)
        return [a for a in self._active_arms if a in keep]

    def _rr_next(self, target: int, counts) -> int:
        """Next active arm, cyclically from the phase pointer, below target."""
        arms = self._active_arms
        m = len(arms)
        for off in range(m):
            arm = arms[(self._rr_pos + off) % m]
            if counts[arm] < target:
                self._rr_pos = (self._rr_pos + off + 1) % m
                return arm
        raise RuntimeError("all active arms met the phase target; boundary was not processed")


class SaeAgent(_EliminationAgent):
    """Successive-arm-elimination agent for a known horizon.

    Pulls every active arm round-robin until its total count reaches
    ceil(alpha*log(n)*(1+1/beta)^2 / threshold^2), then rebuilds the model
    confidence set from the full model set, keeps only arms optimal for some
    surviving model, and halves the removal threshold.  A singleton active
    set is played forever; an empty one falls back to the empirical-best arm
    for the rest of the run.
    """

    def __init__(self, structure: Structure, config: AgentConfig) -> None:
        super().__init__(structure, config)
        if config.horizon is None or config.horizon < 2:
            raise ValueError("sae requires horizon >= 2")
        self._log_n = math.log(config.horizon)
        self._active_models = list(self._all_models)
        self._active_arms = sorted(optimal_arm_set(structure))
        self._phase = 0
        self._threshold = 1.0
        self._target = self._phase_target()
        self._rr_pos = 0
        self._fallback: int | None = None
        self._open_phase(0, 0)

    def _phase_target(self) -> int:
        return math.ceil(self.config.alpha * self._log_n * self._margin
                         / (self._threshold * self._threshold))

    def _choose(self) -> int:
        if self._fallback is not None:
            return self._fallback
        if len(self._active_arms) == 1:
            return self._active_arms[0]
        return self._rr_next(self._target, self._pulls)

    def _after_observe(self, arm: int) -> None:
        while (self._fallback is None and len(self._active_arms) > 1
               and all(self._pulls[a] >= self._target for a in self._active_arms)):
            self._advance_phase()

    def _advance_phase(self) -> None:
        kept = self._filter_models(self._all_models, self._log_n)
        arms = self._next_active_arms(kept)
        self._active_models = kept
        self._active_arms = arms
        self._phase += 1
        self._threshold *= 0.5
        self._target = self._phase_target()
        self._rr_pos = 0
        if not arms:
            self._fallback = _empirical_best(self._pulls, self._rewards)
        self._open_phase(0, self._phase)

    def snapshot(self) -> AgentState:
        return AgentState(
            pull_counts=tuple(self._pulls),
            reward_sums=tuple(self._rewards),
            active_models=tuple(self._active_models),
            active_arms=tuple(self._active_arms),
            phase=self._phase,
            removal_threshold=self._threshold,
            period=0,
            period_horizon=None,
            phase_start_counts=(0,) * self.arm_count,
        )


class AsaeAgent(_EliminationAgent):
    """Anytime eliminator: elimination periods with carried confidence sets.

    Period k spans absolute steps (n_{k-1}, n_k] with n_0 = 2 and
    n_{k+1} = ceil(n_k^(1+eta)).  Each period reruns the elimination
    schedule with horizon n_k: the removal threshold restarts at 1 but pull
    counts never reset, so a phase whose target
    ceil(alpha*log(n_k)*(1+1/beta)^2/threshold^2) is already met by the
    carried totals passes instantly and only refilters the model set.  The
    filter starts from the set carried out of the previous period, with
    radii sqrt(alpha*log(n_k)/T_i) over total pull counts.  Active arms are
    recomputed from the carried set at each period start, so arms can
    re-enter there (never inside a period).
    """

    def __init__(self, structure: Structure, config: AgentConfig) -> None:
        super().__init__(structure, config)
        self._period = 0
        self._period_horizon = 2
        self._log_nk = math.log(2.0)
        self._base_models = list(self._all_models)
        self._active_models = list(self._all_models)
        self._active_arms = sorted(optimal_arm_set(structure))
        self._period_start = [0] * self.arm_count
        self._phase = 0
        self._threshold = 1.0
        self._target = self._phase_target()
        self._rr_pos = 0
        self._fallback: int | None = None
        self._open_phase(0, 0)

    def _phase_target(self) -> int:
        return math.ceil(self.config.alpha * self._log_nk * self._margin
                         / (self._threshold * self._threshold))

    def _choose(self) -> int:
        if self._fallback is not None:
            return self._fallback
        if len(self._active_arms) == 1:
            return self._active_arms[0]
        arms = self._active_arms
        m = len(arms)
        for off in range(m):
            arm = arms[(self._rr_pos + off) % m]
            if self._pulls[arm] < self._target:
                self._rr_pos = (self._rr_pos + off + 1) % m
                return arm
        raise RuntimeError("all active arms met the phase target; boundary was not processed")

    def _after_observe(self, arm: int) -> None:
        self._catch_up()
        if self._step >= self._period_horizon:
            self._advance_period()
            self._catch_up()

    def _catch_up(self) -> None:
        # phases already paid for by carried counts pass back to back,
        # each one still refiltering the model set
        while (self._fallback is None and len(self._active_arms) > 1
               and all(self._pulls[a] >= self._target for a in self._active_arms)):
            self._advance_phase()

    def _advance_phase(self) -> None:
        kept = self._filter_models(tuple(self._base_models), self._log_nk)
        arms = self._next_active_arms(kept)
        self._active_models = kept
        self._active_arms = arms
        self._phase += 1
        self._threshold *= 0.5
        self._target = self._phase_target()
        self._rr_pos = 0
        if not arms:
            self._fallback = _empirical_best(self._pulls, self._rewards)
        self._open_phase(self._period, self._phase)

    def _advance_period(self) -> None:
        self._period += 1
        nxt = math.ceil(self._period_horizon ** (1.0 + self.config.eta))
        # guard against a float-precision stall for tiny eta
        self._period_horizon = max(int(nxt), self._period_horizon + 1)
        self._log_nk = math.log(self._period_horizon)
        carried = self._active_models if self._active_models else list(self._all_models)
        self._base_models = list(carried)
        self._active_models = list(carried)
        self._active_arms = sorted(optimal_arm_set(self.structure, carried))
        self._period_start = list(self._pulls)
        self._phase = 0
        self._threshold = 1.0
        self._target = self._phase_target()
        self._rr_pos = 0
        self._fallback = None
        self._open_phase(self._period, 0)

    def snapshot(self) -> AgentState:
        return AgentState(
            pull_counts=tuple(self._pulls),
            reward_sums=tuple(self._rewards),
            active_models=tuple(self._active_models),
            active_arms=tuple(self._active_arms),
            phase=self._phase,
            removal_threshold=self._threshold,
            period=self._period,
            period_horizon=self._period_horizon,
            phase_start_counts=tuple(self._period_start),
        )


class SucbAgent(_Agent):
    """Structured UCB: per-step confidence set plus optimistic arm choice.

    At step t the active models are those within radius
    sqrt(coeff*log(max(t,2))/T_i) of every pulled arm's empirical mean,
    where coeff = alpha, or 2*alpha*sigma2 when sigma2 is set.  The arm with
    the largest supremum mean over active models is pulled, lowest index on
    ties; an empty set falls back to the empirical-best pulled arm.
    """

    def __init__(self, structure: Structure, config: AgentConfig) -> None:
        super().__init__(structure.arm_count, config, structure.reward)
        self.structure = structure
        if config.sigma2 is None:
            self._coeff = config.alpha
        else:
            self._coeff = 2.0 * config.alpha * config.sigma2
        self._means = np.array([m.means for m in structure.models], dtype=np.float64)
        self._pull_arr = np.zeros(structure.arm_count, dtype=np.float64)
        self._sum_arr = np.zeros(structure.arm_count, dtype=np.float64)
        self._model_mask = np.ones(structure.model_count, dtype=bool)

    def _choose(self) -> int:
        pulled = self._pull_arr > 0.0
        if pulled.any():
            counts = self._pull_arr[pulled]
            emp = self._sum_arr[pulled] / counts
            rad2 = self._coeff * math.log(max(self._step + 1, 2)) / counts
            diff = self._means[:, pulled] - emp
            mask = (diff * diff < rad2).all(axis=1)
        else:
            mask = np.ones(len(self._means), dtype=bool)
        self._model_mask = mask
        if not mask.any():
            return _empirical_best(self._pulls, self._rewards)
        sup = self._means[mask].max(axis=0)
        return int(np.argmax(sup))

    def _after_observe(self, arm: int) -> None:
        self._pull_arr[arm] += 1.0
        self._sum_arr[arm] = self._rewards[arm]

    def snapshot(self) -> AgentState:
        return AgentState(
            pull_counts=tuple(self._pulls),
            reward_sums=tuple(self._rewards),
            active_models=tuple(int(k) for k in np.flatnonzero(self._model_mask)),
            active_arms=tuple(range(self.arm_count)),
            phase=0,
            removal_threshold=1.0,
            period=0,
            period_horizon=None,
            phase_start_counts=(0,) * self.arm_count,
        )


class Ucb1Agent(_Agent):
    """Plain UCB1 over arm indices; never sees the model set."""

    def __init__(self, arm_count: int, config: AgentConfig) -> None:
        super().__init__(arm_count, config, None)
        if arm_count < 1:
            raise ValueError("ucb1 requires at least one arm")
        self._pull_arr = np.zeros(arm_count, dtype=np.float64)
        self._sum_arr = np.zeros(arm_count, dtype=np.float64)

    def _choose(self) -> int:
        if self._step < self.arm_count:
            return self._step
        t = self._step + 1
        bonus = np.sqrt(self.config.alpha * math.log(t) / self._pull_arr)
        return int(np.argmax(self._sum_arr / self._pull_arr + bonus))

    def _after_observe(self, arm: int) -> None:
        self._pull_arr[arm] += 1.0
        self._sum_arr[arm] = self._rewards[arm]

    def snapshot(self) -> AgentState:
        return AgentState(
            pull_counts=tuple(self._pulls),
            reward_sums=tuple(self._rewards),
            active_models=(),
            active_arms=tuple(range(self.arm_count)),
            phase=0,
            removal_threshold=1.0,
            period=0,
            period_horizon=None,
            phase_start_counts=(0,) * self.arm_count,
        )


def sae_agent(structure: Structure, config: AgentConfig) -> SaeAgent:
    return SaeAgent(structure, config)


def asae_agent(structure: Structure, config: AgentConfig) -> AsaeAgent:
    return AsaeAgent(structure, config)


def sucb_agent(structure: Structure, config: AgentConfig) -> SucbAgent:
    return SucbAgent(structure, config)


def ucb1_agent(arm_count: int, config: AgentConfig) -> Ucb1Agent:
    return Ucb1Agent(arm_count, config)


def make_agent(structure: Structure, config: AgentConfig) -> _Agent:
    """Build the agent named by config.algorithm."""
    if config.algorithm == "sae":
        return SaeAgent(structure, config)
    if config.algorithm == "asae":
        return AsaeAgent(structure, config)
    if config.algorithm == "sucb":
        return SucbAgent(structure, config)
    return Ucb1Agent(structure.arm_count, config)


class Environment:
    """Reward source for the true model of a structure.

    Draws are buffered in fixed-size chunks from a counter-based generator,
    so a given seed always yields the same reward stream.  An explicit
    reward spec overrides the structure's (Gaussian support for the
    lower-bound construction).
    """

    def __init__(self, structure: Structure, seed: int | None = 0,
                 reward: RewardSpec | None = None) -> None:
        self.structure = structure
        self.seed = seed
        self.reward = reward if reward is not None else structure.reward
        if self.reward.kind == "gaussian" and not self.reward.variance > 0.0:
            raise ValueError("gaussian reward requires variance > 0")
        self._means = structure.true_model.means
        self._sigma = math.sqrt(self.reward.variance)
        self._rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
        self._buf = np.empty(0)
        self._pos = 0

    @property
    def arm_count(self) -> int:
        return self.structure.arm_count

    def _refill(self) -> None:
        if self.reward.kind == "bernoulli":
            self._buf = self._rng.random(_DRAW_CHUNK)
        else:
            self._buf = self._rng.standard_normal(_DRAW_CHUNK)
        self._pos = 0

    def pull(self, arm: int) -> float:
        if self._pos == len(self._buf):
            self._refill()
        draw = self._buf[self._pos]
        self._pos += 1
        if self.reward.kind == "bernoulli":
            return 1.0 if draw < self._means[arm] else 0.0
        return float(self._means[arm] + self._sigma * draw)


@dataclass(frozen=True)
class RunResult:
    """One seeded trajectory: regret at each checkpoint plus final pulls.

    elapsed and actions are excluded from equality so that identical seeded
    runs compare equal regardless of scheduling; actions holds the per-step
    arm log and is only filled in audit mode.
    """

    algorithm: str
    checkpoints: tuple[int, ...]
    regret: tuple[float, ...]
    pull_counts: tuple[int, ...]
    seed: int | None
    elapsed: float = field(default=0.0, compare=False)
    actions: tuple[int, ...] | None = field(default=None, compare=False)

    def final_regret(self) -> float:
        return self.regret[-1]


def simulate(agent, environment: Environment, horizon: int,
             checkpoints=None, audit: bool = False) -> RunResult:
    """Run one agent/environment pair for `horizon` steps.

    Regret is pseudo-regret: the running sum of the true model's gaps at the
    pulled arms, not realized-reward regret.  Checkpoints must be sorted and
    within the horizon; the default is the single final step.  audit keeps
    the full per-step arm log (small horizons only).
    """
    if agent.arm_count != environment.arm_count:
        raise ValueError(f"agent has {agent.arm_count} arms, environment {environment.arm_count}")
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    if checkpoints is None:
        checkpoints = (horizon,)
    cps = [int(c) for c in checkpoints]
    if any(b < a for a, b in zip(cps, cps[1:])):
        raise ValueError("checkpoints must be sorted")
    if cps and (cps[0] < 1 or cps[-1] > horizon):
        raise ValueError("checkpoints must lie in [1, horizon]")
    gaps = true_gaps(environment.structure)
    start = time.perf_counter()
    regret = 0.0
    out = []
    actions = [] if audit else None
    pos = 0
    for t in range(1, horizon + 1):
        arm = agent.select()
        reward = environment.pull(arm)
        agent.observe(arm, reward)
        regret += gaps[arm]
        if actions is not None:
            actions.append(arm)
        while pos < len(cps) and cps[pos] == t:
            out.append(regret)
            pos += 1
    return RunResult(
        algorithm=agent.config.algorithm,
        checkpoints=tuple(cps),
        regret=tuple(out),
        pull_counts=agent.snapshot().pull_counts,
        seed=environment.seed,
        elapsed=time.perf_counter() - start,
        actions=None if actions is None else tuple(actions),
    )
