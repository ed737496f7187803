"""Builders for concrete structures and the structure file format.

Two hand-coded three-region / four-region demonstration structures, a
seeded random generator that plants hard-to-distinguish models next to the
true one, and JSON save/load with full validation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .gaps import BanditModel, RewardSpec, Structure

# A model whose top two means are closer than this gets its optimal arm
# nudged upward so the maximum is unique.
_TIE_WIDTH = 1e-9
_TIE_NUDGE = 1e-6


def _nudge_ties(means: list[float]) -> list[float]:
    order = sorted(range(len(means)), key=lambda i: (-means[i], i))
    if len(means) >= 2 and means[order[0]] - means[order[1]] < _TIE_WIDTH:
        means = list(means)
        means[order[0]] = min(means[order[0]] + _TIE_NUDGE, 1.0)
        if means[order[0]] - means[order[1]] < _TIE_WIDTH:
            raise ValueError(
                "tied optimal arms could not be separated by nudging "
                f"(means {means[order[0]]} and {means[order[1]]} at the clamp)"
            )
    return means


def _segment(f: float, start: float, end: float) -> float:
    return start + (end - start) * f


def build_figure_left(grid_per_region: int = 17, informative_arm2: bool = True) -> Structure:
    """Three arms whose means are piecewise linear over three parameter regions.

    Arm 0 falls from 0.85 to 0.8 in the first region, from 0.8 to 0.4 in
    the second, and stays at 0.4.  Arm 2 rises from 0.6 to 0.8, plateaus at
    0.86, then falls back from 0.8 to 0.6.  Arm 1 sits at 0.8 except in the
    middle region where it drops to 0.2; with ``informative_arm2=False``
    it is 0.8 everywhere, which removes the cheap way of recognising
    middle-region models.

    Each region contributes ``grid_per_region`` models at the midpoints of
    a uniform partition, so region endpoints (where arms tie) are never
    sampled.  The true model is the one nearest the centre of the first
    region.
    """
    if grid_per_region < 2:
        raise ValueError(f"grid_per_region must be at least 2, got {grid_per_region}")

    def arm0(region: int, f: float) -> float:
        return (_segment(f, 0.85, 0.8), _segment(f, 0.8, 0.4), 0.4)[region]

    def arm1(region: int, f: float) -> float:
        if not informative_arm2:
            return 0.8
        return (0.8, 0.2, 0.8)[region]

    def arm2(region: int, f: float) -> float:
        return (_segment(f, 0.6, 0.8), 0.86, _segment(f, 0.8, 0.6))[region]

    models = []
    for region in range(3):
        for j in range(grid_per_region):
            f = (j + 0.5) / grid_per_region
            means = _nudge_ties([arm0(region, f), arm1(region, f), arm2(region, f)])
            models.append(BanditModel(tuple(means)))

    # Model nearest the centre of region 1 (grid index closest to f = 1/2).
    true_index = min(
        range(grid_per_region),
        key=lambda j: (abs((j + 0.5) / grid_per_region - 0.5), j),
    )
    return Structure(
        models=tuple(models),
        true_index=true_index,
        reward=RewardSpec("bernoulli"),
        provenance={
            "builder": "figure_left",
            "seed": None,
            "flags": {
                "grid_per_region": grid_per_region,
                "informative_arm2": informative_arm2,
            },
        },
    )


def build_figure_right(arm1_fourth_model: float = 0.92) -> Structure:
    """Four arms, four models, one per region, constants throughout.

    The first model is the true one.  ``arm1_fourth_model`` sets the mean
    of arm 1 in the fourth model: with the default 0.92 that model is the
    most optimistic in the structure, with a low value (such as 0.2) it is
    not optimistic at all.
    """
    rows = [
        (0.8, 0.7, 0.6, 0.5),
        (0.8, 0.7, 0.84, 0.1),
        (0.8, 0.4, 0.6, 0.88),
        (0.8, float(arm1_fourth_model), 0.6, 0.5),
    ]
    models = tuple(BanditModel(tuple(_nudge_ties(list(row)))) for row in rows)
    return Structure(
        models=models,
        true_index=0,
        reward=RewardSpec("bernoulli"),
        provenance={
            "builder": "figure_right",
            "seed": None,
            "flags": {"arm1_fourth_model": float(arm1_fourth_model)},
        },
    )


@dataclass(frozen=True)
class GeneratorSpec:
    """Parameters of the random structure generator.

    ``base_model_count`` models are drawn with independent uniform means
    and one of them becomes the true model.  ``hard_model_count`` extra
    models are copies of the true model with one non-optimal arm raised
    just above the true best mean (by ``optimistic_scale`` times a uniform
    draw) and one other arm shrunk by ``shrink_factor``, which plants
    models that are optimistic yet nearly indistinguishable.
    """

    arm_count: int = 50
    base_model_count: int = 100
    hard_model_count: int = 50
    optimistic_scale: float = 0.2
    shrink_factor: float = 0.1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.arm_count < 3:
            raise ValueError(
                f"arm_count must be at least 3 so a hard model can raise one arm "
                f"and shrink another, got {self.arm_count}"
            )
        if self.base_model_count < 1:
            raise ValueError("base_model_count must be positive")
        if self.hard_model_count < 0:
            raise ValueError("hard_model_count must be non-negative")
        if not 0 < self.optimistic_scale <= 1:
            raise ValueError("optimistic_scale must be in (0, 1]")
        if not 0 < self.shrink_factor < 1:
            raise ValueError("shrink_factor must be in (0, 1)")


def generate_random(spec: GeneratorSpec) -> Structure:
    """Draw a structure from ``spec``; the same spec always yields the same
    structure, independent of platform."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(spec.seed)))
    base = rng.random((spec.base_model_count, spec.arm_count))
    true_index = int(rng.integers(spec.base_model_count))

    rows = [list(map(float, row)) for row in base]
    for k in range(len(rows)):
        rows[k] = _nudge_ties(rows[k])

    true_means = rows[true_index]
    i_star = max(range(spec.arm_count), key=lambda i: (true_means[i], -i))
    best = true_means[i_star]

    clamped: list[int] = []
    for h in range(spec.hard_model_count):
        means = list(true_means)
        raise_pool = [i for i in range(spec.arm_count) if i != i_star]
        raised = raise_pool[int(rng.integers(len(raise_pool)))]
        eps = float(rng.random())
        while eps < 1e-6:
            eps = float(rng.random())
        lifted = best + spec.optimistic_scale * eps
        if lifted > 1.0:
            lifted = 1.0
            clamped.append(spec.base_model_count + h)
        means[raised] = lifted
        shrink_pool = [i for i in range(spec.arm_count) if i not in (i_star, raised)]
        shrunk = shrink_pool[int(rng.integers(len(shrink_pool)))]
        means[shrunk] = spec.shrink_factor * means[shrunk]
        rows.append(_nudge_ties(means))

    models = tuple(BanditModel(tuple(r)) for r in rows)
    return Structure(
        models=models,
        true_index=true_index,
        reward=RewardSpec("bernoulli"),
        provenance={
            "builder": "random",
            "seed": spec.seed,
            "flags": {
                "arm_count": spec.arm_count,
                "base_model_count": spec.base_model_count,
                "hard_model_count": spec.hard_model_count,
                "optimistic_scale": spec.optimistic_scale,
                "shrink_factor": spec.shrink_factor,
                "clamped_models": clamped,
            },
        },
    )


def save_structure(structure: Structure, path) -> None:
    """Write a structure as a self-describing JSON document."""
    reward_params = {}
    if structure.reward.kind == "gaussian":
        reward_params["variance"] = structure.reward.variance
    doc = {
        "arm_count": structure.arm_count,
        "true_index": structure.true_index,
        "reward": {"kind": structure.reward.kind, "params": reward_params},
        "models": [list(model.means) for model in structure.models],
        "provenance": structure.provenance,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_structure(path) -> Structure:
    """Read and validate a structure document written by :func:`save_structure`."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: expected a JSON object at top level")
    for key in ("arm_count", "true_index", "models"):
        if key not in doc:
            raise ValueError(f"{path}: missing required field {key!r}")
    arm_count = doc["arm_count"]
    raw_models = doc["models"]
    if not isinstance(raw_models, list) or not raw_models:
        raise ValueError(f"{path}: 'models' must be a non-empty list of mean arrays")

    models = []
    for k, row in enumerate(raw_models):
        if not isinstance(row, list) or len(row) != arm_count:
            raise ValueError(
                f"{path}: model {k} has {len(row) if isinstance(row, list) else 'no'} "
                f"means, expected arm_count = {arm_count}"
            )
        for i, m in enumerate(row):
            if not isinstance(m, (int, float)) or isinstance(m, bool) or math.isnan(m):
                raise ValueError(f"{path}: model {k}, arm {i}: mean {m!r} is not a number")
            if not 0.0 <= m <= 1.0:
                raise ValueError(f"{path}: model {k}, arm {i}: mean {m} outside [0, 1]")
        try:
            models.append(BanditModel(tuple(float(m) for m in row)))
        except ValueError as exc:
            raise ValueError(f"{path}: model {k}: {exc}") from exc

    raw_reward = doc.get("reward", {"kind": "bernoulli", "params": {}})
    if not isinstance(raw_reward, dict) or "kind" not in raw_reward:
        raise ValueError(f"{path}: 'reward' must be an object with a 'kind' field")
    params = raw_reward.get("params", {})
    try:
        if raw_reward["kind"] == "gaussian":
            reward = RewardSpec("gaussian", float(params.get("variance", 1.0)))
        else:
            reward = RewardSpec(raw_reward["kind"])
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from exc

    try:
        return Structure(
            models=tuple(models),
            true_index=doc["true_index"],
            reward=reward,
            provenance=doc.get("provenance"),
        )
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from exc
