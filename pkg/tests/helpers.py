"""Small shared constructors for tests."""

from structbandit import BanditModel, RewardSpec, Structure


def mk(rows, true_index, reward=None):
    """Structure from a list of mean rows."""
    models = tuple(BanditModel(tuple(float(v) for v in row)) for row in rows)
    if reward is None:
        reward = RewardSpec()
    return Structure(models=models, true_index=true_index, reward=reward)


def structures_strategy(max_models=6, max_arms=4):
    """Hypothesis strategy over small valid structures."""
    from hypothesis import strategies as st

    @st.composite
    def build(draw):
        arm_count = draw(st.integers(2, max_arms))
        model_count = draw(st.integers(1, max_models))
        rows = []
        for _ in range(model_count):
            row = [draw(st.integers(0, 16)) / 20 for _ in range(arm_count)]
            best = draw(st.integers(0, arm_count - 1))
            row[best] = max(row) + draw(st.integers(1, 3)) / 20
            rows.append(row)
        true_index = draw(st.integers(0, model_count - 1))
        return mk(rows, true_index)

    return build()
