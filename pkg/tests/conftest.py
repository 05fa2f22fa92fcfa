import hypothesis
import numpy as np
import pytest

hypothesis.settings.register_profile(
    "softorder", deadline=None, max_examples=40, print_blob=True
)
hypothesis.settings.load_profile("softorder")


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def spaced_scores(rng, n: int, min_gap: float = 0.1) -> np.ndarray:
    """Random scores whose pairwise gaps are at least ``min_gap``, shuffled."""
    gaps = min_gap + rng.uniform(0.0, 0.5, size=n)
    values = np.cumsum(gaps) + rng.uniform(-1.0, 1.0)
    return rng.permutation(values)
