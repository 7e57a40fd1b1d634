from pathlib import Path

import numpy as np

data_for_tests_dir = Path(__file__).parent.resolve() / "data"


def gpd_sample(xi: float, beta: float, n: int, seed: int) -> np.ndarray:
    """Exact GPD draws by inverse CDF."""
    q = np.random.default_rng(seed).random(n)
    if xi == 0.0:
        return -beta * np.log1p(-q)
    return beta * ((1.0 - q) ** (-xi) - 1.0) / xi
