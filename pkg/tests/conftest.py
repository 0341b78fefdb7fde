import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from trimapper.core import SimulationConfig
from trimapper.training import generate_synthetic


@pytest.fixture(scope="session")
def sim_cfg():
    return SimulationConfig()


@pytest.fixture(scope="session")
def small_corpus():
    """A handful of pinned synthetic samples for unit-level checks."""
    return generate_synthetic(seed=7, n=6, size=64)


@pytest.fixture(scope="session")
def pinned_corpus():
    """The seed-0, 200-image, 64x64 corpus the acceptance criteria pin."""
    return generate_synthetic(seed=0, n=200, size=64)


@pytest.fixture(scope="session")
def policy_training(pinned_corpus, sim_cfg):
    """Seed-0 training of the small predictor under each click policy.

    Expensive (a few minutes); shared by the acceptance ordering criterion
    and the training/harness directional invariants.
    """
    from trimapper.simulation import Policy
    from trimapper.training import TrainConfig, train

    train_split = pinned_corpus[:160]
    eval_split = pinned_corpus[160:]
    cfg = TrainConfig(
        epochs=30, batch_size=8, learning_rate=2e-3, max_inner_iterations=3, rng_seed=0
    )
    results = {}
    t0 = time.perf_counter()
    for policy in (Policy.TWOCLASS, Policy.ITTS, Policy.CUPS):
        results[policy] = train(train_split, cfg, sim_cfg, policy=policy)
    elapsed = time.perf_counter() - t0
    return {
        "cfg": cfg,
        "train": train_split,
        "eval": eval_split,
        "results": results,
        "train_seconds": elapsed,
    }


def random_trimap(rng: np.random.Generator, h: int, w: int) -> np.ndarray:
    return rng.integers(0, 3, size=(h, w)).astype(np.uint8)
