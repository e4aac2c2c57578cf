import hypothesis
import numpy as np
import pytest

from little_bench.domain import Distribution, ExperimentConfig, LittleInstance, Problem

hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.register_profile("thorough", max_examples=200, deadline=None)
hypothesis.settings.load_profile("fast")


@pytest.fixture
def small_example() -> LittleInstance:
    return LittleInstance(
        m=2,
        n=2,
        h=np.array([[1.0, -1.0], [2.0, 0.0]]),
        dist=Distribution.GAUSSIAN,
        seed=0,
    )


@pytest.fixture
def max_config() -> ExperimentConfig:
    return ExperimentConfig(
        problem=Problem.MAX,
        m=6,
        n=6,
        dist=Distribution.GAUSSIAN,
        trials=12,
        master_seed=1234,
    )


@pytest.fixture
def isolated_cache(monkeypatch, tmp_path):
    monkeypatch.setattr("little_bench.cache.get_cache_dir", lambda: tmp_path / "cache")
    return tmp_path / "cache"
