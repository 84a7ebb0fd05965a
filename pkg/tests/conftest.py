import numpy as np
import pytest


@pytest.fixture(scope="session", autouse=True)
def _isolated_cache(tmp_path_factory):
    """Keep grid-front caches inside the test session, away from the home dir."""
    import os
    cache = tmp_path_factory.mktemp("front_cache")
    old = os.environ.get("DECOEVO_CACHE_DIR")
    os.environ["DECOEVO_CACHE_DIR"] = str(cache)
    yield
    if old is None:
        os.environ.pop("DECOEVO_CACHE_DIR", None)
    else:
        os.environ["DECOEVO_CACHE_DIR"] = old


def make_individual(objectives, cv=0.0, x=None):
    from decoevo.model import Individual
    objectives = np.asarray(objectives, dtype=float)
    if x is None:
        x = np.zeros(2)
    return Individual(x=np.asarray(x, dtype=float), objectives=objectives,
                      constraints=np.empty(0), cv=float(cv))


@pytest.fixture
def individual_factory():
    return make_individual
