import numpy as np
import pytest

from dashrl.data import Dataset, build_profile, load_dataset
from pathlib import Path

DATA_DIR = Path(__file__).parent.parent / "data"


@pytest.fixture(scope="session")
def cars() -> Dataset:
    return load_dataset(DATA_DIR / "cars.csv")


@pytest.fixture(scope="session")
def movies() -> Dataset:
    return load_dataset(DATA_DIR / "movies.csv")


@pytest.fixture(scope="session")
def weather() -> Dataset:
    return load_dataset(DATA_DIR / "seattle-weather.csv")


def make_dataset(columns: dict[str, list], name: str = "synthetic") -> Dataset:
    """Dataset straight from python lists (type inference still applies)."""
    n_rows = len(next(iter(columns.values())))
    profiles = [build_profile(cname, values) for cname, values in columns.items()]
    return Dataset(profiles, n_rows=n_rows, name=name)


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def mixed_small() -> Dataset:
    """4 columns (Q, N, T, Q) with a strong planted correlation q1~q2."""
    rows = 40
    r = np.random.default_rng(7)
    q1 = np.round(r.normal(50, 12, rows), 2)
    q2 = np.round(q1 * 1.8 + r.normal(0, 3, rows), 2)
    cats = [["alpha", "beta", "gamma", "delta"][i % 4] for i in range(rows)]
    dates = [f"2021-{1 + i % 12:02d}-{1 + i % 28:02d}" for i in range(rows)]
    return make_dataset(
        {"q1": list(q1), "cat": cats, "when": dates, "q2": list(q2)},
        name="mixed_small",
    )
