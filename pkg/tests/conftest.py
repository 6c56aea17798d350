import numpy as np
import pytest

from arnsim import dataio

CRITERIA: dict[int, tuple[bool, str]] = {}


def record(n: int, ok: bool, detail: str) -> None:
    CRITERIA[n] = (ok, detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}")


@pytest.fixture
def criterion():
    return record


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        ok, detail = CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def mnist5k() -> dataio.Dataset:
    """The 5000-sample MNIST subset bundled with mlxtend (500 per digit)."""
    mlx = pytest.importorskip("mlxtend.data")
    X, y = mlx.mnist_data()
    images = np.asarray(X, dtype=np.uint8).reshape(-1, 28, 28)
    return dataio.Dataset(images, np.asarray(y, dtype=np.int64))


@pytest.fixture(scope="session")
def mnist_csv(mnist5k, tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "mnist5k.csv"
    dataio.save_csv(mnist5k, path)
    return path
