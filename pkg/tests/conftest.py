"""Shared dataset fixtures.

Iris and wine are the real sklearn tables written to CSV with a trailing
label column.  Titanic is schema-exact synthetic data (the canonical 12
Kaggle columns, 891 rows, missing values in Age/Cabin/Embarked).  MNIST
is a synthetic IDX pair with the real magic numbers and dimensions —
random pixels, since only format and registry conformance are under test.
"""

import struct
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # make `oracles` importable

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def criterion_report():
    """Collect one PASS/FAIL line per acceptance check and echo it live."""

    def record(tag: str, ok: bool, detail: str) -> bool:
        line = f"criterion {tag}: {'PASS' if ok else 'FAIL'} - {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line, flush=True)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def iris_csv(tmp_path_factory) -> Path:
    from sklearn.datasets import load_iris

    d = load_iris()
    path = tmp_path_factory.mktemp("iris") / "iris.csv"
    with open(path, "w") as fh:
        fh.write(",".join(list(d.feature_names) + ["species"]) + "\n")
        for x, y in zip(d.data, d.target):
            fh.write(",".join(f"{v:.1f}" for v in x) + f",{int(y)}\n")
    return path


@pytest.fixture(scope="session")
def wine_csv(tmp_path_factory) -> Path:
    from sklearn.datasets import load_wine

    d = load_wine()
    path = tmp_path_factory.mktemp("wine") / "wine.csv"
    with open(path, "w") as fh:
        fh.write(",".join(list(d.feature_names) + ["class"]) + "\n")
        for x, y in zip(d.data, d.target):
            fh.write(",".join(repr(float(v)) for v in x) + f",{int(y)}\n")
    return path


@pytest.fixture(scope="session")
def titanic_csv(tmp_path_factory) -> Path:
    rng = np.random.default_rng(4242)
    path = tmp_path_factory.mktemp("titanic") / "titanic.csv"
    header = (
        "PassengerId,Survived,Pclass,Name,Sex,Age,SibSp,Parch,"
        "Ticket,Fare,Cabin,Embarked"
    )
    ports = np.array(["S", "C", "Q"])
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for pid in range(1, 892):
            survived = int(rng.uniform() < 0.38)
            pclass = int(rng.integers(1, 4))
            sex = "male" if rng.uniform() < 0.65 else "female"
            name = f'"Passenger {pid}, Mx. Test"'  # comma forces quoting
            age = "" if rng.uniform() < 0.20 else f"{rng.uniform(1, 80):.1f}"
            sibsp = int(rng.integers(0, 4))
            parch = int(rng.integers(0, 3))
            ticket = f"T{rng.integers(10000, 99999)}"
            fare = f"{rng.uniform(5, 300):.4f}"
            cabin = "" if rng.uniform() < 0.77 else f"C{rng.integers(1, 150)}"
            port = "" if rng.uniform() < 0.002 else ports[rng.integers(0, 3)]
            fh.write(
                f"{pid},{survived},{pclass},{name},{sex},{age},{sibsp},"
                f"{parch},{ticket},{fare},{cabin},{port}\n"
            )
    return path


def _write_idx(path: Path, magic: int, dims: tuple[int, ...], payload: np.ndarray):
    with open(path, "wb") as fh:
        fh.write(struct.pack(">i", magic))
        for d in dims:
            fh.write(struct.pack(">i", d))
        fh.write(payload.astype(np.uint8).tobytes())


@pytest.fixture(scope="session")
def mnist_dir(tmp_path_factory) -> Path:
    rng = np.random.default_rng(99)
    root = tmp_path_factory.mktemp("mnist")
    images = rng.integers(0, 256, size=(60000, 28, 28), dtype=np.uint8)
    labels = rng.integers(0, 10, size=60000, dtype=np.uint8)
    _write_idx(root / "train-images-idx3-ubyte", 0x803, (60000, 28, 28), images)
    _write_idx(root / "train-labels-idx1-ubyte", 0x801, (60000,), labels)
    return root
