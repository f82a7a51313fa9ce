"""Shared fixtures: transform contexts, seeded generators and an isolated cache."""

import numpy as np
import pytest

from mtensor.app.config import settings
from mtensor.app.tensor.tensor_core import MTensorContext
from mtensor.app.tensor.transform import Tensor3, make_custom, make_dft, make_m1, make_random_invertible

# M used with the 3x3x3 worked example; its inverse is [[1,0,0],[0,-1,1],[-1,1,0]].
# Under it the example's hat slices have eigenvalues {0, 1, 2}, {0, 1, 2} and {0, 1, 3},
# so Z0 = 0.1624 * A leaves every nonzero eigenvalue of I - A Z0 within 0.84 of zero.
# Under the DFT and M1 the same gamma diverges; see TestWorkedExamplesUnderRandomTransforms.
EXAMPLE_M = np.array([[1.0, 0.0, 0.0], [1.0, 0.0, 1.0], [1.0, 1.0, 1.0]])


@pytest.fixture(autouse=True)
def isolated_cache(tmp_path, monkeypatch):
    monkeypatch.setattr(settings.bench, "cache_dir", str(tmp_path / "cache"))
    monkeypatch.setattr(settings.bench, "n_jobs", 1)
    yield


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def make_context(kind: str, p: int, seed: int = 3) -> MTensorContext:
    if kind == "dft":
        return MTensorContext(transform=make_dft(p))
    if kind == "m1":
        return MTensorContext(transform=make_m1(p))
    if kind == "random":
        return MTensorContext(transform=make_random_invertible(p, seed))
    raise ValueError(kind)


@pytest.fixture(params=["dft", "m1", "random"])
def ctx3(request):
    """One context per transform kind with p = 3."""
    return make_context(request.param, 3)


@pytest.fixture
def dft4():
    return MTensorContext(transform=make_dft(4))


@pytest.fixture
def example_ctx():
    return MTensorContext(transform=make_custom(EXAMPLE_M))


def random_tensor(rng: np.random.Generator, m: int, n: int, p: int) -> Tensor3:
    return Tensor3(rng.standard_normal((p, m, n)))


def rel_err(a: Tensor3, b: Tensor3) -> float:
    return float(np.linalg.norm(a.data - b.data) / max(np.linalg.norm(b.data), 1e-300))
