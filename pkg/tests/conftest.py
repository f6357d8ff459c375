import numpy as np
import pytest

from emseg.volcore import Volume


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_u8_volume(rng, dims=(5, 7, 3), spacing=(1.0, 1.0, 1.0)) -> Volume:
    nx, ny, nz = dims
    return Volume(rng.integers(0, 256, size=(nz, ny, nx), dtype=np.uint8), spacing)


def random_mask(rng, dims=(8, 8, 3), p_fg=0.3) -> Volume:
    nx, ny, nz = dims
    return Volume((rng.random((nz, ny, nx)) < p_fg).astype(np.uint8))


def random_f32_volume(rng, dims=(6, 5, 4)) -> Volume:
    nx, ny, nz = dims
    return Volume(rng.random((nz, ny, nx)).astype(np.float32))
