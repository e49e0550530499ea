import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))
sys.path.insert(1, str(Path(__file__).parent.parent / "src"))  # run without install

from easygt import save_image, save_mask
from easygt.phantom import PhantomSpec, generate_phantom


def small_phantom(seed: int, lobes: int = 1, size: int = 96):
    """A quick low-resolution phantom for workflow tests."""
    spec = PhantomSpec(width=size, height=size, lobes=lobes, seed=seed)
    return generate_phantom(spec)


@pytest.fixture(scope="session")
def phantom_pair():
    """One mid-size phantom image with its exact ground truth."""
    return generate_phantom(PhantomSpec(width=192, height=192, lobes=2, seed=11))


@pytest.fixture()
def session_folder(tmp_path):
    """A fresh annotation folder with five small phantom images."""
    for i in range(5):
        img, _ = small_phantom(seed=100 + i, lobes=1 + i % 3)
        save_image(img, tmp_path / f"cell_{i:02d}.png")
    return tmp_path


def write_phantom_folder(folder: Path, count: int, seed: int, size: int = 96) -> None:
    """img_NNNN.png / gt_NNNN.png pairs, the CLI phantom layout."""
    folder.mkdir(parents=True, exist_ok=True)
    child = np.random.SeedSequence(seed).generate_state(count, dtype=np.uint64)
    for i in range(count):
        img, truth = generate_phantom(
            PhantomSpec(width=size, height=size, lobes=1 + i % 5, seed=int(child[i]))
        )
        save_image(img, folder / f"img_{i + 1:04d}.png")
        save_mask(truth, folder / f"gt_{i + 1:04d}.png")
