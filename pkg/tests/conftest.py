import numpy as np
import pytest
from PIL import Image

from simcull.fingerprint import ImageFingerprint, TILES


def write_image(path, array):
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.asarray(array, dtype=np.uint8)).save(path)
    return path


def solid_image(path, width, height, color):
    arr = np.empty((height, width, 3), dtype=np.uint8)
    arr[:] = color
    return write_image(path, arr)


def random_fingerprint(rng, entry_id=0, digest=None):
    tiles = rng.integers(0, 256, size=(TILES, 3)).astype(np.uint8)
    return ImageFingerprint(entry_id=entry_id, width=100, height=100,
                            tiles=tiles,
                            digest=digest or f"d{entry_id:08d}")


def uniform_fingerprint(value, entry_id=0, digest=None):
    tiles = np.full((TILES, 3), value, dtype=np.uint8)
    return ImageFingerprint(entry_id=entry_id, width=100, height=100,
                            tiles=tiles,
                            digest=digest or f"d{entry_id:08d}")


def fake_index(n=None, tags=None):
    """Index of placeholder entries for matcher/grouping tests.

    ``tags`` is an optional list of (SetTag, ClassLabel) per entry.
    """
    from simcull.dataset_index import (ClassLabel, DatasetIndex, ImageEntry,
                                       SetTag)
    if tags is None:
        tags = [(SetTag.UNTAGGED, ClassLabel.UNLABELLED)] * n
    entries = [
        ImageEntry(id=i, path=f"/fake/{i:04d}.png", set_tag=tag,
                   class_label=label, byte_size=0, mtime=0.0)
        for i, (tag, label) in enumerate(tags)]
    return DatasetIndex(entries=entries)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
