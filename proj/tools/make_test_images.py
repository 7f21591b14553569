"""Writes the PPM fixtures in tests/data from scikit-image's astronaut photo (public domain)."""
import pathlib

import numpy as np
from skimage import data, transform

out = pathlib.Path(__file__).resolve().parent.parent / "tests" / "data"
out.mkdir(parents=True, exist_ok=True)


def write_ppm(path, img):
    img = np.asarray(img, dtype=np.uint8)
    h, w, _ = img.shape
    path.write_bytes(b"P6\n%d %d\n255\n" % (w, h) + img.tobytes())


full = data.astronaut()
write_ppm(out / "astronaut_crop256.ppm", full[20:276, 120:376])
small = transform.resize(full, (64, 64), anti_aliasing=True, preserve_range=True)
write_ppm(out / "astronaut64.ppm", np.rint(small))
