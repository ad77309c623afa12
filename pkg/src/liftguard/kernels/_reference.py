"""Pure-numpy implementations of the hot rasterization kernels.

These are the fallback used when the compiled extension is unavailable;
outputs must be bit-identical to the compiled versions.
"""
import numpy as np


def zbuffer_min(iu, iv, z, width, height):
    """Scatter depths into a (height, width) buffer keeping the minimum per pixel.

    iu/iv are integer pixel columns/rows, already clipped to the image.
    Empty pixels hold +inf.
    """
    buf = np.full((height, width), np.inf)
    np.minimum.at(buf, (iv, iu), z)
    return buf


def voxel_centroids(keys, points):
    """Average points sharing a voxel key.

    keys: (N,) integer voxel ids; points: (N, 3).  Returns centroids ordered
    by first occurrence of each key in the input.
    """
    uniq, first, inv = np.unique(keys, return_index=True, return_inverse=True)
    sums = np.zeros((len(uniq), 3))
    np.add.at(sums, inv, points)
    counts = np.bincount(inv, minlength=len(uniq)).astype(float)
    centroids = sums / counts[:, None]
    order = np.argsort(first, kind="stable")
    return centroids[order]
