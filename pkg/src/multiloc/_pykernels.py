"""Pure numpy implementations of the configuration-space kernels.

These mirror ``_ckernels.pyx`` bit for bit and are used when the compiled
extension is unavailable (or when ``MULTILOC_PURE=1``).
"""
import numpy as np

_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _mix(z):
    # splitmix64 finalizer; uint64 arithmetic wraps modulo 2**64
    z = z + _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _zigzag(c):
    c = np.asarray(c, dtype=np.int64)
    return ((c << np.int64(1)) ^ (c >> np.int64(63))).view(np.uint64)


def site_uniforms(seed, k, coords):
    """Counter-based uniforms in (0, 1), one per site.

    Parameters
    ----------
    seed : int
        Master seed in ``[0, 2**64)``.
    k : int
        Realization index.
    coords : (m, d) int64 array
        Site coordinates.

    Returns
    -------
    (m,) float64 array
    """
    coords = np.ascontiguousarray(coords, dtype=np.int64)
    m, d = coords.shape
    with np.errstate(over="ignore"):
        h = _mix(np.uint64(seed))
        h = _mix(h ^ np.uint64(k))
        h = _mix(h ^ np.uint64(d))
        h = np.full(m, h, dtype=np.uint64)
        for j in range(d):
            h = _mix(h ^ _zigzag(coords[:, j]))
    return ((h >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53


def hausdorff_matrix(a, b):
    """Pairwise Hausdorff distances between footprints.

    Parameters
    ----------
    a : (N, n, d) int64 array
    b : (M, m, d) int64 array

    Returns
    -------
    (N, M) float64 array
    """
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    out = np.empty((a.shape[0], b.shape[0]))
    chunk = max(1, 2 ** 22 // max(1, b.shape[0] * a.shape[1] * b.shape[1]))
    for i0 in range(0, a.shape[0], chunk):
        aa = a[i0:i0 + chunk]
        diff = aa[:, None, :, None, :] - b[None, :, None, :, :]
        d2 = np.einsum("ijklm,ijklm->ijkl", diff, diff)
        h2 = np.maximum(d2.min(axis=3).max(axis=2), d2.min(axis=2).max(axis=2))
        out[i0:i0 + chunk] = np.sqrt(h2.astype(np.float64))
    return out


def splitting_widths(a):
    """Largest minimum-spanning-tree edge of each configuration.

    Parameters
    ----------
    a : (N, n, d) int64 array

    Returns
    -------
    (N,) float64 array
    """
    a = np.asarray(a, dtype=np.int64)
    N, n, _ = a.shape
    if n < 2:
        return np.zeros(N)
    diff = a[:, :, None, :] - a[:, None, :, :]
    d2 = np.einsum("ijkl,ijkl->ijk", diff, diff)
    # Prim's algorithm, vectorized over configurations
    in_tree = np.zeros((N, n), dtype=bool)
    in_tree[:, 0] = True
    best = d2[:, 0, :].copy()
    worst = np.zeros(N, dtype=np.int64)
    rows = np.arange(N)
    big = np.iinfo(np.int64).max
    for _ in range(n - 1):
        cand = np.where(in_tree, big, best)
        j = cand.argmin(axis=1)
        worst = np.maximum(worst, cand[rows, j])
        in_tree[rows, j] = True
        best = np.minimum(best, d2[rows, j, :])
    return np.sqrt(worst.astype(np.float64))
