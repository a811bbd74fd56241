"""Distance computations: periodic wrap metric and mesh geodesics.

Geodesic distances use per-source fast marching over the triangle mesh
(first-order accurate); dense matrices are cached in a little-endian
binary file keyed by a hash of the mesh.
"""

import hashlib
import logging
import math
import os
import struct

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from ..errors import GeometryError

log = logging.getLogger(__name__)

GEODESIC_MAGIC = b"NFRBFGD1"


def periodic_distance(x, y, period: float = 1.0) -> np.ndarray:
    """Shortest distance on the flat 2-torus of the given period.

    Broadcasts over leading axes; the last axis holds the 2 coordinates.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    d = x - y
    d -= period * np.round(d / period)
    return np.sqrt(np.sum(d * d, axis=-1))


def mesh_hash(points: np.ndarray, triangles: np.ndarray) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(points, dtype=np.float64).tobytes())
    h.update(np.ascontiguousarray(triangles, dtype=np.int64).tobytes())
    return h.hexdigest()[:16]


# ---------------------------------------------------------------------------
# fast marching


def _fmm_source(src, pts, tris, vt_ptr, vt_dat, out):
    n = pts.shape[0]
    inf = 1.0e300
    for i in range(n):
        out[i] = inf
    frozen = np.zeros(n, dtype=np.uint8)
    cap = 32 * n + 64
    hk = np.empty(cap, dtype=np.float64)
    hv = np.empty(cap, dtype=np.int64)
    hn = 0
    out[src] = 0.0
    hk[0] = 0.0
    hv[0] = src
    hn = 1
    while hn > 0:
        v = hv[0]
        hn -= 1
        hk[0] = hk[hn]
        hv[0] = hv[hn]
        i = 0
        while True:
            l = 2 * i + 1
            r = l + 1
            sm = i
            if l < hn and hk[l] < hk[sm]:
                sm = l
            if r < hn and hk[r] < hk[sm]:
                sm = r
            if sm == i:
                break
            hk[i], hk[sm] = hk[sm], hk[i]
            hv[i], hv[sm] = hv[sm], hv[i]
            i = sm
        if frozen[v] == 1:
            continue
        frozen[v] = 1
        for e in range(vt_ptr[v], vt_ptr[v + 1]):
            t = vt_dat[e]
            for local in range(3):
                c = tris[t, local]
                if c == v or frozen[c] == 1:
                    continue
                w = -1
                for l2 in range(3):
                    q = tris[t, l2]
                    if q != c and q != v:
                        w = q
                dx = pts[c, 0] - pts[v, 0]
                dy = pts[c, 1] - pts[v, 1]
                dz = pts[c, 2] - pts[v, 2]
                cand = out[v] + math.sqrt(dx * dx + dy * dy + dz * dz)
                if frozen[w] == 1:
                    # two-point planar update (Kimmel-Sethian)
                    ta = out[v]
                    tb = out[w]
                    av = v
                    bv = w
                    if tb < ta:
                        ta, tb = tb, ta
                        av, bv = bv, av
                    bax = pts[av, 0] - pts[c, 0]
                    bay = pts[av, 1] - pts[c, 1]
                    baz = pts[av, 2] - pts[c, 2]
                    bbx = pts[bv, 0] - pts[c, 0]
                    bby = pts[bv, 1] - pts[c, 1]
                    bbz = pts[bv, 2] - pts[c, 2]
                    b = math.sqrt(bax * bax + bay * bay + baz * baz)
                    a = math.sqrt(bbx * bbx + bby * bby + bbz * bbz)
                    if a > 0.0 and b > 0.0:
                        cosg = (bax * bbx + bay * bby + baz * bbz) / (a * b)
                        if cosg > 1.0:
                            cosg = 1.0
                        if cosg < -1.0:
                            cosg = -1.0
                        u = tb - ta
                        sin2 = 1.0 - cosg * cosg
                        qa = a * a + b * b - 2.0 * a * b * cosg
                        qb = 2.0 * b * u * (a * cosg - b)
                        qc = b * b * (u * u - a * a * sin2)
                        disc = qb * qb - 4.0 * qa * qc
                        if disc >= 0.0 and qa > 0.0:
                            tt = (-qb + math.sqrt(disc)) / (2.0 * qa)
                            if tt > u and tt > 0.0:
                                chk = b * (tt - u) / tt
                                if a * cosg < chk and (cosg <= 0.0 or chk < a / cosg):
                                    if cosg > 0.0:
                                        c2 = ta + tt
                                        if c2 < cand:
                                            cand = c2
                if cand < out[c]:
                    out[c] = cand
                    hk[hn] = cand
                    hv[hn] = c
                    i = hn
                    hn += 1
                    if hn >= cap:
                        return -1
                    while i > 0:
                        p = (i - 1) // 2
                        if hk[p] <= hk[i]:
                            break
                        hk[i], hk[p] = hk[p], hk[i]
                        hv[i], hv[p] = hv[p], hv[i]
                        i = p
    return 0


try:  # pragma: no cover - exercised implicitly
    import numba

    _fmm_compiled = numba.njit(cache=True)(_fmm_source)
except Exception:  # pragma: no cover
    _fmm_compiled = _fmm_source
    log.warning("numba unavailable; geodesic distances fall back to pure python")


def _vertex_triangle_csr(triangles: np.ndarray, n: int):
    counts = np.bincount(triangles.ravel(), minlength=n)
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=ptr[1:])
    dat = np.empty(ptr[-1], dtype=np.int64)
    cursor = ptr[:-1].copy()
    for t, tri in enumerate(triangles):
        for v in tri:
            dat[cursor[v]] = t
            cursor[v] += 1
    return ptr, dat


def geodesic_matrix(points: np.ndarray, triangles: np.ndarray, cache_dir: str | None = None) -> np.ndarray:
    """Dense symmetric first-order geodesic distance matrix of a closed mesh."""
    points = np.ascontiguousarray(points, dtype=np.float64)
    triangles = np.ascontiguousarray(triangles, dtype=np.int64)
    n = len(points)
    if cache_dir is not None:
        path = os.path.join(cache_dir, f"geodesic_{mesh_hash(points, triangles)}.bin")
        if os.path.exists(path):
            log.info("loading cached geodesic matrix from %s", path)
            return read_geodesic_cache(path)

    edges_a = triangles[:, [0, 1, 2]].ravel()
    edges_b = triangles[:, [1, 2, 0]].ravel()
    graph = coo_matrix((np.ones(len(edges_a)), (edges_a, edges_b)), shape=(n, n))
    ncomp, _ = connected_components(graph, directed=False)
    if ncomp != 1:
        raise GeometryError(f"mesh has {ncomp} connected components; geodesics undefined")

    vt_ptr, vt_dat = _vertex_triangle_csr(triangles, n)
    dist = np.empty((n, n), dtype=np.float64)
    row = np.empty(n, dtype=np.float64)
    for s in range(n):
        rc = _fmm_compiled(s, points, triangles, vt_ptr, vt_dat, row)
        if rc != 0:
            raise GeometryError("fast-marching heap overflow (mesh connectivity broken?)")
        dist[s] = row
    dist = 0.5 * (dist + dist.T)
    np.fill_diagonal(dist, 0.0)
    if cache_dir is not None:
        os.makedirs(cache_dir, exist_ok=True)
        write_geodesic_cache(path, dist)
        log.info("cached geodesic matrix at %s", path)
    return dist


def write_geodesic_cache(path: str, dist: np.ndarray) -> None:
    """Binary layout: 8 magic bytes, little-endian uint64 n, n*n little-endian doubles."""
    n = dist.shape[0]
    with open(path, "wb") as f:
        f.write(GEODESIC_MAGIC)
        f.write(struct.pack("<Q", n))
        f.write(np.ascontiguousarray(dist, dtype="<f8").tobytes())


def read_geodesic_cache(path: str) -> np.ndarray:
    with open(path, "rb") as f:
        magic = f.read(8)
        if magic != GEODESIC_MAGIC:
            raise GeometryError(f"{path} is not a geodesic cache file")
        (n,) = struct.unpack("<Q", f.read(8))
        data = np.frombuffer(f.read(8 * n * n), dtype="<f8")
    if data.size != n * n:
        raise GeometryError(f"{path} is truncated")
    return data.reshape(n, n).astype(np.float64)
