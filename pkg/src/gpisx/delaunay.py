"""Incremental Bowyer-Watson Delaunay triangulation in the plane.

The convex hull is closed with *ghost* triangles that share a single vertex
at infinity, so no finite super-triangle is needed and hull edges are always
correct. A ghost ``(a, b, INF)`` conflicts with a new point ``p`` when ``p``
lies strictly left of ``a -> b`` (outside the hull) or on the open segment
``ab``.

Orientation and in-circle predicates are evaluated in floating point and
re-evaluated exactly with :class:`fractions.Fraction` when the result is
within the round-off bound. Cocircular ties are resolved by insertion order:
a point on a circumcircle does not invalidate the triangle.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .errors import DegenerateInput

__all__ = ["delaunay_2d", "orient2d", "incircle"]

INF = -1
_EPS = 2.3e-16


def orient2d(ax, ay, bx, by, cx, cy):
    """Sign of twice the signed area of ``abc``: +1 if ``c`` is left of ``a -> b``."""
    left = (bx - ax) * (cy - ay)
    right = (by - ay) * (cx - ax)
    det = left - right
    if abs(det) > 4 * _EPS * (abs(left) + abs(right)):
        return 1 if det > 0 else -1
    A = [Fraction(v) for v in (ax, ay, bx, by, cx, cy)]
    det = (A[2] - A[0]) * (A[5] - A[1]) - (A[3] - A[1]) * (A[4] - A[0])
    return (det > 0) - (det < 0)


def incircle(ax, ay, bx, by, cx, cy, dx, dy):
    """+1 if ``d`` is strictly inside the circumcircle of CCW triangle ``abc``."""
    adx, ady = ax - dx, ay - dy
    bdx, bdy = bx - dx, by - dy
    cdx, cdy = cx - dx, cy - dy
    alift = adx * adx + ady * ady
    blift = bdx * bdx + bdy * bdy
    clift = cdx * cdx + cdy * cdy
    bc = bdx * cdy - cdx * bdy
    ca = cdx * ady - adx * cdy
    ab = adx * bdy - bdx * ady
    det = alift * bc + blift * ca + clift * ab
    perm = (
        alift * (abs(bdx * cdy) + abs(cdx * bdy))
        + blift * (abs(cdx * ady) + abs(adx * cdy))
        + clift * (abs(adx * bdy) + abs(bdx * ady))
    )
    if abs(det) > 16 * _EPS * perm:
        return 1 if det > 0 else -1
    F = Fraction
    adx, ady = F(ax) - F(dx), F(ay) - F(dy)
    bdx, bdy = F(bx) - F(dx), F(by) - F(dy)
    cdx, cdy = F(cx) - F(dx), F(cy) - F(dy)
    det = (
        (adx * adx + ady * ady) * (bdx * cdy - cdx * bdy)
        + (bdx * bdx + bdy * bdy) * (cdx * ady - adx * cdy)
        + (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady)
    )
    return (det > 0) - (det < 0)


class _Triangulation:
    def __init__(self, xs, ys):
        self.xs = xs
        self.ys = ys
        self.verts = []
        self.nbrs = []
        self.alive = []
        self.last = 0

    def add(self, a, b, c):
        self.verts.append([a, b, c])
        self.nbrs.append([-1, -1, -1])
        self.alive.append(True)
        return len(self.verts) - 1

    def conflicts(self, t, p):
        a, b, c = self.verts[t]
        xs, ys = self.xs, self.ys
        px, py = xs[p], ys[p]
        if c == INF:
            o = orient2d(xs[a], ys[a], xs[b], ys[b], px, py)
            if o > 0:
                return True
            if o < 0:
                return False
            ux, uy = xs[b] - xs[a], ys[b] - ys[a]
            return (px - xs[a]) * ux + (py - ys[a]) * uy > 0 and (px - xs[b]) * ux + (py - ys[b]) * uy < 0
        return incircle(xs[a], ys[a], xs[b], ys[b], xs[c], ys[c], px, py) > 0

    def locate(self, p):
        xs, ys = self.xs, self.ys
        px, py = xs[p], ys[p]
        t = self.last
        for step in range(4 * len(self.verts) + 10):
            v = self.verts[t]
            if v[2] == INF:
                return t
            for k in range(3):
                i = (k + step) % 3
                a, b = v[(i + 1) % 3], v[(i + 2) % 3]
                if orient2d(xs[a], ys[a], xs[b], ys[b], px, py) < 0:
                    t = self.nbrs[t][i]
                    break
            else:
                return t
        # visibility walks terminate on Delaunay meshes; this is a safety net
        for t, alive in enumerate(self.alive):
            if alive and self.conflicts(t, p):
                return t
        raise RuntimeError("point location failed")

    def insert(self, p):
        start = self.locate(p)
        cavity = {start}
        stack = [start]
        rejected = set()
        while stack:
            t = stack.pop()
            for nb in self.nbrs[t]:
                if nb in cavity or nb in rejected:
                    continue
                if self.conflicts(nb, p):
                    cavity.add(nb)
                    stack.append(nb)
                else:
                    rejected.add(nb)

        starts, ends, created = {}, {}, []
        for t in sorted(cavity):
            v = self.verts[t]
            for i in range(3):
                nb = self.nbrs[t][i]
                if nb in cavity:
                    continue
                u, w = v[(i + 1) % 3], v[(i + 2) % 3]
                new_v = [u, w, p]
                new_n = [-1, -1, nb]
                if u == INF:
                    new_v, new_n = new_v[1:] + new_v[:1], new_n[1:] + new_n[:1]
                elif w == INF:
                    new_v, new_n = new_v[2:] + new_v[:2], new_n[2:] + new_n[:2]
                nt = self.add(*new_v)
                self.nbrs[nt] = new_n
                nv = self.verts[nb]
                for j in range(3):
                    if nv[j] != u and nv[j] != w:
                        self.nbrs[nb][j] = nt
                        break
                starts[u] = nt
                ends[w] = nt
                created.append((nt, u, w))
        for nt, u, w in created:
            v = self.verts[nt]
            # edge w->p is opposite u, edge p->u is opposite w
            self.nbrs[nt][v.index(u)] = starts[w]
            self.nbrs[nt][v.index(w)] = ends[u]
            if v[2] != INF:
                self.last = nt
        for t in cavity:
            self.alive[t] = False

    def real_triangles(self):
        return [v for v, alive in zip(self.verts, self.alive) if alive and v[2] != INF]


def delaunay_2d(xy):
    """Delaunay triangles of distinct 2D sites as an ``(m, 3)`` index array.

    Triangles are counter-clockwise. Raises :class:`DegenerateInput` for
    fewer than three sites or all-collinear input.
    """
    xy = np.asarray(xy, dtype=float)
    n = len(xy)
    if n < 3:
        raise DegenerateInput(f"need at least 3 distinct points, got {n}")
    xs = xy[:, 0].tolist()
    ys = xy[:, 1].tolist()
    i0, i1 = 0, 1
    i2, o = None, 0
    for k in range(2, n):
        o = orient2d(xs[i0], ys[i0], xs[i1], ys[i1], xs[k], ys[k])
        if o != 0:
            i2 = k
            break
    if i2 is None:
        raise DegenerateInput("all points are collinear")
    tri = _Triangulation(xs, ys)
    a, b, c = (i0, i1, i2) if o > 0 else (i0, i2, i1)
    t0 = tri.add(a, b, c)
    # ghost across each edge of t0; edge opposite vertex i is (v[i+1], v[i+2])
    v = [a, b, c]
    ghosts = [tri.add(v[(i + 2) % 3], v[(i + 1) % 3], INF) for i in range(3)]
    tri.nbrs[t0] = ghosts[:]
    for i, g in enumerate(ghosts):
        # ghost g = (v[i+2], v[i+1], INF)
        tri.nbrs[g][2] = t0
        # edge (v[i+1], INF) is opposite v[i+2]; shared with the ghost of edge i+2
        tri.nbrs[g][0] = ghosts[(i + 2) % 3]
        # edge (INF, v[i+2]) is opposite v[i+1]; shared with the ghost of edge i+1
        tri.nbrs[g][1] = ghosts[(i + 1) % 3]
    tri.last = t0
    for k in range(2, n):
        if k != i2:
            tri.insert(k)
    out = np.array(tri.real_triangles(), dtype=np.int64).reshape(-1, 3)
    return out
