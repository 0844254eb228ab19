"""Test domains: membership, boundary distance, boundary sampling, corkscrews, beta numbers.

Every domain is an open set with a ``side``: ``+1`` is the region itself
(Omega^+), ``-1`` the interior of its complement (Omega^-). Both sides share
one boundary, so ``dom.complement()`` only flips membership.

All geometric queries are vectorized over an ``(N, dim)`` array of points.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from ._rng import counter_rng
from .errors import (
    CorkscrewFailure,
    EmptySampleError,
    InsufficientSample,
    InvalidArgument,
    InvalidGeometry,
)
from .measure_kit import Ball, _disc_nodes, _frame, fibonacci_hemisphere, orientation_search, unit_ball_volume
from .polynomial import HarmonicPolynomial, _newton_project, zero_set_sample

__all__ = [
    "Domain",
    "BallDomain",
    "HalfSpace",
    "Polygon",
    "Wedge",
    "Prism",
    "PolyZeroSet",
    "BoundarySample",
    "Corkscrew",
    "make_domain",
    "koch_vertices",
    "corkscrew",
    "beta_number",
    "beta_infty",
    "boundary_sample",
]


def _as_points(X, dim):
    X = np.asarray(X, dtype=float)
    return X.reshape(-1, dim), X.ndim == 1


@dataclass
class BoundarySample:
    """Points on the boundary with per-point H^{n-1} cell sizes."""

    dim: int
    points: np.ndarray
    weights: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.points)

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "points": self.points.tolist(),
            "weights": self.weights.tolist(),
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, d):
        dim = int(d["dim"])
        return cls(dim, np.array(d["points"], dtype=float).reshape(-1, dim), np.array(d["weights"], dtype=float), d.get("metadata", {}))


class Domain:
    """Base class. Subclasses implement ``_inside_signed``, ``_dist``, ``_project``."""

    dim: int
    kind: str
    side: int = 1
    scale: float = 1.0

    # --- geometry hooks

    def _inside(self, X):  # pragma: no cover - abstract
        raise NotImplementedError

    def _dist(self, X):  # pragma: no cover - abstract
        raise NotImplementedError

    def _project(self, X):  # pragma: no cover - abstract
        raise NotImplementedError

    def _sample(self, region: Ball, n: int, u: float):  # pragma: no cover - abstract
        raise NotImplementedError

    def bounding_ball(self):
        """(center, radius) enclosing the boundary, or None if it is unbounded."""
        return None

    # --- public API

    def contains(self, X):
        P, single = _as_points(X, self.dim)
        ins = self._inside(P)
        if self.side == -1:
            ins = ~ins
        out = ins & (self._dist(P) > 0)
        return bool(out[0]) if single else out

    def boundary_distance(self, X):
        P, single = _as_points(X, self.dim)
        d = self._dist(P)
        return float(d[0]) if single else d

    def project(self, X):
        P, single = _as_points(X, self.dim)
        Y = self._project(P)
        return Y[0] if single else Y

    def complement(self) -> "Domain":
        import copy

        other = copy.copy(self)
        other.side = -self.side
        return other

    def spec(self) -> dict:
        return {"kind": self.kind, "params": dict(self.params), "side": "interior" if self.side == 1 else "exterior"}

    def boundary_sample(self, region: Ball, n_points: int, seed: int = 0) -> BoundarySample:
        return boundary_sample(self, region, n_points, seed)


# ---------------------------------------------------------------- ball


class BallDomain(Domain):
    kind = "ball"

    def __init__(self, dim=2, center=None, radius=1.0, side=1):
        self.dim = dim
        self.center = np.zeros(dim) if center is None else np.asarray(center, dtype=float)
        self.radius = float(radius)
        if self.radius <= 0:
            raise InvalidGeometry("ball radius must be positive")
        self.side = side
        self.scale = self.radius
        self.params = {"dim": dim, "center": self.center.tolist(), "radius": self.radius}

    def _inside(self, X):
        return np.linalg.norm(X - self.center, axis=1) < self.radius

    def _dist(self, X):
        return np.abs(np.linalg.norm(X - self.center, axis=1) - self.radius)

    def _project(self, X):
        v = X - self.center
        r = np.linalg.norm(v, axis=1)
        r = np.where(r == 0, 1.0, r)
        return self.center + self.radius * v / r[:, None]

    def bounding_ball(self):
        return self.center, self.radius

    def _sample(self, region, n, u):
        R = self.radius
        v = region.center - self.center
        D = float(np.linalg.norm(v))
        if D == 0:
            kappa = -2.0 if R <= region.radius else 2.0
        else:
            kappa = (R * R + D * D - region.radius**2) / (2 * R * D)
        if kappa > 1:
            return np.zeros((0, self.dim)), np.zeros(0)
        kappa = max(kappa, -1.0)
        axis = v / D if D > 0 else np.eye(self.dim)[0]
        if self.dim == 2:
            half = math.acos(kappa)
            psi = math.atan2(axis[1], axis[0])
            th = psi - half + (np.arange(n) + u) * (2 * half / n)
            pts = self.center + R * np.column_stack([np.cos(th), np.sin(th)])
            return pts, np.full(n, 2 * half * R / n)
        # spherical cap {cos(angle to axis) >= kappa}, area-uniform
        i = np.arange(n) + u
        z = 1.0 - i / n * (1.0 - kappa)
        phi = i * math.pi * (3.0 - math.sqrt(5.0))
        rho = np.sqrt(np.clip(1 - z * z, 0, None))
        local = np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])
        frame = np.vstack([_frame(axis), axis])
        pts = self.center + R * local @ frame
        return pts, np.full(n, 2 * math.pi * R * R * (1 - kappa) / n)


# ---------------------------------------------------------------- half-space


class HalfSpace(Domain):
    """``{x : <x, normal> > offset}``."""

    kind = "half_space"

    def __init__(self, dim=2, normal=None, offset=0.0, side=1):
        self.dim = dim
        nrm = np.eye(dim)[-1] if normal is None else np.asarray(normal, dtype=float)
        self.normal = nrm / np.linalg.norm(nrm)
        self.offset = float(offset)
        self.side = side
        self.params = {"dim": dim, "normal": self.normal.tolist(), "offset": self.offset}

    def _h(self, X):
        return X @ self.normal - self.offset

    def _inside(self, X):
        return self._h(X) > 0

    def _dist(self, X):
        return np.abs(self._h(X))

    def _project(self, X):
        return X - self._h(X)[:, None] * self.normal

    def _sample(self, region, n, u):
        c = region.center - self._h(region.center[None])[0] * self.normal
        d = abs(self._h(region.center[None])[0])
        if d > region.radius:
            return np.zeros((0, self.dim)), np.zeros(0)
        rho = math.sqrt(region.radius**2 - d * d)
        frame = _frame(self.normal)
        if self.dim == 2:
            t = (np.arange(n) + u) / n * 2 - 1
            return c + (rho * t)[:, None] * frame[0], np.full(n, 2 * rho / n)
        uv, area = _disc_nodes(n)
        return c + rho * uv @ frame, area * rho * rho


# ---------------------------------------------------------------- polygons


def _seg_intersect(p1, p2, q1, q2):
    def orient(a, b, c):
        return np.sign((b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1]) - (b[..., 1] - a[..., 1]) * (c[..., 0] - a[..., 0]))

    o1, o2 = orient(p1, p2, q1), orient(p1, p2, q2)
    o3, o4 = orient(q1, q2, p1), orient(q1, q2, p2)
    return (o1 * o2 < 0) & (o3 * o4 < 0)


def _point_segment(X, A, B):
    """Distances and foot points from X (N,2) to segments A->B (M,2): (N,M)."""
    d = B - A
    L2 = np.einsum("ij,ij->i", d, d)
    t = np.clip(((X[:, None, :] - A[None]) * d[None]).sum(-1) / L2[None], 0.0, 1.0)
    foot = A[None] + t[..., None] * d[None]
    return np.linalg.norm(X[:, None, :] - foot, axis=-1), foot


class Polygon(Domain):
    """Simple polygon given by a closed vertex loop (last vertex not repeated)."""

    kind = "polygon"

    def __init__(self, vertices, side=1, check=True):
        V = np.asarray(vertices, dtype=float)
        if V.ndim != 2 or V.shape[1] != 2 or len(V) < 3:
            raise InvalidGeometry("polygon needs >= 3 vertices in the plane")
        if np.allclose(V[0], V[-1]):
            V = V[:-1]
        area = 0.5 * np.sum(V[:, 0] * np.roll(V[:, 1], -1) - np.roll(V[:, 0], -1) * V[:, 1])
        if area == 0:
            raise InvalidGeometry("degenerate polygon")
        if area < 0:
            V = V[::-1]
        self.dim = 2
        self.vertices = V
        self.A = V
        self.B = np.roll(V, -1, axis=0)
        if check:
            self._check_simple()
        self.side = side
        self.area = abs(area)
        self.lengths = np.linalg.norm(self.B - self.A, axis=1)
        self.perimeter = float(self.lengths.sum())
        c = V.mean(axis=0)
        self.scale = float(np.max(np.linalg.norm(V - c, axis=1)))
        self._center = c
        self._mids = 0.5 * (self.A + self.B)
        self._half = 0.5 * float(self.lengths.max())
        self._tree = cKDTree(self._mids) if len(V) > 64 else None
        self.params = {"vertices": V.tolist()}

    def _check_simple(self):
        m = len(self.A)
        if m > 4000:
            raise InvalidGeometry("polygon too large for the simplicity check")
        i, j = np.triu_indices(m, k=2)
        keep = ~((i == 0) & (j == m - 1))
        i, j = i[keep], j[keep]
        if np.any(_seg_intersect(self.A[i], self.B[i], self.A[j], self.B[j])):
            raise InvalidGeometry("self-intersecting polygon")

    def bounding_ball(self):
        return self._center, self.scale

    def _inside(self, X):
        out = np.zeros(len(X), dtype=bool)
        for s in range(0, len(X), 4096):
            P = X[s : s + 4096]
            x, y = P[:, 0:1], P[:, 1:2]
            ax, ay = self.A[None, :, 0], self.A[None, :, 1]
            bx, by = self.B[None, :, 0], self.B[None, :, 1]
            cond = (ay > y) != (by > y)
            with np.errstate(divide="ignore", invalid="ignore"):
                xint = ax + (y - ay) * (bx - ax) / (by - ay)
            out[s : s + 4096] = (np.count_nonzero(cond & (x < xint), axis=1) % 2) == 1
        return out

    def _nearest(self, X):
        n = len(X)
        dist = np.empty(n)
        foot = np.empty((n, 2))
        if self._tree is None:
            for s in range(0, n, 4096):
                d, f = _point_segment(X[s : s + 4096], self.A, self.B)
                k = np.argmin(d, axis=1)
                dist[s : s + 4096] = d[np.arange(len(k)), k]
                foot[s : s + 4096] = f[np.arange(len(k)), k]
            return dist, foot
        k = min(16, len(self.A))
        dm, idx = self._tree.query(X, k=k)
        A, B = self.A[idx], self.B[idx]
        d = B - A
        t = np.clip(np.einsum("nkj,nkj->nk", X[:, None] - A, d) / np.einsum("nkj,nkj->nk", d, d), 0, 1)
        f = A + t[..., None] * d
        dd = np.linalg.norm(X[:, None] - f, axis=-1)
        j = np.argmin(dd, axis=1)
        dist = dd[np.arange(n), j]
        foot = f[np.arange(n), j]
        # a segment farther than the k-th midpoint minus half a length cannot win
        bad = np.nonzero(dist > dm[:, -1] - self._half)[0]
        for s in range(0, len(bad), 1024):
            b = bad[s : s + 1024]
            dB, fB = _point_segment(X[b], self.A, self.B)
            kk = np.argmin(dB, axis=1)
            dist[b] = dB[np.arange(len(b)), kk]
            foot[b] = fB[np.arange(len(b)), kk]
        return dist, foot

    def _dist(self, X):
        return self._nearest(X)[0]

    def _project(self, X):
        return self._nearest(X)[1]

    def _segments_in(self, region):
        """Arclength intervals of each edge inside the region ball."""
        d = self.B - self.A
        L = self.lengths
        e = d / L[:, None]
        w = self.A - region.center
        b = np.einsum("ij,ij->i", e, w)
        c = np.einsum("ij,ij->i", w, w) - region.radius**2
        disc = b * b - c
        out = []
        for k in np.nonzero(disc >= 0)[0]:
            r = math.sqrt(disc[k])
            t0, t1 = max(0.0, -b[k] - r), min(L[k], -b[k] + r)
            if t1 > t0:
                out.append((self.A[k] + t0 * e[k], e[k], t1 - t0))
        return out

    def _sample(self, region, n, u):
        return _sample_pieces(self._segments_in(region), n, u)


def _sample_pieces(pieces, n, u):
    """Stratified arclength sampling along straight pieces (start, unit dir, length)."""
    if not pieces:
        return np.zeros((0, 2)), np.zeros(0)
    lengths = np.array([p[2] for p in pieces])
    cum = np.concatenate([[0.0], np.cumsum(lengths)])
    total = cum[-1]
    t = (np.arange(n) + u) * total / n
    k = np.clip(np.searchsorted(cum, t, side="right") - 1, 0, len(pieces) - 1)
    starts = np.array([p[0] for p in pieces])
    dirs = np.array([p[1] for p in pieces])
    pts = starts[k] + (t - cum[k])[:, None] * dirs[k]
    return pts, np.full(n, total / n)


def koch_vertices(level: int, side: float = 1.0) -> np.ndarray:
    """Vertices of the Koch snowflake, counter-clockwise, centered at the origin."""
    if not 0 <= level <= 8:
        raise InvalidGeometry("snowflake level must be in [0, 8]")
    R = side / math.sqrt(3.0)
    pts = R * np.exp(1j * (math.pi / 2 + 2 * math.pi * np.arange(3) / 3))
    rot = np.exp(-1j * math.pi / 3)
    for _ in range(level):
        a = pts
        b = np.roll(pts, -1)
        d = (b - a) / 3
        s1 = a + d
        s2 = a + 2 * d
        # with CCW order the outward side is to the right of the edge
        tip = s1 + d * rot
        pts = np.column_stack([a, s1, tip, s2]).reshape(-1)
    return np.column_stack([pts.real, pts.imag])


class KochSnowflake(Polygon):
    kind = "koch_snowflake"

    def __init__(self, level=3, side=1.0, center=None, side_flag=1):
        V = koch_vertices(level, side)
        if center is not None:
            V = V + np.asarray(center, dtype=float)
        super().__init__(V, side=side_flag, check=False)
        self.level = level
        self.side_length = side
        self.params = {"level": level, "side": side, "center": list(center) if center is not None else [0.0, 0.0]}


# ---------------------------------------------------------------- wedge


def _wrap(a):
    return (a + math.pi) % (2 * math.pi) - math.pi


class Wedge(Domain):
    """Planar sector ``{apex + t e(theta): |theta - direction| < angle/2}``."""

    kind = "wedge"

    def __init__(self, angle=math.pi / 2, apex=None, direction=math.pi / 2, side=1):
        if not 0 < angle < 2 * math.pi:
            raise InvalidGeometry("wedge angle must be in (0, 2 pi)")
        self.dim = 2
        self.angle = float(angle)
        self.apex = np.zeros(2) if apex is None else np.asarray(apex, dtype=float)
        self.direction = float(direction)
        self.side = side
        self.rays = [
            np.array([math.cos(self.direction + s * self.angle / 2), math.sin(self.direction + s * self.angle / 2)])
            for s in (-1, 1)
        ]
        self.params = {"angle": self.angle, "apex": self.apex.tolist(), "direction": self.direction}

    @property
    def opening(self):
        """Opening angle of the side this object represents."""
        return self.angle if self.side == 1 else 2 * math.pi - self.angle

    def _inside(self, X):
        v = X - self.apex
        th = np.arctan2(v[:, 1], v[:, 0])
        return np.abs(_wrap(th - self.direction)) < self.angle / 2

    def _feet(self, X):
        v = X - self.apex
        feet = []
        for e in self.rays:
            t = np.maximum(v @ e, 0.0)
            feet.append(self.apex + t[:, None] * e)
        return feet

    def _dist(self, X):
        return np.min([np.linalg.norm(X - f, axis=1) for f in self._feet(X)], axis=0)

    def _project(self, X):
        f0, f1 = self._feet(X)
        use1 = np.linalg.norm(X - f1, axis=1) < np.linalg.norm(X - f0, axis=1)
        return np.where(use1[:, None], f1, f0)

    def _sample(self, region, n, u):
        pieces = []
        w = self.apex - region.center
        for e in self.rays:
            b = float(e @ w)
            disc = b * b - (w @ w - region.radius**2)
            if disc < 0:
                continue
            r = math.sqrt(disc)
            t0, t1 = max(0.0, -b - r), -b + r
            if t1 > t0:
                pieces.append((self.apex + t0 * e, e, t1 - t0))
        return _sample_pieces(pieces, n, u)


# ---------------------------------------------------------------- prism


class Prism(Domain):
    """Polygon x [z0, z1] in R^3."""

    kind = "prism"

    def __init__(self, vertices, z0=0.0, z1=1.0, side=1):
        self.base = Polygon(vertices)
        self.dim = 3
        self.z0, self.z1 = float(z0), float(z1)
        if not self.z1 > self.z0:
            raise InvalidGeometry("prism needs z1 > z0")
        self.side = side
        c = np.append(self.base._center, 0.5 * (self.z0 + self.z1))
        self._bb = (c, math.hypot(self.base.scale, 0.5 * (self.z1 - self.z0)))
        self.scale = self._bb[1]
        self.params = {"vertices": self.base.vertices.tolist(), "z0": self.z0, "z1": self.z1}

    def bounding_ball(self):
        return self._bb

    def _inside(self, X):
        return self.base._inside(X[:, :2]) & (X[:, 2] > self.z0) & (X[:, 2] < self.z1)

    def _parts(self, X):
        ins2 = self.base._inside(X[:, :2])
        dp, fp = self.base._nearest(X[:, :2])
        z = X[:, 2]
        return ins2, dp, fp, z

    def _dist(self, X):
        ins2, dp, _, z = self._parts(X)
        inz = (z > self.z0) & (z < self.z1)
        dz_in = np.minimum(z - self.z0, self.z1 - z)
        dz_out = np.maximum(np.maximum(self.z0 - z, z - self.z1), 0.0)
        d_in = np.minimum(dp, dz_in)
        d_out = np.hypot(np.where(ins2, 0.0, dp), dz_out)
        return np.where(ins2 & inz, d_in, d_out)

    def _project(self, X):
        ins2, dp, fp, z = self._parts(X)
        inz = (z > self.z0) & (z < self.z1)
        zc = np.clip(z, self.z0, self.z1)
        lat = np.column_stack([fp, zc])
        Y = np.where(ins2[:, None], np.column_stack([X[:, :2], zc]), lat)
        inside = ins2 & inz
        if np.any(inside):
            top = self.z1 - z < z - self.z0
            cap = np.column_stack([X[:, :2], np.where(top, self.z1, self.z0)])
            use_cap = np.minimum(z - self.z0, self.z1 - z) < dp
            Y[inside] = np.where(use_cap[inside, None], cap[inside], lat[inside])
        return Y

    def _sample(self, region, n, u):
        # estimate area inside the region with a coarse pass, then refine
        pts, w = self._grid_sample(region, h=max(self.scale, region.radius) / 20.0, u=u)
        area = w.sum()
        if area == 0:
            return pts, w
        h = math.sqrt(area / n)
        return self._grid_sample(region, h, u)

    def _grid_sample(self, region, h, u):
        out_p, out_w = [], []
        A, B, L = self.base.A, self.base.B, self.base.lengths
        nz = max(1, int(math.ceil((self.z1 - self.z0) / h)))
        zs = self.z0 + (np.arange(nz) + 0.5) * (self.z1 - self.z0) / nz
        for k in range(len(A)):
            m = max(1, int(math.ceil(L[k] / h)))
            t = (np.arange(m) + u) / m
            xy = A[k] + t[:, None] * (B[k] - A[k])
            P = np.column_stack([np.repeat(xy, nz, axis=0), np.tile(zs, m)])
            out_p.append(P)
            out_w.append(np.full(len(P), L[k] / m * (self.z1 - self.z0) / nz))
        lo, hi = self.base.vertices.min(0), self.base.vertices.max(0)
        gx = np.arange(lo[0] + u * h, hi[0], h)
        gy = np.arange(lo[1] + u * h, hi[1], h)
        G = np.array(np.meshgrid(gx, gy, indexing="ij")).reshape(2, -1).T
        G = G[self.base._inside(G)]
        for zc in (self.z0, self.z1):
            out_p.append(np.column_stack([G, np.full(len(G), zc)]))
            out_w.append(np.full(len(G), h * h))
        P = np.vstack(out_p)
        W = np.concatenate(out_w)
        keep = np.linalg.norm(P - region.center, axis=1) <= region.radius
        return P[keep], W[keep]


# ---------------------------------------------------------------- polynomial zero sets


class PolyZeroSet(Domain):
    """``{sign * h > 0}`` for a harmonic polynomial ``h``."""

    kind = "poly_zero_set"

    def __init__(self, h: HarmonicPolynomial, sign=1, side=1):
        self.h = h
        self.dim = h.dim
        self.sign = 1 if sign >= 0 else -1
        self.side = side
        self.params = {"h": h.to_dict(), "sign": self.sign}

    def _inside(self, X):
        return self.sign * self.h(X) > 0

    def _project(self, X):
        h = self.h
        X = np.asarray(X, dtype=float)
        if h.degree <= 1:
            g = h.gradient(X)
            return X - (h(X) / np.einsum("ij,ij->i", g, g))[:, None] * g
        # damped projected gradient: alternate a Newton step onto {h=0}
        # with a tangential step toward X
        Y = _newton_project(h, X, iters=5)
        for _ in range(50):
            g = h.gradient(Y)
            gn = np.linalg.norm(g, axis=1, keepdims=True)
            n = g / np.where(gn > 0, gn, 1.0)
            r = X - Y
            tang = r - np.einsum("ij,ij->i", r, n)[:, None] * n
            Ynew = _newton_project(h, Y + 0.5 * tang, iters=5)
            if np.max(np.abs(Ynew - Y), initial=0.0) < 1e-14:
                Y = Ynew
                break
            Y = Ynew
        bad = ~np.isfinite(Y).all(axis=1) | (np.abs(h(Y)) > 1e-8)
        if np.any(bad):
            Y[bad] = self._bisect(X[bad])
        return Y

    def _bisect(self, X):
        """March along the gradient ray until h changes sign, then bisect."""
        h = self.h
        out = np.empty_like(X)
        for i, x in enumerate(X):
            g = h.gradient(x[None])[0]
            gn = np.linalg.norm(g)
            if gn == 0:
                g, gn = np.eye(self.dim)[0], 1.0
            d = -np.sign(h(x[None])[0]) * g / gn
            lo, hi, step = 0.0, None, 1e-3
            v0 = h(x[None])[0]
            while step < 1e6:
                if np.sign(h((x + step * d)[None])[0]) != np.sign(v0):
                    hi = step
                    break
                lo, step = step, step * 2
            if hi is None:
                out[i] = np.nan
                continue
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if np.sign(h((x + mid * d)[None])[0]) == np.sign(v0):
                    lo = mid
                else:
                    hi = mid
            out[i] = x + 0.5 * (lo + hi) * d
        return out

    def _dist(self, X):
        return np.linalg.norm(X - self._project(X), axis=1)

    def _sample(self, region, n, u):
        return zero_set_sample(self.h, region.center, region.radius, n)


# ---------------------------------------------------------------- factory


def make_domain(spec: dict) -> Domain:
    """Build a domain from ``{"kind": ..., "params": {...}, "side": "interior"|"exterior"}``."""
    kind = spec.get("kind")
    p = dict(spec.get("params", {}))
    try:
        side = {"interior": 1, "exterior": -1}[spec.get("side", "interior")]
    except KeyError:
        raise InvalidGeometry(f"side must be 'interior' or 'exterior', got {spec.get('side')!r}") from None
    if kind == "ball":
        dim = int(p.get("dim", len(p.get("center", [0, 0]))))
        return BallDomain(dim, p.get("center"), p.get("radius", 1.0), side=side)
    if kind == "half_space":
        dim = int(p.get("dim", len(p.get("normal", [0, 1]))))
        return HalfSpace(dim, p.get("normal"), p.get("offset", 0.0), side=side)
    if kind == "polygon":
        return Polygon(p["vertices"], side=side)
    if kind == "koch_snowflake":
        return KochSnowflake(int(p.get("level", 3)), float(p.get("side", 1.0)), p.get("center"), side_flag=side)
    if kind == "wedge":
        return Wedge(p.get("angle", math.pi / 2), p.get("apex"), p.get("direction", math.pi / 2), side=side)
    if kind == "prism":
        return Prism(p["vertices"], p.get("z0", 0.0), p.get("z1", 1.0), side=side)
    if kind == "poly_zero_set":
        return PolyZeroSet(HarmonicPolynomial.from_dict(p["h"]), p.get("sign", 1), side=side)
    raise InvalidGeometry(f"unknown domain kind {kind!r}")


# ---------------------------------------------------------------- operations


def boundary_sample(domain: Domain, region: Ball, n_points: int, seed: int = 0) -> BoundarySample:
    """Quasi-uniform sample of the boundary inside ``region``.

    Stratified along arclength (or area) with a seeded phase, so equal
    inputs give identical samples. ``weights`` are H^{n-1} cell sizes.
    """
    if n_points < 1:
        raise InvalidArgument("n_points must be >= 1")
    u = float(counter_rng(seed, 0).random())
    pts, w = domain._sample(region, int(n_points), u)
    if len(pts) == 0:
        raise EmptySampleError("region does not meet the boundary")
    meta = {"kind": domain.kind, "params": domain.params, "count": int(len(pts)), "seed": int(seed),
            "region": {"center": region.center.tolist(), "radius": region.radius}}
    return BoundarySample(domain.dim, np.asarray(pts), np.asarray(w), meta)


@dataclass
class Corkscrew:
    A_plus: np.ndarray
    A_minus: np.ndarray
    M_achieved: float
    M_plus: float
    M_minus: float


def _directions(dim, n):
    if dim == 2:
        th = 2 * math.pi * np.arange(n) / n
        return np.column_stack([np.cos(th), np.sin(th)])
    h = fibonacci_hemisphere(n // 2)
    return np.vstack([h, -h])


def corkscrew(domain: Domain, Q, r: float, n_dirs: int = 64, n_radii: int = 8, M_cap: float = 100.0) -> Corkscrew:
    """Interior and exterior corkscrew points for ``B(Q, r)``.

    Candidates are ``Q + 2^{-k} r e`` over ``n_dirs`` directions and
    ``k = 1..n_radii``; the realized constant of a candidate A is
    ``max(r / |A - Q|, r / dist(A, boundary))``.
    """
    Q = np.asarray(Q, dtype=float)
    if not r > 0:
        raise InvalidArgument("r must be positive")
    dirs = _directions(domain.dim, n_dirs)
    ts = r * 2.0 ** -np.arange(1, n_radii + 1)
    C = (Q[None, None] + ts[:, None, None] * dirs[None]).reshape(-1, domain.dim)
    dist = domain.boundary_distance(C)
    with np.errstate(divide="ignore"):
        M = np.maximum(r / np.linalg.norm(C - Q, axis=1), r / dist)
    base = domain if domain.side == 1 else domain.complement()
    inside = base.contains(C)
    outside = base.complement().contains(C)
    res = []
    for mask in (inside, outside):
        if not np.any(mask):
            res.append((None, math.inf))
            continue
        i = np.nonzero(mask)[0][np.argmin(M[mask])]
        res.append((C[i], float(M[i])))
    (Ap, Mp), (Am, Mm) = res
    if domain.side == -1:
        (Ap, Mp), (Am, Mm) = (Am, Mm), (Ap, Mp)
    Mach = max(Mp, Mm)
    if Mach > M_cap:
        raise CorkscrewFailure(f"no corkscrew with M <= {M_cap} at scale {r}")
    return Corkscrew(Ap, Am, Mach, Mp, Mm)


def _points_in(sample, Q, r, dim):
    pts = sample.points if hasattr(sample, "points") else np.asarray(sample, dtype=float)
    d = np.linalg.norm(pts - Q, axis=1)
    P = pts[d <= r] - Q
    if len(P) < dim:
        raise InsufficientSample(f"only {len(P)} sample points in B(Q, r)")
    return P


def beta_number(sample, Q, r: float, n_grid=None) -> float:
    """inf over hyperplanes L through Q of sup_{y in sample cap B(Q,r)} dist(y, L) / r."""
    Q = np.asarray(Q, dtype=float)
    dim = Q.size
    P = _points_in(sample, Q, r, dim)

    def exact(normals):
        return np.abs(P @ np.atleast_2d(normals).T).max(axis=0) / r

    val, _, _ = orientation_search(lambda nu: float(exact(nu)[0]), dim, lower_bound=exact, n_grid=n_grid)
    return min(val, 1.0)


def _plane_disc(normal, r, m):
    frame = _frame(normal)
    if normal.size == 2:
        t = np.linspace(-r, r, m)
        return t[:, None] * frame[0]
    uv, _ = _disc_nodes(m)
    rim = np.linspace(0, 2 * math.pi, int(math.sqrt(m) * 4), endpoint=False)
    uv = np.vstack([uv, np.column_stack([np.cos(rim), np.sin(rim)])])
    return r * uv @ frame


def beta_infty(domain: Domain, Q, r: float, n_points: int = 2000, n_plane: int = 801, seed: int = 0, sample=None) -> float:
    """(1/r) inf_L D[boundary cap B(Q,r); L cap B(Q,r)] over hyperplanes L through Q.

    D is the two-sided Hausdorff distance; the boundary part is a dense
    boundary sample and the plane part a discretized disc.
    """
    Q = np.asarray(Q, dtype=float)
    dim = Q.size
    if sample is None:
        sample = boundary_sample(domain, Ball(Q, r), n_points, seed)
    P = _points_in(sample, Q, r, dim)
    tree = cKDTree(P)

    def objective(nu):
        one = np.abs(P @ nu).max()
        two = tree.query(_plane_disc(nu, r, n_plane))[0].max()
        return max(one, two) / r

    def lower(normals):
        return np.abs(P @ normals.T).max(axis=0) / r

    val, _, _ = orientation_search(objective, dim, lower_bound=lower)
    return min(val, 2.0)


__all__ += ["KochSnowflake"]
