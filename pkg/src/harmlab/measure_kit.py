"""Discrete Radon measures and the Preiss F_K metric apparatus.

Measures are finitely supported: a weighted point cloud in R^2 or R^3.
Every metric below is therefore an exact finite computation; continuum
measures (flat measures, harmonic measures) enter through deterministic
discretizations with a known resolution.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.optimize import linprog
from scipy.spatial import cKDTree

from .errors import EmptySupportError, InvalidArgument

__all__ = [
    "Ball",
    "DiscreteMeasure",
    "FlatMeasureSpec",
    "restrict",
    "rescale",
    "f_norm",
    "f_dist",
    "flat_sample",
    "dist_to_flat",
    "quantize",
    "support_hausdorff",
    "weak_convergence_check",
    "unit_ball_volume",
    "orientation_search",
]


def unit_ball_volume(k: int) -> float:
    """Volume of the unit ball in R^k (v_1 = 2, v_2 = pi, ...)."""
    return math.pi ** (k / 2) / math.gamma(k / 2 + 1)


@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if not self.radius > 0:
            raise InvalidArgument(f"ball radius must be positive, got {self.radius}")


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Weighted point cloud ``sum_i weights[i] * delta_{points[i]}``."""

    dim: int
    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise InvalidArgument(f"dim must be 2 or 3, got {self.dim}")
        pts = np.asarray(self.points, dtype=float).reshape(-1, self.dim)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if pts.shape[0] != w.shape[0]:
            raise InvalidArgument("points and weights differ in length")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise InvalidArgument("weights must be finite and nonnegative")
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @classmethod
    def empty(cls, dim: int) -> "DiscreteMeasure":
        return cls(dim, np.zeros((0, dim)), np.zeros(0))

    @classmethod
    def dirac(cls, point, weight: float = 1.0) -> "DiscreteMeasure":
        p = np.asarray(point, dtype=float)
        return cls(p.size, p.reshape(1, -1), [weight])

    def __len__(self):
        return self.weights.shape[0]

    @property
    def mass(self) -> float:
        return float(self.weights.sum())

    def scaled(self, c: float) -> "DiscreteMeasure":
        if c < 0:
            raise InvalidArgument("scale factor must be nonnegative")
        return DiscreteMeasure(self.dim, self.points, self.weights * c)

    def __add__(self, other: "DiscreteMeasure") -> "DiscreteMeasure":
        if other.dim != self.dim:
            raise InvalidArgument("dimension mismatch")
        return DiscreteMeasure(
            self.dim,
            np.vstack([self.points, other.points]),
            np.concatenate([self.weights, other.weights]),
        )

    def mass_in(self, center, radius: float) -> float:
        d = np.linalg.norm(self.points - np.asarray(center, dtype=float), axis=1)
        return float(self.weights[d <= radius].sum())

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "points": self.points.tolist(),
            "weights": self.weights.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DiscreteMeasure":
        dim = int(d["dim"])
        pts = np.array(d["points"], dtype=float).reshape(-1, dim)
        return cls(dim, pts, np.array(d["weights"], dtype=float))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, s: str) -> "DiscreteMeasure":
        return cls.from_dict(json.loads(s))


@dataclass(frozen=True)
class FlatMeasureSpec:
    """``density * H^{n-1}`` restricted to the hyperplane ``normal^perp``."""

    dim: int
    normal: np.ndarray
    density: float = 1.0

    def __post_init__(self):
        nrm = np.asarray(self.normal, dtype=float)
        if nrm.shape != (self.dim,):
            raise InvalidArgument("normal has wrong dimension")
        if abs(np.linalg.norm(nrm) - 1.0) > 1e-12:
            raise InvalidArgument("normal must be a unit vector")
        if not self.density > 0:
            raise InvalidArgument("density must be positive")
        object.__setattr__(self, "normal", nrm)


def restrict(mu: DiscreteMeasure, ball: Ball) -> DiscreteMeasure:
    """Sub-measure of atoms in the closed ball."""
    d = np.linalg.norm(mu.points - ball.center, axis=1)
    keep = d <= ball.radius
    return DiscreteMeasure(mu.dim, mu.points[keep], mu.weights[keep])


def rescale(mu: DiscreteMeasure, x, r: float) -> DiscreteMeasure:
    """Pushforward of ``mu`` under ``z -> (z - x) / r``; weights unchanged."""
    if not r > 0:
        raise InvalidArgument(f"rescale radius must be positive, got {r}")
    x = np.asarray(x, dtype=float)
    return DiscreteMeasure(mu.dim, (mu.points - x) / r, mu.weights)


def f_norm(mu: DiscreteMeasure, s: float) -> float:
    """F_s(mu) = integral of (s - |z|)^+ d mu."""
    if not s > 0:
        raise InvalidArgument("s must be positive")
    tent = np.maximum(0.0, s - np.linalg.norm(mu.points, axis=1))
    return float(np.dot(mu.weights, tent))


# --------------------------------------------------------------------------
# F_s distance


def _inside(mu: DiscreteMeasure, s: float):
    r = np.linalg.norm(mu.points, axis=1)
    keep = (r < s) & (mu.weights > 0)
    return mu.points[keep], mu.weights[keep], s - r[keep]


def _one_sided_lp(a_pts, a_w, a_cap, b_pts, b_w, b_cap) -> float:
    """max sum a f - sum b f over 0 <= f <= cap, |f_k - f_l| <= |p_k - p_l|."""
    pts = np.vstack([a_pts, b_pts])
    if pts.shape[0] == 0:
        return 0.0
    cap = np.concatenate([a_cap, b_cap])
    c = np.concatenate([a_w, -b_w])
    uniq, inv = np.unique(pts, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    m = uniq.shape[0]
    coef = np.zeros(m)
    np.add.at(coef, inv, c)
    ucap = np.full(m, np.inf)
    np.minimum.at(ucap, inv, cap)
    if m == 1:
        return float(max(0.0, coef[0]) * ucap[0])
    iu, ju = np.triu_indices(m, k=1)
    dist = np.linalg.norm(uniq[iu] - uniq[ju], axis=1)
    npair = iu.size
    rows = np.repeat(np.arange(2 * npair), 2)
    cols = np.empty(4 * npair, dtype=np.int64)
    vals = np.empty(4 * npair)
    cols[0::4], cols[1::4] = iu, ju
    vals[0::4], vals[1::4] = 1.0, -1.0
    cols[2::4], cols[3::4] = ju, iu
    vals[2::4], vals[3::4] = 1.0, -1.0
    A = sparse.csr_matrix((vals, (rows, cols)), shape=(2 * npair, m))
    b = np.repeat(dist, 2)
    res = linprog(
        -coef,
        A_ub=A,
        b_ub=b,
        bounds=list(zip(np.zeros(m), ucap)),
        method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status != 0:
        raise RuntimeError(f"LP failed: {res.message}")
    return float(max(0.0, -res.fun))


def _emd():
    # Keep POT from importing heavyweight array backends.
    for key in ("PYTORCH", "JAX", "TENSORFLOW", "CUPY"):
        os.environ.setdefault(f"POT_BACKEND_DISABLE_{key}", "1")
    from ot.lp import emd2

    return emd2


def _one_sided_transport(a_pts, a_w, a_cap, b_pts, b_w, b_cap) -> float:
    """LP dual of ``_one_sided_lp`` as a balanced transport problem.

    Mass of ``a`` is moved onto ``b`` (cost |p - q|) or out of the ball
    (cost cap); mass of ``b`` may stay unmatched at no cost.
    """
    A, B = float(a_w.sum()), float(b_w.sum())
    if A == 0.0:
        return 0.0
    if B == 0.0:
        return float(np.dot(a_w, a_cap))
    na, nb = a_w.size, b_w.size
    M = np.zeros((na + 1, nb + 1))
    diff = a_pts[:, None, :] - b_pts[None, :, :]
    M[:na, :nb] = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    M[:na, nb] = a_cap
    src = np.concatenate([a_w, [B]])
    dst = np.concatenate([b_w, [A]])
    # exact balance, emd2 checks marginals
    dst[-1] += src.sum() - dst.sum()
    return float(max(0.0, _emd()(src, dst, M, numItermax=10_000_000)))


_ONE_SIDED = {"lp": _one_sided_lp, "transport": _one_sided_transport}


def f_dist(mu: DiscreteMeasure, nu: DiscreteMeasure, s: float, method: str = "transport") -> float:
    """F_s(mu, nu): sup of |int f dmu - int f dnu| over 0 <= f <= (s-|z|)^+, Lip f <= 1.

    ``method="lp"`` solves the primal linear program over the union of the
    supports; ``method="transport"`` solves its dual network-flow form. Both
    return the same optimum.
    """
    if not s > 0:
        raise InvalidArgument("s must be positive")
    if mu.dim != nu.dim:
        raise InvalidArgument("dimension mismatch")
    solve = _ONE_SIDED[method]
    a = _inside(mu, s)
    b = _inside(nu, s)
    return max(solve(*a, *b), solve(*b, *a))


# --------------------------------------------------------------------------
# flat measures


def _disc_nodes(n_points: int):
    """Equal-area polar nodes in the unit disc, each with area pi/N."""
    n_rings = max(1, int(round(math.sqrt(n_points / math.pi))))
    # ring k (0-based) holds ~ (2k+1) share of the nodes
    counts = np.array([2 * k + 1 for k in range(n_rings)], dtype=float)
    counts = np.maximum(1, np.round(counts * n_points / counts.sum())).astype(int)
    pts, areas = [], []
    edges = np.sqrt(np.concatenate([[0.0], np.cumsum(counts)]) / counts.sum())
    for k, cnt in enumerate(counts):
        r0, r1 = edges[k], edges[k + 1]
        ring_area = math.pi * (r1**2 - r0**2)
        # radius splitting the annulus into equal-area halves
        rm = math.sqrt(0.5 * (r0**2 + r1**2))
        theta = (np.arange(cnt) + 0.5) * 2 * math.pi / cnt + 0.5 * k
        pts.append(np.column_stack([rm * np.cos(theta), rm * np.sin(theta)]))
        areas.append(np.full(cnt, ring_area / cnt))
    return np.vstack(pts), np.concatenate(areas)


def _frame(normal: np.ndarray) -> np.ndarray:
    """Orthonormal basis (rows) of normal^perp."""
    n = normal.size
    if n == 2:
        return np.array([[normal[1], -normal[0]]])
    a = np.array([1.0, 0.0, 0.0]) if abs(normal[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = a - np.dot(a, normal) * normal
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(normal, e1)
    return np.vstack([e1, e2])


def flat_sample(spec: FlatMeasureSpec, s: float, n_points: int) -> DiscreteMeasure:
    """Midpoint-rule discretization of ``c H^{n-1}`` on ``V cap B(0, s)``.

    Total mass is exactly ``c * v_{n-1} * s^{n-1}``.
    """
    if n_points < 1:
        raise InvalidArgument("n_points must be >= 1")
    if not s > 0:
        raise InvalidArgument("s must be positive")
    frame = _frame(spec.normal)
    if spec.dim == 2:
        t = (np.arange(n_points) + 0.5) / n_points * 2.0 - 1.0
        coords = (s * t)[:, None]
        w = np.full(n_points, 2.0 * s / n_points)
    else:
        uv, area = _disc_nodes(n_points)
        coords = s * uv
        w = area * s**2
    return DiscreteMeasure(spec.dim, coords @ frame, spec.density * w)


# --------------------------------------------------------------------------
# orientation search over G(n, n-1)


def fibonacci_hemisphere(n: int) -> np.ndarray:
    """n quasi-uniform unit vectors with z >= 0."""
    i = np.arange(n) + 0.5
    z = 1.0 - i / n
    phi = i * math.pi * (3.0 - math.sqrt(5.0))
    rho = np.sqrt(1.0 - z**2)
    return np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])


def _angle_normal(theta):
    return np.array([-math.sin(theta), math.cos(theta)])


def _sph_normal(x):
    th, ph = x
    return np.array([math.sin(th) * math.cos(ph), math.sin(th) * math.sin(ph), math.cos(th)])


def _golden(f, a, b, tol):
    g = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def orientation_search(objective, dim: int, *, lower_bound=None, n_grid=None, tol=1e-4, lipschitz=None):
    """Minimize ``objective(normal)`` over unit normals (hyperplanes through 0).

    Exhaustive grid (360 angles in 2D, 1000 Fibonacci hemisphere normals in
    3D) followed by local refinement: golden section to ``tol`` radians in
    2D, Nelder-Mead in 3D. ``lower_bound(normals) -> array`` lets grid
    points whose bound exceeds the incumbent be skipped without changing
    the grid optimum. In 2D, ``lipschitz`` (a bound on |d objective / d angle|)
    prunes further from a coarse pass with the same guarantee.

    Returns ``(value, normal, grid_resolution_radians)``.
    """
    if dim == 2:
        n_grid = n_grid or 360
        thetas = np.arange(n_grid) * math.pi / n_grid
        normals = np.column_stack([-np.sin(thetas), np.cos(thetas)])
        step = math.pi / n_grid
    else:
        n_grid = n_grid or 1000
        normals = fibonacci_hemisphere(n_grid)
        step = math.sqrt(2 * math.pi / n_grid)
    lb = lower_bound(normals) if lower_bound is not None else np.zeros(len(normals))
    best, best_i = math.inf, int(np.argmin(lb))
    if dim == 2 and lipschitz is not None:
        # coarse pass, then every node whose Lipschitz bound from the nearest
        # coarse value cannot beat the incumbent is skipped
        stride = 8
        coarse = np.arange(0, n_grid, stride)
        cval = np.full(n_grid, np.nan)
        for i in coarse[np.argsort(lb[coarse], kind="stable")]:
            if lb[i] >= best:
                cval[i] = np.inf
                continue
            cval[i] = objective(normals[i])
            if cval[i] < best:
                best, best_i = cval[i], int(i)
        idx = np.arange(n_grid)
        lo = (idx // stride) * stride
        hi = (lo + stride) % n_grid
        hi_v = np.where(np.isnan(cval[hi]), np.inf, cval[hi])
        bound = np.maximum(cval[lo] - lipschitz * step * (idx - lo), hi_v - lipschitz * step * (stride - (idx - lo)))
        lb = np.maximum(lb, np.where(np.isfinite(bound), bound, lb))
        lb[coarse] = np.inf
    order = np.argsort(lb, kind="stable")
    for i in order:
        if lb[i] >= best:
            break
        v = objective(normals[i])
        if v < best:
            best, best_i = v, int(i)

    if dim == 2:
        t0 = thetas[best_i]
        theta, val = _golden(lambda t: objective(_angle_normal(t)), t0 - step, t0 + step, tol)
        if val < best:
            best, nrm = val, _angle_normal(theta)
        else:
            nrm = normals[best_i]
    else:
        from scipy.optimize import minimize

        v0 = normals[best_i]
        x0 = np.array([math.acos(np.clip(v0[2], -1, 1)), math.atan2(v0[1], v0[0])])
        res = minimize(
            lambda x: objective(_sph_normal(x)),
            x0,
            method="Nelder-Mead",
            options={"xatol": tol, "fatol": 1e-9, "initial_simplex": [x0, x0 + [step, 0], x0 + [0, step]]},
        )
        if res.fun < best:
            best, nrm = float(res.fun), _sph_normal(res.x)
        else:
            nrm = normals[best_i]
    return float(best), nrm, step


# --------------------------------------------------------------------------
# distance to the flat cone


@dataclass
class FlatDistance:
    value: float
    normal: np.ndarray | None
    grid_resolution: float
    quantization_bound: float
    n_atoms: int

    def __float__(self):
        return self.value


def _flat_reference(dim: int, n_flat: int):
    base = flat_sample(FlatMeasureSpec(dim, np.eye(dim)[-1]), 1.0, n_flat)
    # normalize the discretization itself so that F_1 = 1 exactly
    w = base.weights / f_norm(base, 1.0)
    return base.points[:, :-1], w


def dist_to_flat(
    mu: DiscreteMeasure,
    s: float,
    *,
    n_flat: int | None = None,
    max_atoms: int = 400,
    n_grid: int | None = None,
    method: str = "transport",
    details: bool = False,
):
    """d_s(mu, F): distance of ``mu`` to flat measures ``c H^{n-1}`` on hyperplanes.

    Returns 1 when F_s(mu) = 0. With ``details=True`` a :class:`FlatDistance`
    carrying the orientation grid resolution and the quantization error
    bound is returned instead of a float.
    """
    if not s > 0:
        raise InvalidArgument("s must be positive")
    dim = mu.dim
    nu = rescale(mu, np.zeros(dim), s)
    F = f_norm(nu, 1.0)
    if F <= 0.0:
        out = FlatDistance(1.0, None, 0.0, 0.0, 0)
        return out if details else 1.0
    nu = restrict(nu, Ball(np.zeros(dim), 1.0)).scaled(1.0 / F)
    nu = DiscreteMeasure(dim, nu.points[nu.weights > 0], nu.weights[nu.weights > 0])
    qbound = 0.0
    if len(nu) > max_atoms:
        eps = 1.0 / 256
        q = quantize(nu, eps)
        while len(q) > max_atoms:
            eps *= 1.25
            q = quantize(nu, eps)
        qbound = eps * nu.mass
        nu = q

    n_flat = n_flat or (201 if dim == 2 else 400)
    coords, fw = _flat_reference(dim, n_flat)
    a = _inside(nu, 1.0)
    solve = _ONE_SIDED[method]

    def objective(normal):
        frame = _frame(normal)
        pts = coords @ frame
        b = (pts, fw, 1.0 - np.linalg.norm(pts, axis=1))
        return max(solve(*a, *b), solve(*b, *a))

    pts, w, cap = a

    tree = cKDTree(pts) if len(pts) else None

    def lower_bound(normals):
        # f = min(cap, dist to V) is feasible and vanishes on the flat atoms
        d = np.abs(pts @ normals.T)
        lb = (w[:, None] * np.minimum(cap[:, None], d)).sum(axis=0)
        if tree is None:
            return lb
        # mirror bound: f = min(cap, dist to supp mu) vanishes on the atoms of mu
        P = np.stack([coords @ _frame(nv) for nv in normals])
        dd, _ = tree.query(P.reshape(-1, dim))
        capf = 1.0 - np.linalg.norm(P, axis=2)
        lb2 = (fw[None, :] * np.minimum(capf, dd.reshape(capf.shape))).sum(axis=1)
        return np.maximum(lb, lb2)

    # rotating the reference by delta moves each flat atom by at most delta
    lip = float(fw.sum() * np.abs(coords).max()) if dim == 2 else None
    val, nrm, res = orientation_search(objective, dim, lower_bound=lower_bound, n_grid=n_grid, lipschitz=lip)
    val = min(1.0, val)
    out = FlatDistance(val, nrm, res, qbound, len(nu))
    return out if details else val


# --------------------------------------------------------------------------


def quantize(mu: DiscreteMeasure, eps: float) -> DiscreteMeasure:
    """Coalesce atoms closer than ``eps/2`` to a cluster leader.

    Clusters are formed greedily in input order; each cluster is replaced by
    one atom at its weighted centroid carrying the summed weight, so no atom
    moves more than ``eps``.
    """
    if not eps > 0:
        raise InvalidArgument("eps must be positive")
    n = len(mu)
    if n == 0:
        return mu
    tree = cKDTree(mu.points)
    label = np.full(n, -1, dtype=np.int64)
    leaders = 0
    for i in range(n):
        if label[i] >= 0:
            continue
        nb = np.asarray(tree.query_ball_point(mu.points[i], eps / 2.0), dtype=np.int64)
        nb = nb[label[nb] < 0]
        label[nb] = leaders
        label[i] = leaders
        leaders += 1
    W = np.bincount(label, weights=mu.weights, minlength=leaders)
    P = np.zeros((leaders, mu.dim))
    for k in range(mu.dim):
        P[:, k] = np.bincount(label, weights=mu.weights * mu.points[:, k], minlength=leaders)
    # zero-weight clusters keep their leader position
    first = np.full(leaders, -1)
    first[label[::-1]] = np.arange(n)[::-1]
    nz = W > 0
    P[nz] /= W[nz, None]
    P[~nz] = mu.points[first[~nz]]
    # single-atom clusters keep their exact coordinates
    counts = np.bincount(label, minlength=leaders)
    single = counts == 1
    P[single] = mu.points[first[single]]
    return DiscreteMeasure(mu.dim, P, W)


def support_hausdorff(mu: DiscreteMeasure, nu: DiscreteMeasure, ball: Ball) -> float:
    """Symmetric Hausdorff distance between supports clipped to ``ball``."""
    a = restrict(mu, ball)
    b = restrict(nu, ball)
    a_pts = a.points[a.weights > 0]
    b_pts = b.points[b.weights > 0]
    if len(a_pts) == 0 or len(b_pts) == 0:
        raise EmptySupportError("clipped support is empty")
    d_ab = cKDTree(b_pts).query(a_pts)[0].max()
    d_ba = cKDTree(a_pts).query(b_pts)[0].max()
    return float(max(d_ab, d_ba))


@dataclass
class ConvergenceReport:
    radii: list
    distances: np.ndarray  # shape (len(seq), len(radii))
    tolerances: np.ndarray
    converged: bool
    monotone: list = field(default_factory=list)


def weak_convergence_check(seq, mu: DiscreteMeasure, radii, rel_tol: float = 1e-3, method: str = "transport"):
    """F_r(mu_i, mu) for every i and r, with a convergence verdict.

    The verdict holds when, at every sampled radius, the last distance is
    below ``rel_tol * F_r(mu)``.
    """
    radii = list(radii)
    if not radii:
        raise InvalidArgument("radii must be nonempty")
    D = np.array([[f_dist(m, mu, r, method=method) for r in radii] for m in seq]).reshape(len(seq), len(radii))
    tol = np.array([rel_tol * f_norm(mu, r) for r in radii])
    conv = bool(len(seq) > 0 and np.all(D[-1] <= tol + 1e-15))
    mono = [bool(np.all(np.diff(D[:, j]) <= 1e-12)) for j in range(len(radii))]
    return ConvergenceReport(radii, D, tol, conv, mono)
