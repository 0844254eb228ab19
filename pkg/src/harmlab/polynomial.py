"""Harmonic polynomials and the measures carried by their zero sets."""
from __future__ import annotations

import math
from fractions import Fraction
from itertools import product

import numpy as np

from .errors import EmptySampleError, InvalidArgument
from .measure_kit import DiscreteMeasure

__all__ = [
    "HarmonicPolynomial",
    "poly_eval",
    "poly_zero_measure",
    "harmonic_basis",
    "zero_set_sample",
]


def _exact(c):
    return isinstance(c, (int, Fraction))


class HarmonicPolynomial:
    """Polynomial in ``dim`` variables stored as ``{multi_index: coefficient}``.

    Construction checks that the Laplacian vanishes: exactly for integer
    or Fraction coefficients, to ``1e-12`` relative for floats.
    """

    def __init__(self, dim: int, terms, check: bool = True):
        if dim not in (2, 3):
            raise InvalidArgument("dim must be 2 or 3")
        self.dim = dim
        if isinstance(terms, dict):
            items = terms.items()
        else:
            items = ((tuple(m), c) for c, m in terms)
        t = {}
        for m, c in items:
            m = tuple(int(e) for e in m)
            if len(m) != dim or min(m) < 0:
                raise InvalidArgument(f"bad multi-index {m}")
            t[m] = t.get(m, 0) + c
        self.terms = {m: c for m, c in t.items() if c != 0}
        if check:
            lap = self.laplacian_terms()
            scale = max([abs(float(c)) for c in self.terms.values()] or [1.0])
            bad = [
                m for m, c in lap.items()
                if (c != 0 if _exact(c) else abs(float(c)) > 1e-12 * scale)
            ]
            if bad:
                raise InvalidArgument("polynomial is not harmonic")

    # ----- algebra

    @property
    def degree(self) -> int:
        return max((sum(m) for m in self.terms), default=0)

    def laplacian_terms(self) -> dict:
        out = {}
        for m, c in self.terms.items():
            for k in range(self.dim):
                if m[k] >= 2:
                    mm = list(m)
                    mm[k] -= 2
                    mm = tuple(mm)
                    out[mm] = out.get(mm, 0) + c * m[k] * (m[k] - 1)
        return {m: c for m, c in out.items() if c != 0}

    def derivative(self, k: int) -> dict:
        out = {}
        for m, c in self.terms.items():
            if m[k] > 0:
                mm = list(m)
                mm[k] -= 1
                out[tuple(mm)] = out.get(tuple(mm), 0) + c * m[k]
        return out

    def rescaled(self, y, r: float) -> "HarmonicPolynomial":
        """h_{y,r}(X) = h(r X + y) / r."""
        y = [float(v) for v in y]
        out = {}
        for m, c in self.terms.items():
            # expand prod_k (r x_k + y_k)^{m_k}
            parts = []
            for k, a in enumerate(m):
                parts.append([(b, math.comb(a, b) * r**b * y[k] ** (a - b)) for b in range(a + 1)])
            for combo in product(*parts):
                mm = tuple(b for b, _ in combo)
                coef = float(c) / r
                for _, v in combo:
                    coef *= v
                out[mm] = out.get(mm, 0.0) + coef
        return HarmonicPolynomial(self.dim, out, check=True)

    def __call__(self, X) -> np.ndarray:
        return _eval_terms(self.terms, np.asarray(X, dtype=float), self.dim)

    def gradient(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return np.stack([_eval_terms(self.derivative(k), X, self.dim) for k in range(self.dim)], axis=-1)

    def __neg__(self):
        return HarmonicPolynomial(self.dim, {m: -c for m, c in self.terms.items()}, check=False)

    def __repr__(self):
        return f"HarmonicPolynomial(dim={self.dim}, terms={self.terms})"

    def to_dict(self) -> dict:
        return {"dim": self.dim, "terms": [[float(c), list(m)] for m, c in sorted(self.terms.items())]}

    @classmethod
    def from_dict(cls, d: dict) -> "HarmonicPolynomial":
        terms = {}
        for c, m in d["terms"]:
            c = int(c) if float(c).is_integer() else float(c)
            terms[tuple(m)] = c
        return cls(int(d["dim"]), terms)

    # ----- common constructors

    @classmethod
    def linear(cls, normal) -> "HarmonicPolynomial":
        normal = list(normal)
        dim = len(normal)
        return cls(dim, {tuple(int(i == k) for i in range(dim)): normal[k] for k in range(dim)})


def _eval_terms(terms: dict, X: np.ndarray, dim: int) -> np.ndarray:
    shape = X.shape[:-1]
    out = np.zeros(shape)
    if not terms:
        return out
    deg = max(max(m) for m in terms)
    pows = [np.stack([X[..., k] ** e for e in range(deg + 1)]) for k in range(dim)]
    for m, c in terms.items():
        term = np.full(shape, float(c))
        for k, e in enumerate(m):
            if e:
                term = term * pows[k][e]
        out = out + term
    return out


def poly_eval(h: HarmonicPolynomial, X):
    """Exact value and gradient of ``h`` at ``X`` (one point or an array)."""
    return h(X), h.gradient(X)


def harmonic_basis(dim: int, degree: int) -> list[HarmonicPolynomial]:
    """Basis of harmonic polynomials of degree <= ``degree`` with exact coefficients.

    2D: 1, Re z^k, Im z^k. 3D: rational null space of the Laplacian on
    homogeneous polynomials of each degree (2k+1 per degree).
    """
    basis = [HarmonicPolynomial(dim, {(0,) * dim: 1})]
    for k in range(1, degree + 1):
        if dim == 2:
            re, im = {}, {}
            for j in range(k + 1):
                c = math.comb(k, j)
                # i^j
                if j % 4 == 0:
                    re[(k - j, j)] = c
                elif j % 4 == 1:
                    im[(k - j, j)] = c
                elif j % 4 == 2:
                    re[(k - j, j)] = -c
                else:
                    im[(k - j, j)] = -c
            basis += [HarmonicPolynomial(2, re), HarmonicPolynomial(2, im)]
        else:
            basis += _homogeneous_harmonics_3d(k)
    return basis


def _homogeneous_harmonics_3d(k: int) -> list[HarmonicPolynomial]:
    import sympy

    mons = [(a, b, k - a - b) for a in range(k + 1) for b in range(k + 1 - a)]
    if k < 2:
        return [HarmonicPolynomial(3, {m: 1}) for m in mons]
    low = [(a, b, k - 2 - a - b) for a in range(k - 1) for b in range(k - 1 - a)]
    idx = {m: i for i, m in enumerate(low)}
    L = sympy.zeros(len(low), len(mons))
    for j, m in enumerate(mons):
        for ax in range(3):
            if m[ax] >= 2:
                mm = list(m)
                mm[ax] -= 2
                L[idx[tuple(mm)], j] += m[ax] * (m[ax] - 1)
    out = []
    for v in L.nullspace():
        den = sympy.ilcm(*[sympy.fraction(x)[1] for x in v])
        terms = {mons[j]: int(v[j] * den) for j in range(len(mons)) if v[j] != 0}
        out.append(HarmonicPolynomial(3, terms))
    return out


# --------------------------------------------------------------------------
# zero sets


def _newton_project(h: HarmonicPolynomial, Y: np.ndarray, iters: int = 30) -> np.ndarray:
    Y = Y.copy()
    for _ in range(iters):
        v = h(Y)
        g = h.gradient(Y)
        g2 = np.einsum("ij,ij->i", g, g)
        ok = g2 > 1e-300
        step = np.zeros_like(Y)
        step[ok] = (v[ok] / g2[ok])[:, None] * g[ok]
        Y -= step
        if np.max(np.abs(step), initial=0.0) < 1e-15:
            break
    return Y


def _contours_2d(h, center, s, n_points):
    from skimage.measure import find_contours

    G = int(min(1201, max(161, 2 * math.sqrt(n_points) + 1)))
    L = 1.05 * s
    # irrational offset keeps grid nodes off symmetric zero sets
    off = 0.3137 * (2 * L / G)
    xs = np.linspace(-L, L, G) + off + center[0]
    ys = np.linspace(-L, L, G) + off + center[1]
    XX, YY = np.meshgrid(xs, ys, indexing="ij")
    V = h(np.stack([XX, YY], axis=-1))
    dx = xs[1] - xs[0]
    lines = []
    for c in find_contours(V, 0.0):
        lines.append(np.column_stack([xs[0] + c[:, 0] * dx, ys[0] + c[:, 1] * dx]))
    return lines


def _resample(line: np.ndarray, delta: float) -> np.ndarray:
    seg = np.linalg.norm(np.diff(line, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = cum[-1]
    if total == 0:
        return line[:1]
    m = max(2, int(math.ceil(total / delta)) + 1)
    t = np.linspace(0.0, total, m)
    return np.column_stack([np.interp(t, cum, line[:, k]) for k in range(line.shape[1])])


def _clip_to_ball(A, B, center, s):
    """Cut segments that cross the sphere |x - center| = s at the crossing point."""
    A, B = A.copy(), B.copy()
    ina = np.linalg.norm(A - center, axis=1) <= s
    inb = np.linalg.norm(B - center, axis=1) <= s
    for i in np.nonzero(ina != inb)[0]:
        a, d = A[i] - center, B[i] - A[i]
        qa, qb, qc = d @ d, 2 * (a @ d), a @ a - s * s
        disc = math.sqrt(max(qb * qb - 4 * qa * qc, 0.0))
        ts = [t for t in ((-qb - disc) / (2 * qa), (-qb + disc) / (2 * qa)) if 0.0 <= t <= 1.0]
        if not ts:
            continue
        x = A[i] + ts[0] * d
        if ina[i]:
            B[i] = x
        else:
            A[i] = x
    return A, B


def _zero_set_atoms_2d(h, center, s, n_points):
    lines = _contours_2d(h, center, s, n_points)
    if not lines:
        return np.zeros((0, 2)), np.zeros(0)
    inside_len = 0.0
    for ln in lines:
        mid = 0.5 * (ln[1:] + ln[:-1])
        seg = np.linalg.norm(np.diff(ln, axis=0), axis=1)
        inside_len += seg[np.linalg.norm(mid - center, axis=1) <= s].sum()
    delta = max(inside_len, 1e-12) / max(n_points, 1)
    atoms, lengths = [], []
    for ln in lines:
        nodes = _newton_project(h, _resample(ln, delta))
        if len(nodes) < 2:
            continue
        A, B = _clip_to_ball(nodes[:-1], nodes[1:], center, s)
        mids = _newton_project(h, 0.5 * (A + B))
        seg = np.linalg.norm(B - A, axis=1)
        keep = np.linalg.norm(mids - center, axis=1) <= s
        atoms.append(mids[keep])
        lengths.append(seg[keep])
    return np.vstack(atoms), np.concatenate(lengths)


def _zero_set_atoms_3d(h, center, s, n_points):
    from skimage.measure import marching_cubes

    G = int(min(160, max(24, 1.3 * math.sqrt(n_points))))
    L = 1.05 * s
    off = 0.3137 * (2 * L / G)
    ax = np.linspace(-L, L, G) + off
    dx = ax[1] - ax[0]
    XX, YY, ZZ = np.meshgrid(ax + center[0], ax + center[1], ax + center[2], indexing="ij")
    V = h(np.stack([XX, YY, ZZ], axis=-1))
    if V.min() > 0 or V.max() < 0:
        return np.zeros((0, 3)), np.zeros(0)
    verts, faces, _, _ = marching_cubes(V, 0.0, spacing=(dx, dx, dx))
    verts = verts + (ax[0] + np.asarray(center))
    verts = _newton_project(h, verts)
    tri = verts[faces]
    cent = _newton_project(h, tri.mean(axis=1))
    area = 0.5 * np.linalg.norm(np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]), axis=1)
    keep = np.linalg.norm(cent - center, axis=1) <= s
    return cent[keep], area[keep]


def zero_set_sample(h: HarmonicPolynomial, center, s: float, n_points: int):
    """Atoms on ``{h = 0} cap B(center, s)`` with their H^{n-1} cell sizes.

    Contours (marching squares in 2D, marching cubes in 3D) are
    Newton-projected onto the zero set; each atom is the projected midpoint
    of an arc or triangle and carries its length or area.
    """
    center = np.asarray(center, dtype=float)
    if h.dim == 2:
        return _zero_set_atoms_2d(h, center, s, n_points)
    return _zero_set_atoms_3d(h, center, s, n_points)


def poly_zero_measure(h: HarmonicPolynomial, s: float, n_points: int = 4000, center=None) -> DiscreteMeasure:
    """Discretize ``|grad h| H^{n-1}`` restricted to ``{h = 0} cap B(center, s)``."""
    if not s > 0:
        raise InvalidArgument("s must be positive")
    center = np.zeros(h.dim) if center is None else np.asarray(center, dtype=float)
    pts, size = zero_set_sample(h, center, s, n_points)
    if len(pts) == 0:
        raise EmptySampleError("zero set of h not found in the ball")
    g = np.linalg.norm(h.gradient(pts), axis=1)
    return DiscreteMeasure(h.dim, pts, g * size)
