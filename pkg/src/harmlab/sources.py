"""Harmonic-measure sources for the analysis pipeline.

A source answers three questions about one side of a domain:

* ``mass(Q, r)`` -> (omega(B(Q, r)), standard error)
* ``measure(Q, r, resolution)`` -> omega restricted to B(Q, r) as a DiscreteMeasure
* ``green(X)`` -> Green function with the source's pole (0 off its side), when known

Exact sources (disc, half-space, wedge, polynomial zero set) carry zero
standard error; :class:`EmpiricalSource` wraps walk-on-spheres exit points.
"""
from __future__ import annotations

import math

import numpy as np

from .domain_kit import BallDomain, HalfSpace, Wedge
from .errors import InvalidArgument, InvalidPole
from .harmonic_engine import ABSORBED, ExitSample, _circle_arc, _disc_arc_measure
from .measure_kit import DiscreteMeasure, _disc_nodes, _frame
from .polynomial import HarmonicPolynomial, poly_zero_measure

__all__ = ["DiscSource", "HalfSpaceSource", "WedgeSource", "PolySource", "EmpiricalSource"]


class _Source:
    dim: int
    exact = True
    lost_fraction = 0.0

    def mass(self, Q, r):
        raise NotImplementedError

    def measure(self, Q, r, resolution=400):
        raise NotImplementedError

    def green(self, X):
        raise NotImplementedError


class DiscSource(_Source):
    """Harmonic measure of a disc or of its exterior (2D)."""

    def __init__(self, domain: BallDomain, pole):
        if domain.dim != 2:
            raise InvalidArgument("DiscSource is planar")
        pole = np.asarray(pole, dtype=float)
        if not domain.contains(pole):
            raise InvalidPole("pole must lie in the domain")
        self.domain = domain
        self.dim = 2
        self.pole = pole
        self.c = domain.center
        self.R = domain.radius

    def _arc(self, a, b):
        return _disc_arc_measure(self.c, self.R, self.pole, a, b)

    def mass(self, Q, r):
        from .harmonic_engine import BallCell

        a, b = _circle_arc(self.c, self.R, BallCell(tuple(Q), r))
        return self._arc(a, b), 0.0

    def measure(self, Q, r, resolution=400):
        from .harmonic_engine import BallCell

        a, b = _circle_arc(self.c, self.R, BallCell(tuple(Q), r))
        if b <= a:
            return DiscreteMeasure.empty(2)
        edges = np.linspace(a, b, resolution + 1)
        mids = 0.5 * (edges[1:] + edges[:-1])
        w = np.array([self._arc(edges[i], edges[i + 1]) for i in range(resolution)])
        pts = self.c + self.R * np.column_stack([np.cos(mids), np.sin(mids)])
        return DiscreteMeasure(2, pts, w)

    def green(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        z = (X[:, 0] - self.c[0]) + 1j * (X[:, 1] - self.c[1])
        w = complex(*(self.pole - self.c))
        with np.errstate(divide="ignore"):
            g = np.log(np.abs(self.R**2 - z * np.conj(w)) / (self.R * np.abs(z - w))) / (2 * math.pi)
        return np.where(self.domain.contains(X), g, 0.0)


class HalfSpaceSource(_Source):
    """Harmonic measure of a half-space side.

    ``pole=None`` is the pole at infinity: omega is surface measure on the
    hyperplane and the Green function is the distance to it.
    """

    def __init__(self, domain: HalfSpace, pole=None):
        self.domain = domain
        self.dim = domain.dim
        self.nrm = domain.normal * domain.side  # points into this side
        self.pole = None if pole is None else np.asarray(pole, dtype=float)
        if self.pole is not None and not domain.contains(self.pole):
            raise InvalidPole("pole must lie in the domain")

    def _height(self, X):
        return (X @ self.domain.normal - self.domain.offset) * self.domain.side

    def _disc(self, Q, r):
        Q = np.asarray(Q, dtype=float)
        dq = float(self._height(Q[None])[0])
        if abs(dq) >= r:
            return None
        return Q - dq * self.nrm, math.sqrt(r * r - dq * dq)

    def _density(self, Y):
        if self.pole is None:
            return np.ones(len(Y))
        h = float(self._height(self.pole[None])[0])
        d2 = np.sum((Y - self.pole) ** 2, axis=1)
        if self.dim == 2:
            return h / (math.pi * d2)
        return h / (2 * math.pi * d2**1.5)

    def mass(self, Q, r):
        disc = self._disc(Q, r)
        if disc is None:
            return 0.0, 0.0
        cc, rho = disc
        if self.pole is None:
            return (2 * rho if self.dim == 2 else math.pi * rho * rho), 0.0
        from .harmonic_engine import BallCell, _half_space_measure

        return _half_space_measure(self.domain, self.pole, BallCell(tuple(cc), rho)), 0.0

    def measure(self, Q, r, resolution=400):
        disc = self._disc(Q, r)
        if disc is None:
            return DiscreteMeasure.empty(self.dim)
        cc, rho = disc
        frame = _frame(self.domain.normal)
        if self.dim == 2:
            edges = np.linspace(-rho, rho, resolution + 1)
            mids = 0.5 * (edges[1:] + edges[:-1])
            pts = cc + mids[:, None] * frame[0]
            if self.pole is None:
                w = np.diff(edges)
            else:
                foot = self.pole - float(self._height(self.pole[None])[0]) * self.nrm
                h = float(self._height(self.pole[None])[0])
                s = (cc - foot) @ frame[0] + edges
                w = np.diff(np.arctan(s / h)) / math.pi
            return DiscreteMeasure(2, pts, w)
        uv, area = _disc_nodes(resolution)
        pts = cc + rho * uv @ frame
        return DiscreteMeasure(3, pts, self._density(pts) * area * rho * rho)

    def green(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        h = self._height(X)
        if self.pole is None:
            return np.maximum(h, 0.0)
        star = self.pole - 2 * float(self._height(self.pole[None])[0]) * self.nrm
        from .harmonic_engine import fundamental_solution

        with np.errstate(divide="ignore"):
            g = fundamental_solution(self.dim, X - self.pole) - fundamental_solution(self.dim, X - star)
        return np.where(h > 0, g, 0.0)


class WedgeSource(_Source):
    """Exact harmonic measure of a planar wedge side via ``z -> z^{pi/angle}``."""

    def __init__(self, domain: Wedge, pole):
        self.domain = domain
        self.dim = 2
        self.pole = np.asarray(pole, dtype=float)
        if not domain.contains(self.pole):
            raise InvalidPole("pole must lie in the domain")
        self.alpha = domain.opening
        bis = domain.direction if domain.side == 1 else domain.direction + math.pi
        self.start = bis - self.alpha / 2  # first boundary ray, mapped to the positive axis
        self.k = math.pi / self.alpha
        self.apex = domain.apex
        W = self._map(self.pole[None])[0]
        self.u, self.v = W.real, W.imag

    def _map(self, X):
        z = (X[:, 0] - self.apex[0]) + 1j * (X[:, 1] - self.apex[1])
        z = z * complex(math.cos(-self.start), math.sin(-self.start))
        ang = np.mod(np.angle(z), 2 * math.pi)
        return np.abs(z) ** self.k * np.exp(1j * self.k * ang)

    def _seg(self, a, b):
        return (math.atan((b - self.u) / self.v) - math.atan((a - self.u) / self.v)) / math.pi

    def _ray_interval(self, ray_angle, Q, r):
        e = np.array([math.cos(ray_angle), math.sin(ray_angle)])
        w = self.apex - np.asarray(Q, dtype=float)
        b = float(e @ w)
        disc = b * b - (w @ w - r * r)
        if disc < 0:
            return None
        s = math.sqrt(disc)
        t0, t1 = max(0.0, -b - s), -b + s
        return (t0, t1, e) if t1 > t0 else None

    def _rays(self):
        return [(self.start, 1.0), (self.start + self.alpha, -1.0)]

    def mass(self, Q, r):
        tot = 0.0
        for ang, sgn in self._rays():
            iv = self._ray_interval(ang, Q, r)
            if iv is None:
                continue
            t0, t1, _ = iv
            a, b = t0**self.k, t1**self.k
            tot += self._seg(a, b) if sgn > 0 else self._seg(-b, -a)
        return tot, 0.0

    def measure(self, Q, r, resolution=400):
        pts, ws = [], []
        for ang, sgn in self._rays():
            iv = self._ray_interval(ang, Q, r)
            if iv is None:
                continue
            t0, t1, e = iv
            edges = np.linspace(t0, t1, resolution // 2 + 1)
            mids = 0.5 * (edges[1:] + edges[:-1])
            img = edges**self.k
            if sgn > 0:
                w = np.diff(np.arctan((img - self.u) / self.v)) / math.pi
            else:
                w = -np.diff(np.arctan((-img - self.u) / self.v)) / math.pi
            pts.append(self.apex + mids[:, None] * e)
            ws.append(w)
        if not pts:
            return DiscreteMeasure.empty(2)
        return DiscreteMeasure(2, np.vstack(pts), np.concatenate(ws))

    def green(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        W = self._map(X)
        P = complex(self.u, self.v)
        with np.errstate(divide="ignore"):
            g = np.log(np.abs(W - np.conj(P)) / np.abs(W - P)) / (2 * math.pi)
        return np.where(self.domain.contains(X), g, 0.0)


class PolySource(_Source):
    """omega_h = |grad h| H^{n-1} on {h = 0}; the Green function is (sign * h)^+."""

    def __init__(self, h: HarmonicPolynomial, sign: int = 1, resolution: int = 20000):
        self.h = h
        self.dim = h.dim
        self.sign = 1 if sign >= 0 else -1
        self.default_resolution = resolution

    def mass(self, Q, r):
        m = poly_zero_measure(self.h, r, self.default_resolution, center=Q)
        return m.mass, 0.0

    def measure(self, Q, r, resolution=None):
        return poly_zero_measure(self.h, r, resolution or self.default_resolution, center=Q)

    def green(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.maximum(self.sign * self.h(X), 0.0)

    def green_gradient(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        g = self.sign * self.h.gradient(X)
        return np.where((self.sign * self.h(X) > 0)[:, None], g, 0.0)


class EmpiricalSource(_Source):
    """Harmonic measure estimated from walk-on-spheres exit points (weight 1/n each)."""

    exact = False

    def __init__(self, exits: ExitSample, green=None):
        self.exits = exits
        self.dim = exits.dim
        self.n = exits.n_walks
        self.pts = exits.points[exits.status == ABSORBED]
        self.lost_fraction = exits.lost_fraction
        self._green = green

    def mass(self, Q, r):
        k = int(np.count_nonzero(np.linalg.norm(self.pts - np.asarray(Q, dtype=float), axis=1) <= r))
        p = k / self.n
        return p, math.sqrt(p * (1 - p) / self.n)

    def measure(self, Q, r, resolution=None):
        d = np.linalg.norm(self.pts - np.asarray(Q, dtype=float), axis=1)
        P = self.pts[d <= r]
        return DiscreteMeasure(self.dim, P, np.full(len(P), 1.0 / self.n))

    def green(self, X):
        if self._green is None:
            raise NotImplementedError("no Green function attached to this empirical source")
        return self._green(X)
