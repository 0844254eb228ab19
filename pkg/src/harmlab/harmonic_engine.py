"""Harmonic measure and Green function estimation.

Walk-on-spheres (WoS) Monte Carlo for general domains, exact Poisson-kernel
oracles for discs, balls and half-spaces.
"""
from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate

from ._rng import counter_rng
from .domain_kit import BallDomain, Domain, HalfSpace
from .errors import InvalidArgument, InvalidPole, NotAnOracle

__all__ = [
    "WalkConfig",
    "BallCell",
    "ArcCell",
    "arc_partition",
    "ExitSample",
    "MeasureEstimate",
    "wos_exits",
    "wos_measure",
    "kernel_oracle",
    "green_estimate",
    "fundamental_solution",
    "poisson_quadrature_disc",
    "bin_exits",
]

ABSORBED, ESCAPED, LOST = 0, 1, 2


@dataclass(frozen=True)
class WalkConfig:
    n_walks: int = 100_000
    epsilon_shell: float | None = None  # default 1e-6 * domain scale
    max_steps: int = 10_000
    seed: int = 0
    block_size: int = 16_384

    def __post_init__(self):
        if self.n_walks < 1:
            raise InvalidArgument("n_walks must be >= 1")
        if self.epsilon_shell is not None and not self.epsilon_shell > 0:
            raise InvalidArgument("epsilon_shell must be positive")

    def eps_for(self, domain: Domain) -> float:
        return self.epsilon_shell if self.epsilon_shell is not None else 1e-6 * domain.scale


@dataclass(frozen=True)
class BallCell:
    """Boundary region ``boundary cap B(center, radius)``."""

    center: tuple
    radius: float

    def member(self, P):
        return np.linalg.norm(P - np.asarray(self.center), axis=1) <= self.radius


@dataclass(frozen=True)
class ArcCell:
    """Boundary points whose polar angle about ``center`` lies in [theta0, theta1)."""

    center: tuple
    theta0: float
    theta1: float

    def member(self, P):
        v = P - np.asarray(self.center)
        th = np.arctan2(v[:, 1], v[:, 0])
        rel = np.mod(th - self.theta0, 2 * math.pi)
        return rel < (self.theta1 - self.theta0)


def arc_partition(k: int, center=(0.0, 0.0), start: float = 0.0) -> list[ArcCell]:
    """k equal arcs covering the full circle."""
    step = 2 * math.pi / k
    return [ArcCell(tuple(center), start + i * step, start + (i + 1) * step) for i in range(k)]


def _check_disjoint(cells):
    balls = [c for c in cells if isinstance(c, BallCell)]
    for i in range(len(balls)):
        for j in range(i + 1, len(balls)):
            a, b = balls[i], balls[j]
            if np.linalg.norm(np.subtract(a.center, b.center)) < a.radius + b.radius - 1e-12:
                raise InvalidArgument("overlapping ball cells")
    arcs = sorted((c for c in cells if isinstance(c, ArcCell)), key=lambda c: c.theta0)
    if sum(c.theta1 - c.theta0 for c in arcs) > 2 * math.pi + 1e-12:
        raise InvalidArgument("overlapping arc cells")
    for a, b in zip(arcs, arcs[1:]):
        if b.theta0 < a.theta1 - 1e-12:
            raise InvalidArgument("overlapping arc cells")


# ---------------------------------------------------------------- walks


@dataclass
class ExitSample:
    """Exit points of ``n_walks`` walks; ``status`` is 0 absorbed, 1 escaped to infinity, 2 lost."""

    dim: int
    points: np.ndarray
    status: np.ndarray
    steps: np.ndarray
    epsilon_shell: float

    @property
    def n_walks(self) -> int:
        return len(self.status)

    @property
    def absorbed(self) -> np.ndarray:
        return self.points[self.status == ABSORBED]

    @property
    def lost_fraction(self) -> float:
        return float(np.mean(self.status == LOST))

    @property
    def escaped_fraction(self) -> float:
        return float(np.mean(self.status == ESCAPED))


def _unit_vectors(rng, m, dim):
    if dim == 2:
        th = rng.uniform(0.0, 2 * math.pi, m)
        return np.column_stack([np.cos(th), np.sin(th)])
    v = rng.standard_normal((m, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _sample_exterior_hit(rng, x, c, R):
    """Hitting point on the sphere |y - c| = R from |x - c| > R.

    2D: exact (Brownian motion is recurrent; inversion plus a Moebius map of
    a uniform angle). 3D: returns (points, hit mask); the sphere is hit with
    probability R/|x - c|, otherwise the walk escapes.
    """
    v = x - c
    m, dim = v.shape
    if dim == 2:
        z = (v[:, 0] + 1j * v[:, 1]) / R
        a = 1.0 / np.conj(z)  # inverted point, |a| < 1
        w = np.exp(1j * rng.uniform(0, 2 * math.pi, m))
        zeta = (w + a) / (1 + np.conj(a) * w)
        return c + R * np.column_stack([zeta.real, zeta.imag]), np.ones(m, dtype=bool)
    rx = np.linalg.norm(v, axis=1)
    hit = rng.random(m) < R / rx
    out = np.empty_like(v)
    idx = np.nonzero(hit)[0]
    # rejection from uniform: density ~ 1/|x - y|^3, max/min ratio <= ((rx+R)/(rx-R))^3
    pending = idx
    while len(pending):
        y = R * _unit_vectors(rng, len(pending), 3)
        d = np.linalg.norm(v[pending] - y, axis=1)
        dmin = rx[pending] - R
        acc = rng.random(len(pending)) < (dmin / d) ** 3
        out[pending[acc]] = c + y[acc]
        pending = pending[~acc]
    return out, hit


def _walk_block(domain, x0, m, eps, max_steps, rng):
    dim = domain.dim
    pos = np.tile(np.asarray(x0, dtype=float), (m, 1))
    status = np.full(m, LOST, dtype=np.int8)
    steps = np.zeros(m, dtype=np.int64)
    active = np.arange(m)
    bb = domain.bounding_ball() if domain.side == -1 else None
    for _ in range(max_steps):
        if len(active) == 0:
            break
        p = pos[active]
        if bb is not None:
            c, R = np.asarray(bb[0], dtype=float), float(bb[1])
            far = np.linalg.norm(p - c, axis=1) > 4 * R
            if np.any(far):
                fi = np.nonzero(far)[0]
                newp, hit = _sample_exterior_hit(rng, p[fi], c, 2 * R)
                esc = active[fi[~hit]]
                status[esc] = ESCAPED
                pos[esc] = np.nan
                p[fi[hit]] = newp[hit]
                pos[active[fi[hit]]] = newp[hit]
                keep = np.ones(len(active), dtype=bool)
                keep[fi[~hit]] = False
                active, p = active[keep], p[keep]
        d = domain.boundary_distance(p)
        done = d <= eps
        if np.any(done):
            idx = active[done]
            pos[idx] = domain.project(p[done])
            status[idx] = ABSORBED
            active, p, d = active[~done], p[~done], d[~done]
        if len(active) == 0:
            break
        p = p + d[:, None] * _unit_vectors(rng, len(active), dim)
        pos[active] = p
        steps[active] += 1
    return pos, status, steps


def wos_exits(domain: Domain, start, cfg: WalkConfig) -> ExitSample:
    """Run ``cfg.n_walks`` walk-on-spheres paths from ``start``.

    Walks are processed in blocks with independent counter-based streams
    keyed by (seed, block index), so results do not depend on scheduling.
    In exterior domains of bounded sets, walkers farther than 4R from the
    boundary's bounding ball B(c, R) jump exactly to the sphere of radius 2R.
    """
    start = np.asarray(start, dtype=float)
    eps = cfg.eps_for(domain)
    if start.shape != (domain.dim,) or not domain.contains(start) or domain.boundary_distance(start) <= eps:
        raise InvalidPole(f"start point {start.tolist()} is not strictly inside the domain")
    pts, st, sp = [], [], []
    n = cfg.n_walks
    for b, s in enumerate(range(0, n, cfg.block_size)):
        m = min(cfg.block_size, n - s)
        p, status, steps = _walk_block(domain, start, m, eps, cfg.max_steps, counter_rng(cfg.seed, b))
        pts.append(p)
        st.append(status)
        sp.append(steps)
    return ExitSample(domain.dim, np.vstack(pts), np.concatenate(st), np.concatenate(sp), eps)


@dataclass
class MeasureEstimate:
    cells: list
    hits: np.ndarray
    probabilities: np.ndarray
    std_errors: np.ndarray
    n_walks: int
    lost_fraction: float
    escaped_fraction: float
    bias_bound: float
    warning: bool
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "cells": [dict(type=type(c).__name__, **{k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(c).items()}) for c in self.cells],
            "hits": self.hits.tolist(),
            "probabilities": self.probabilities.tolist(),
            "std_errors": self.std_errors.tolist(),
            "n_walks": self.n_walks,
            "lost_fraction": self.lost_fraction,
            "escaped_fraction": self.escaped_fraction,
            "bias_bound": self.bias_bound,
            "warning": self.warning,
            "config": self.config,
        }

    def csv_rows(self):
        rows = []
        for c, h, p, e in zip(self.cells, self.hits, self.probabilities, self.std_errors):
            if isinstance(c, BallCell):
                rows.append(["ball", *c.center, c.radius, "", "", int(h), p, e])
            else:
                rows.append(["arc", *c.center, "", c.theta0, c.theta1, int(h), p, e])
        return rows

    def to_csv(self) -> str:
        dim = len(self.cells[0].center) if self.cells else 2
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["kind", *[f"center_{k}" for k in "xyz"[:dim]], "radius", "theta0", "theta1", "hits", "probability", "std_error"])
        for row in self.csv_rows():
            w.writerow([format(v, ".17g") if isinstance(v, float) else v for v in row])
        return buf.getvalue()


def bin_exits(exits: ExitSample, cells, config=None) -> MeasureEstimate:
    n = exits.n_walks
    P = exits.points
    ok = exits.status == ABSORBED
    hits = np.array([int(np.count_nonzero(c.member(P[ok]))) for c in cells])
    p = hits / n
    se = np.sqrt(p * (1 - p) / n)
    radii = [c.radius for c in cells if isinstance(c, BallCell)]
    arcs = [c for c in cells if isinstance(c, ArcCell)]
    lengths = radii + [0.5 * (c.theta1 - c.theta0) for c in arcs]
    bias = exits.epsilon_shell / min(lengths) if lengths else 0.0
    lost = exits.lost_fraction
    warn = lost > 0.01
    if warn:
        warnings.warn(f"{100 * lost:.2f}% of walks hit max_steps", RuntimeWarning, stacklevel=2)
    return MeasureEstimate(list(cells), hits, p, se, n, lost, exits.escaped_fraction, bias, warn, config or {})


def wos_measure(domain: Domain, pole, cells, cfg: WalkConfig) -> MeasureEstimate:
    """Estimate the harmonic measure of each boundary cell seen from ``pole``."""
    _check_disjoint(cells)
    exits = wos_exits(domain, pole, cfg)
    conf = dict(asdict(cfg), epsilon_shell=exits.epsilon_shell, pole=np.asarray(pole, dtype=float).tolist(), domain=domain.spec())
    return bin_exits(exits, cells, conf)


# ---------------------------------------------------------------- exact oracles


def _circle_arc(center, R, cell):
    """Angular interval [a, b] of the circle cut out by a cell."""
    if isinstance(cell, ArcCell):
        if np.linalg.norm(np.subtract(cell.center, center)) > 1e-12:
            raise NotAnOracle("arc cell must be centered at the disc center")
        return cell.theta0, cell.theta1
    v = np.asarray(cell.center, dtype=float) - center
    D = float(np.linalg.norm(v))
    if D == 0:
        return (0.0, 2 * math.pi) if cell.radius >= R else (0.0, 0.0)
    kappa = (R * R + D * D - cell.radius**2) / (2 * R * D)
    if kappa >= 1:
        return 0.0, 0.0
    half = math.acos(max(-1.0, kappa))
    psi = math.atan2(v[1], v[0])
    return psi - half, psi + half


def _disc_arc_measure(center, R, pole, a, b):
    """Harmonic measure of the arc [a, b] from ``pole`` (inside or outside the circle)."""
    if b - a >= 2 * math.pi - 1e-15:
        return 1.0
    if b <= a:
        return 0.0
    z = complex(*(np.asarray(pole) - center)) / R
    if abs(z) > 1:
        z = 1 / z.conjugate()  # harmonic measure is invariant under inversion
    def mob(t):
        e = complex(math.cos(t), math.sin(t))
        return (e - z) / (1 - z.conjugate() * e)
    ang = math.atan2(mob(b).imag, mob(b).real) - math.atan2(mob(a).imag, mob(a).real)
    ang = ang % (2 * math.pi)
    return ang / (2 * math.pi)


def _ball_cap_measure(center, R, pole, cell):
    """3D: Poisson-kernel integral over the spherical cap cut out by a ball cell."""
    v = np.asarray(cell.center, dtype=float) - center
    D = float(np.linalg.norm(v))
    x = np.asarray(pole, dtype=float) - center
    rx = float(np.linalg.norm(x))
    if D == 0:
        return 1.0 if cell.radius >= R else 0.0
    kappa = (R * R + D * D - cell.radius**2) / (2 * R * D)
    if kappa >= 1:
        return 0.0
    kappa = max(-1.0, kappa)
    axis = v / D
    from .measure_kit import _frame

    e1, e2 = _frame(axis)

    def kern(phi, t):
        # t = cos of the angle to the axis
        s = math.sqrt(max(0.0, 1 - t * t))
        y = R * (t * axis + s * (math.cos(phi) * e1 + math.sin(phi) * e2))
        return abs(R * R - rx * rx) / (4 * math.pi * R * np.linalg.norm(x - y) ** 3) * R * R

    val, _ = integrate.dblquad(kern, kappa, 1.0, 0.0, 2 * math.pi, epsabs=1e-12, epsrel=1e-10)
    return float(val)


def _half_space_measure(dom: HalfSpace, pole, cell):
    pole = np.asarray(pole, dtype=float)
    nrm = dom.normal
    h = abs(float(pole @ nrm - dom.offset))
    foot = pole - (pole @ nrm - dom.offset) * nrm
    c = np.asarray(cell.center, dtype=float)
    dc = float(c @ nrm - dom.offset)
    if abs(dc) >= cell.radius:
        return 0.0
    rho = math.sqrt(cell.radius**2 - dc * dc)
    cc = c - dc * nrm
    if dom.dim == 2:
        t = np.array([nrm[1], -nrm[0]])
        s0 = float((cc - foot) @ t)
        return (math.atan((s0 + rho) / h) - math.atan((s0 - rho) / h)) / math.pi
    off = cc - foot
    doff = float(np.linalg.norm(off))
    if doff < 1e-15:
        return 1.0 - h / math.sqrt(h * h + rho * rho)

    def kern(phi, s):
        q2 = doff * doff + s * s + 2 * doff * s * math.cos(phi)
        return h / (2 * math.pi * (q2 + h * h) ** 1.5) * s

    val, _ = integrate.dblquad(kern, 0.0, rho, 0.0, 2 * math.pi, epsabs=1e-12, epsrel=1e-10)
    return float(val)


def kernel_oracle(domain: Domain, pole, cell) -> float:
    """Exact harmonic measure of a boundary cell for discs, balls and half-spaces.

    Discs use the Moebius closed form; 2D half-planes the arctan formula;
    3D balls and half-spaces adaptive quadrature of the Poisson kernel to
    about 1e-10.
    """
    pole = np.asarray(pole, dtype=float)
    if not domain.contains(pole):
        raise InvalidPole("pole must lie in the domain")
    if isinstance(domain, BallDomain):
        if domain.dim == 2:
            a, b = _circle_arc(domain.center, domain.radius, cell)
            return _disc_arc_measure(domain.center, domain.radius, pole, a, b)
        if not isinstance(cell, BallCell):
            raise NotAnOracle("3D oracle needs ball cells")
        return _ball_cap_measure(domain.center, domain.radius, pole, cell)
    if isinstance(domain, HalfSpace):
        if not isinstance(cell, BallCell):
            raise NotAnOracle("half-space oracle needs ball cells")
        return _half_space_measure(domain, pole, cell)
    raise NotAnOracle(f"no closed form for domain kind {domain.kind!r}")


def poisson_quadrature_disc(pole, a, b, R=1.0) -> float:
    """Direct quadrature of the disc Poisson kernel over the arc [a, b] (independent check)."""
    x = complex(*pole)
    def P(t):
        e = R * complex(math.cos(t), math.sin(t))
        return abs(R * R - abs(x) ** 2) / (2 * math.pi * abs(e - x) ** 2)
    val, _ = integrate.quad(P, a, b, epsabs=1e-13, epsrel=1e-12, limit=500)
    return float(val)


# ---------------------------------------------------------------- Green function


def fundamental_solution(dim: int, v) -> np.ndarray:
    """Phi_n: -(1/2pi) log|v| in 2D, 1/(4 pi |v|) in 3D (so that -Laplace Phi = delta)."""
    r = np.linalg.norm(np.atleast_2d(v), axis=-1)
    if dim == 2:
        return -np.log(r) / (2 * math.pi)
    return 1.0 / (4 * math.pi * r)


def green_estimate(domain: Domain, pole, X, cfg: WalkConfig):
    """G(X, pole) = Phi(X - pole) - E[Phi(W - pole)], W the WoS exit point from X.

    Returns (value, std_error). Escaped walks (3D exterior) contribute 0.
    """
    pole = np.asarray(pole, dtype=float)
    X = np.asarray(X, dtype=float)
    if not domain.contains(pole):
        raise InvalidPole("pole must lie strictly inside the domain")
    if np.allclose(X, pole):
        raise InvalidArgument("X must differ from the pole")
    if domain.dim == 2 and domain.side == -1 and domain.bounding_ball() is not None:
        raise InvalidArgument("2D exterior Green function needs the Robin constant; not supported")
    ex = wos_exits(domain, X, cfg)
    vals = np.zeros(ex.n_walks)
    ok = ex.status == ABSORBED
    vals[ok] = fundamental_solution(domain.dim, ex.points[ok] - pole)
    use = ex.status != LOST
    vals = vals[use]
    n = len(vals)
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf
    return float(fundamental_solution(domain.dim, X - pole)[0]) - mean, se
