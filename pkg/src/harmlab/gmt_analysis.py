"""Blow-ups, ACF monotonicity, Beurling products and boundary classification.

Every limit statement (r -> 0, limsup, tangent measures) is replaced by a
finite-scale trend fit. Each verdict records the scales and thresholds
that produced it.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import IllConditioned, InsufficientSample, InvalidArgument, UnresolvedScale
from .measure_kit import Ball, DiscreteMeasure, dist_to_flat, rescale, restrict, support_hausdorff, unit_ball_volume
from .polynomial import HarmonicPolynomial, harmonic_basis

__all__ = [
    "BlowupRecord",
    "GammaProfile",
    "ClassificationRecord",
    "blowup",
    "blowup_polynomial_fit",
    "acf_gamma",
    "gamma_profile",
    "beurling_check",
    "classify_lambda",
    "flatness_profile",
    "local_dimension",
    "dimension_distribution",
    "gb_classify",
    "theta_density",
    "classify_point",
    "PolyPart",
    "Evaluator",
]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, DiscreteMeasure):
        return obj.to_dict()
    return obj


# ---------------------------------------------------------------- blow-ups


@dataclass
class BlowupRecord:
    Q: np.ndarray
    radii: list
    masses: list
    mass_errors: list
    measures: list  # normalized blow-ups omega_j, supported in B(0, 1)
    hausdorff_to_last: list
    u_samples: list = field(default_factory=list)  # (grid, values) per scale
    grid: np.ndarray | None = None
    one_sided: bool = True
    doubling: list = field(default_factory=list)  # omega(B(Q, 2r_j)) / omega(B(Q, r_j))

    def to_dict(self):
        d = {k: v for k, v in asdict(self).items() if k not in ("measures", "u_samples", "grid", "one_sided")}
        d["measures"] = [m.to_dict() for m in self.measures]
        return _jsonable(d)


def _unit_ball_grid(dim, m):
    g = np.linspace(-1, 1, m)
    G = np.array(np.meshgrid(*([g] * dim), indexing="ij")).reshape(dim, -1).T
    return G[np.linalg.norm(G, axis=1) <= 1.0]


def blowup(omega_source, Q, radii, resolution: int = 400, minus_source=None, grid_points: int = 21) -> BlowupRecord:
    """Rescaled, normalized copies ``omega_j = T_{Q,r_j}[omega] / omega(B(Q, r_j))``.

    When the source exposes a Green function, ``u_j`` is sampled on a grid
    in the unit ball: ``u_j(X) = u(r_j X + Q) r_j^{n-2} / omega(B(Q, r_j))``,
    with the minus side (``minus_source``) normalized by its own measure.
    """
    Q = np.asarray(Q, dtype=float)
    radii = [float(r) for r in radii]
    if any(b >= a for a, b in zip(radii, radii[1:])):
        raise InvalidArgument("blow-up radii must be strictly decreasing")
    dim = Q.size
    meas, masses, errs = [], [], []
    for r in radii:
        m, se = omega_source.mass(Q, r)
        if m <= 0 or (se > 0 and m <= 2 * se):
            raise UnresolvedScale(f"omega(B(Q, {r})) is not resolved (mass {m}, s.e. {se})")
        mu = omega_source.measure(Q, r, resolution)
        nu = rescale(mu, Q, r)
        tot = nu.mass if nu.mass > 0 else m
        meas.append(nu.scaled(1.0 / tot))
        masses.append(m)
        errs.append(se)
    last = meas[-1]
    unit = Ball(np.zeros(dim), 1.0)
    haus = [support_hausdorff(mj, last, unit) for mj in meas]
    # a bounded doubling ratio is the empirical precondition for tangent measures
    dbl = [omega_source.mass(Q, 2 * r)[0] / m for r, m in zip(radii, masses)]
    rec = BlowupRecord(Q, radii, masses, errs, meas, haus, doubling=dbl)
    if hasattr(omega_source, "green"):
        try:
            G = _unit_ball_grid(dim, grid_points)
            for r, m in zip(radii, masses):
                X = r * G + Q
                u = omega_source.green(X) * r ** (dim - 2) / m
                if minus_source is not None:
                    mm, _ = minus_source.mass(Q, r)
                    u = u - minus_source.green(X) * r ** (dim - 2) / mm
                rec.u_samples.append(u)
            rec.grid = G
            rec.one_sided = minus_source is None
        except NotImplementedError:
            rec.u_samples = []
    return rec


def blowup_polynomial_fit(record: BlowupRecord, max_degree: int = 2, cond_limit: float = 1e12):
    """Least-squares fit of each u_j by harmonic polynomials of degree <= max_degree.

    Returns ``(polynomials, residuals, degree_used, flagged)``; residuals are
    relative L2 misfits on the unit-ball grid.
    """
    if record.grid is None or not record.u_samples:
        raise InvalidArgument("record carries no u_j samples")
    G = record.grid
    dim = G.shape[1]
    deg = max_degree
    flagged = False
    while True:
        basis = harmonic_basis(dim, deg)
        A = np.column_stack([b(G) for b in basis])
        if np.linalg.cond(A) <= cond_limit or deg == 0:
            break
        deg -= 1
        flagged = True
    polys, res = [], []
    for u in record.u_samples:
        # a one-sided sample vanishes off its side; fit only where it is positive
        sel = (u > 0) if record.one_sided else np.ones(len(u), dtype=bool)
        coef, *_ = np.linalg.lstsq(A[sel], u[sel], rcond=None)
        fit = A[sel] @ coef
        nrm = np.linalg.norm(u[sel])
        res.append(float(np.linalg.norm(u[sel] - fit) / nrm) if nrm > 0 else 0.0)
        terms = {}
        for c, b in zip(coef, basis):
            for mi, bc in b.terms.items():
                terms[mi] = terms.get(mi, 0.0) + float(c) * float(bc)
        polys.append(HarmonicPolynomial(dim, terms, check=False))
    if flagged:
        warnings.warn(f"ill-conditioned fit, degree reduced to {deg}", RuntimeWarning, stacklevel=2)
    return polys, res, deg, flagged


# ---------------------------------------------------------------- ACF functional


class Evaluator:
    """A function with an optional analytic gradient.

    Without one, gradients are central differences with Richardson
    extrapolation. For Monte Carlo estimates pass the per-evaluation
    standard error ``noise_se`` and the length ``scale``: the step becomes
    ``10 * sqrt(noise_se) * scale`` so the difference quotient is not
    swamped by noise. Otherwise ``fd_step`` is used.
    """

    def __init__(self, f, gradient=None, fd_step=1e-4, noise_se=None, scale=1.0):
        self.f = f
        self.grad = gradient
        self.fd_step = fd_step if not noise_se else 10.0 * math.sqrt(noise_se) * scale

    def __call__(self, X):
        return self.f(np.atleast_2d(X))

    def gradient(self, X):
        X = np.atleast_2d(X)
        if self.grad is not None:
            return self.grad(X)
        h = self.fd_step
        dim = X.shape[1]

        def central(step):
            out = np.empty_like(X)
            for k in range(dim):
                e = np.zeros(dim)
                e[k] = step
                out[:, k] = (self.f(X + e) - self.f(X - e)) / (2 * step)
            return out

        return (4 * central(h / 2) - central(h)) / 3


class PolyPart(Evaluator):
    """(sign * h)^+ with exact gradient."""

    def __init__(self, h: HarmonicPolynomial, sign: int = 1):
        self.h = h
        self.sign = sign
        super().__init__(
            lambda X: np.maximum(sign * h(X), 0.0),
            lambda X: np.where((sign * h(X) > 0)[:, None], sign * h.gradient(X), 0.0),
        )


def _support_intervals(fun, rho, Q, n_scan):
    """Angular intervals on the circle |X - Q| = rho where fun > 0 (2D).

    The scan grid carries an irrational phase so that nodes avoid zeros
    sitting at rational angles; sign changes are refined by bisection.
    """
    phase = 0.3137
    th = phase + np.arange(n_scan) * (2 * math.pi / n_scan)
    P = Q + rho * np.column_stack([np.cos(th), np.sin(th)])
    pos = fun(P) > 0
    if pos.all():
        return [(0.0, 2 * math.pi)]
    if not pos.any():
        return []

    def edge(a, b, pa):
        for _ in range(60):
            m = 0.5 * (a + b)
            pm = fun(Q + rho * np.array([[math.cos(m), math.sin(m)]]))[0] > 0
            if pm == pa:
                a = m
            else:
                b = m
        return 0.5 * (a + b)

    step = 2 * math.pi / n_scan
    ups, downs = [], []
    for i in range(n_scan):
        j = (i + 1) % n_scan
        if pos[i] != pos[j]:
            c = edge(th[i], th[i] + step, pos[i])
            (downs if pos[i] else ups).append(c)
    out = []
    for a in ups:
        later = [d for d in downs if d > a]
        b = min(later) if later else min(downs) + 2 * math.pi
        out.append((a, b))
    return out


def _dirichlet_factor(ev, Q, r, dim, n_rad, n_ang):
    """(1/r^2) * integral over B(Q,r) of |grad u|^2 / |X-Q|^{n-2}, polar quadrature."""
    xr, wr = np.polynomial.legendre.leggauss(n_rad)
    rho = 0.5 * r * (xr + 1)
    wr = 0.5 * r * wr
    xa, wa = np.polynomial.legendre.leggauss(n_ang)
    total = 0.0
    if dim == 2:
        for rk, wk in zip(rho, wr):
            for a, b in _support_intervals(ev, rk, Q, 720):
                t = 0.5 * (b - a) * (xa + 1) + a
                P = Q + rk * np.column_stack([np.cos(t), np.sin(t)])
                g = ev.gradient(P)
                total += wk * rk * 0.5 * (b - a) * np.dot(wa, np.einsum("ij,ij->i", g, g))
        return total / r**2
    # 3D: weight rho^2 / rho from the volume element and the kernel
    xp, wp = np.polynomial.legendre.leggauss(n_ang)
    theta = 0.5 * math.pi * (xp + 1)
    wt = 0.5 * math.pi * wp
    for rk, wk in zip(rho, wr):
        for tj, wj in zip(theta, wt):
            st, ct = math.sin(tj), math.cos(tj)
            sub = lambda P2: ev(np.column_stack([Q[0] + rk * st * (P2[:, 0] - Q[0]) / rk, Q[1] + rk * st * (P2[:, 1] - Q[1]) / rk, np.full(len(P2), Q[2] + rk * ct)]))  # noqa: E731
            for a, b in _support_intervals(sub, rk, Q[:2], 360):
                t = 0.5 * (b - a) * (xa + 1) + a
                P = np.column_stack([Q[0] + rk * st * np.cos(t), Q[1] + rk * st * np.sin(t), np.full(len(t), Q[2] + rk * ct)])
                g = ev.gradient(P)
                total += wk * rk * wj * st * 0.5 * (b - a) * np.dot(wa, np.einsum("ij,ij->i", g, g))
    return total / r**2


def acf_gamma(u_plus, u_minus, Q, r, quad_spec=None):
    """gamma(Q, r): product of the two scaled Dirichlet-type integrals.

    Polar Gauss-Legendre quadrature, split at the zero set of u on every
    circle so each piece is smooth. The error bar is the change between
    ``(n_rad, n_ang)`` and a doubled resolution, plus any per-evaluation
    noise supplied as ``quad_spec["noise"]`` (relative).
    """
    quad_spec = dict(quad_spec or {})
    n_rad = quad_spec.get("n_rad", 24)
    n_ang = quad_spec.get("n_ang", 24)
    noise = quad_spec.get("noise", 0.0)
    Q = np.asarray(Q, dtype=float)
    dim = Q.size
    if not r > 0:
        raise InvalidArgument("r must be positive")
    lo = [_dirichlet_factor(ev, Q, r, dim, n_rad, n_ang) for ev in (u_plus, u_minus)]
    hi = [_dirichlet_factor(ev, Q, r, dim, 2 * n_rad, 2 * n_ang) for ev in (u_plus, u_minus)]
    gamma = hi[0] * hi[1]
    err = abs(gamma - lo[0] * lo[1]) + 2 * noise * abs(gamma)
    return float(gamma), float(err), (float(hi[0]), float(hi[1]))


@dataclass
class GammaProfile:
    Q: np.ndarray
    radii: list
    gamma: list
    factors: list
    errors: list
    monotone: bool

    def to_dict(self):
        return _jsonable(asdict(self))


def gamma_profile(u_plus, u_minus, Q, radii, quad_spec=None) -> GammaProfile:
    radii = [float(r) for r in radii]
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise InvalidArgument("gamma radii must be strictly increasing")
    vals, facs, errs = [], [], []
    for r in radii:
        g, e, f = acf_gamma(u_plus, u_minus, Q, r, quad_spec)
        vals.append(g)
        errs.append(e)
        facs.append(f)
    mono = all(vals[i] <= vals[i + 1] + errs[i] + errs[i + 1] for i in range(len(vals) - 1))
    return GammaProfile(np.asarray(Q, dtype=float), radii, vals, facs, errs, mono)


# ---------------------------------------------------------------- Beurling


@dataclass
class BeurlingProfile:
    Q: np.ndarray
    scales: list
    product: list
    product_errors: list
    gamma_ratio: list | None
    spread: float | None
    bounded: bool | None
    factor: float

    def to_dict(self):
        return _jsonable(asdict(self))


def beurling_check(omega_plus, omega_minus, Q, scales, gamma_fn=None, factor: float = 4.0, lost_tol: float = 0.01) -> BeurlingProfile:
    """Product profile (omega+(B)/r^{n-1}) (omega-(B)/r^{n-1}) and its spread across scales.

    ``gamma_fn(r)`` supplies gamma(Q, r) for the ratio P(r) / gamma(Q, 2r)^{1/2}.
    The verdict is withheld (None) when either estimator lost more than
    ``lost_tol`` of its walks.
    """
    Q = np.asarray(Q, dtype=float)
    n = Q.size
    P, E = [], []
    for r in scales:
        a, sa = omega_plus.mass(Q, r)
        b, sb = omega_minus.mass(Q, r)
        p = a * b / r ** (2 * (n - 1))
        P.append(p)
        rel = math.hypot(sa / a if a else math.inf, sb / b if b else math.inf)
        E.append(p * rel)
    ratio = None
    if gamma_fn is not None:
        ratio = [p / math.sqrt(gamma_fn(2 * r)) for p, r in zip(P, scales)]
    withheld = max(omega_plus.lost_fraction, omega_minus.lost_fraction) > lost_tol or min(P) <= 0
    spread = None if min(P) <= 0 else max(P) / min(P)
    bounded = None if withheld else bool(spread <= factor)
    return BeurlingProfile(Q, list(scales), P, E, ratio, spread, bounded, factor)


# ---------------------------------------------------------------- classification


DEFAULT_THRESHOLDS = {
    "slope_tol": 0.25,  # |log-log slope| below this counts as convergent
    "slope_sigmas": 3.0,  # a nonzero slope must exceed this many standard errors
    "max_rel_error": 0.5,  # median relative error above this -> undetermined
    "oscillation_crossings": 3,
    "oscillation_sigmas": 3.0,
    "gamma_tol": 0.05,  # relative change of the ratio over the finest two scales
    "flat_threshold": 0.05,
    "density_T": 1e3,
}


@dataclass
class ClassificationRecord:
    Q: list
    scales: list
    ratio: list = field(default_factory=list)
    ratio_errors: list = field(default_factory=list)
    lambda_verdict: str = "undetermined"
    h_Q: float | None = None
    ratio_slope: float | None = None
    gamma_member: bool | None = None
    gamma_oscillation: float | None = None
    flatness: list | None = None
    flatness_verdict: str | None = None
    density: list | None = None
    density_slope: float | None = None
    gb_verdict: str | None = None
    dimension_slope: float | None = None
    thresholds: dict = field(default_factory=lambda: dict(DEFAULT_THRESHOLDS))

    def to_dict(self):
        return _jsonable(asdict(self))


def _loglog_slope(r, y, err=None):
    """Weighted least-squares slope of log y against log r; returns (slope, intercept, slope_se, resid)."""
    x = np.log(np.asarray(r, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    if err is None:
        w = np.ones_like(x)
    else:
        rel = np.asarray(err, dtype=float) / np.asarray(y, dtype=float)
        w = 1.0 / np.maximum(rel, 1e-6) ** 2
    W = np.sum(w)
    xm, ym = np.sum(w * x) / W, np.sum(w * ly) / W
    sxx = np.sum(w * (x - xm) ** 2)
    slope = np.sum(w * (x - xm) * (ly - ym)) / sxx
    icpt = ym - slope * xm
    resid = ly - (icpt + slope * x)
    dof = max(1, len(x) - 2)
    s2 = np.sum(w * resid**2) / dof
    if err is None:
        se = math.sqrt(s2 / sxx)
    else:
        se = math.sqrt(max(1.0, s2) / sxx)
    return float(slope), float(icpt), float(se), float(np.sqrt(np.mean(resid**2)))


def _check_scales(scales):
    scales = [float(s) for s in scales]
    if len(scales) < 4:
        raise InsufficientSample("at least 4 scales are required for a verdict")
    return scales


def classify_lambda(omega_plus, omega_minus, Q, scales, thresholds=None) -> ClassificationRecord:
    """Lambda_1..Lambda_4 verdict from the profile omega-(B(Q,r)) / omega+(B(Q,r)).

    Converging to a positive finite limit -> Lambda1, diverging -> Lambda2,
    tending to 0 -> Lambda3, oscillating beyond error bars -> Lambda4.
    """
    th = dict(DEFAULT_THRESHOLDS, **(thresholds or {}))
    scales = _check_scales(scales)
    Q = np.asarray(Q, dtype=float)
    R, E = [], []
    for r in scales:
        a, sa = omega_plus.mass(Q, r)
        b, sb = omega_minus.mass(Q, r)
        if a <= 0 or b <= 0:
            R.append(math.nan)
            E.append(math.inf)
            continue
        R.append(b / a)
        E.append(b / a * math.hypot(sa / a, sb / b))
    rec = ClassificationRecord(Q.tolist(), scales, R, E, thresholds=th)
    Rv, Ev = np.array(R), np.array(E)
    ok = np.isfinite(Rv) & (Rv > 0)
    if ok.sum() < 4 or np.median(Ev[ok] / Rv[ok]) > th["max_rel_error"]:
        return rec
    r_ok = np.array(scales)[ok]
    Rv, Ev = Rv[ok], Ev[ok]
    # oscillation: repeated median crossings with large swings
    med = np.median(Rv)
    sgn = np.sign(Rv - med)
    sgn = sgn[sgn != 0]
    crossings = int(np.count_nonzero(np.diff(sgn)))
    swings = np.abs(np.diff(Rv))
    big = np.all(swings > th["oscillation_sigmas"] * (Ev[1:] + Ev[:-1]) + 0.0) if len(swings) else False
    slope, _, se, resid = _loglog_slope(r_ok, Rv, Ev if np.any(Ev > 0) else None)
    rec.ratio_slope = slope
    osc = abs(Rv[-1] - Rv[-2]) / Rv[-1]
    rec.gamma_oscillation = float(osc)
    if crossings >= th["oscillation_crossings"] and big:
        rec.lambda_verdict = "Lambda4"
        rec.gamma_member = False
        return rec
    significant = abs(slope) > th["slope_tol"] and (se == 0 or abs(slope) > th["slope_sigmas"] * se)
    if not significant:
        rec.lambda_verdict = "Lambda1"
        rec.h_Q = float(Rv[-1])
        rec.gamma_member = bool(osc <= th["gamma_tol"])
    elif slope < 0:
        rec.lambda_verdict = "Lambda2"  # ratio grows as r -> 0
        rec.gamma_member = False
    else:
        rec.lambda_verdict = "Lambda3"
        rec.gamma_member = False
    return rec


def flatness_profile(omega_source, Q, radii, resolution: int = 400, threshold: float = 0.05, record=None):
    """d_1(omega_j, F) along the blow-up sequence, with a flat / nonflat verdict.

    "flat": the profile ends below ``threshold`` without rising beyond it;
    "nonflat": the profile stays at or above ``threshold`` at every scale.
    """
    rec = record if record is not None else blowup(omega_source, Q, radii, resolution)
    prof = [dist_to_flat(m, 1.0) for m in rec.measures]
    if prof[-1] <= threshold and (prof[-1] <= prof[0] + 1e-9 or max(prof) <= threshold):
        verdict = "flat"
    elif min(prof) >= threshold:
        verdict = "nonflat"
    else:
        verdict = "undetermined"
    return prof, verdict


@dataclass
class LocalDimension:
    slope: float
    intercept: float
    residual: float
    slope_error: float
    radii: list
    masses: list
    dropped: list

    def to_dict(self):
        return _jsonable(asdict(self))


def local_dimension(omega_source, Q, r_min, r_max, n_radii: int = 8, max_rel_error: float = 0.5) -> LocalDimension:
    """Least-squares slope of log omega(B(Q, r)) against log r on log-spaced radii."""
    if not 0 < r_min < r_max:
        raise InvalidArgument("need 0 < r_min < r_max")
    if n_radii < 5:
        raise InvalidArgument("need at least 5 radii")
    radii = np.geomspace(r_max, r_min, n_radii)
    keep_r, keep_m, keep_e, dropped = [], [], [], []
    for r in radii:
        m, se = omega_source.mass(Q, r)
        if m <= 0 or se / m > max_rel_error:
            dropped.append(float(r))
            continue
        keep_r.append(float(r))
        keep_m.append(m)
        keep_e.append(se)
    if dropped:
        warnings.warn(f"{len(dropped)} unresolved radii dropped", RuntimeWarning, stacklevel=2)
    if len(keep_r) < 3:
        raise UnresolvedScale("fewer than 3 resolved radii")
    err = keep_e if any(e > 0 for e in keep_e) else None
    slope, icpt, se, resid = _loglog_slope(keep_r, keep_m, err)
    return LocalDimension(slope, icpt, resid, se, keep_r, keep_m, dropped)


def dimension_distribution(omega_source, points, r_min, r_max, n_radii: int = 8):
    """Local-dimension slopes over boundary points: median and quartiles."""
    slopes = []
    for Q in points:
        try:
            slopes.append(local_dimension(omega_source, Q, r_min, r_max, n_radii).slope)
        except UnresolvedScale:
            continue
    if not slopes:
        raise UnresolvedScale("no boundary point resolved")
    q1, med, q3 = np.percentile(slopes, [25, 50, 75])
    return {"median": float(med), "q1": float(q1), "q3": float(q3), "n": len(slopes), "slopes": slopes}


def gb_classify(omega_source, Q, scales, T: float = 1e3, slope_tol: float = 0.25):
    """Gamma_g / Gamma_b verdict from the density profile omega(B(Q,r)) / r^{n-1}.

    Returns ``(verdict, densities, slope)`` with verdict one of ``gamma_g``,
    ``gamma_b``, ``unbounded`` (density diverging) or ``undetermined``.
    """
    scales = _check_scales(scales)
    Q = np.asarray(Q, dtype=float)
    n = Q.size
    D, E = [], []
    for r in scales:
        m, se = omega_source.mass(Q, r)
        D.append(m / r ** (n - 1))
        E.append(se / r ** (n - 1))
    if min(D) <= 0:
        return "undetermined", D, None
    err = E if any(e > 0 for e in E) else None
    slope, _, se, _ = _loglog_slope(scales, D, err)
    bounded = all(1.0 / T <= d <= T for d in D)
    sig = abs(slope) > slope_tol and (se == 0 or abs(slope) > 3 * se)
    if not sig and bounded:
        return "gamma_g", D, slope
    if sig and slope > 0:
        return "gamma_b", D, slope
    if sig and slope < 0:
        return "unbounded", D, slope
    return "undetermined", D, slope


def theta_density(sample, Q, r, min_points: int = 20) -> float:
    """H^{n-1}(boundary cap B(Q, r)) / (v_{n-1} r^{n-1}) from per-point cell sizes."""
    Q = np.asarray(Q, dtype=float)
    n = Q.size
    d = np.linalg.norm(sample.points - Q, axis=1)
    inside = d <= r
    if np.count_nonzero(inside) < min_points:
        warnings.warn("sample too sparse for a density estimate", RuntimeWarning, stacklevel=2)
    return float(sample.weights[inside].sum() / (unit_ball_volume(n - 1) * r ** (n - 1)))


def classify_point(omega_plus, omega_minus, Q, scales, thresholds=None, flatness=True, resolution=400) -> ClassificationRecord:
    """Full per-point record: Lambda, Gamma proxy, flatness, density verdicts."""
    rec = classify_lambda(omega_plus, omega_minus, Q, scales, thresholds)
    th = rec.thresholds
    verdict, D, slope = gb_classify(omega_plus, Q, scales, T=th["density_T"], slope_tol=th["slope_tol"])
    rec.gb_verdict, rec.density, rec.density_slope = verdict, D, slope
    if flatness:
        try:
            prof, fv = flatness_profile(omega_plus, Q, scales, resolution, th["flat_threshold"])
            rec.flatness, rec.flatness_verdict = prof, fv
        except UnresolvedScale:
            rec.flatness_verdict = "unresolved"
    return rec
