"""harmlab: numerical experiments on harmonic measure and boundary structure."""
from .domain_kit import BallDomain, HalfSpace, KochSnowflake, Polygon, PolyZeroSet, Prism, Wedge, make_domain
from .harmonic_engine import ArcCell, BallCell, WalkConfig, green_estimate, kernel_oracle, wos_exits, wos_measure
from .measure_kit import Ball, DiscreteMeasure, FlatMeasureSpec, dist_to_flat, f_dist, f_norm, rescale, restrict
from .polynomial import HarmonicPolynomial, poly_zero_measure

__version__ = "0.1.0"

__all__ = [
    "ArcCell",
    "Ball",
    "BallCell",
    "BallDomain",
    "DiscreteMeasure",
    "FlatMeasureSpec",
    "HalfSpace",
    "HarmonicPolynomial",
    "KochSnowflake",
    "PolyZeroSet",
    "Polygon",
    "Prism",
    "WalkConfig",
    "Wedge",
    "dist_to_flat",
    "f_dist",
    "f_norm",
    "green_estimate",
    "kernel_oracle",
    "make_domain",
    "poly_zero_measure",
    "rescale",
    "restrict",
    "wos_exits",
    "wos_measure",
]
