"""Closed-form RBF width from class geometry (dual min-max rule).

The rule balances two competing goals in feature space: shrinking the largest
mapped class diameter, which grows with ``gamma * D_max**2``, and enlarging
the smallest mapped class distance, which grows with ``gamma * d_min**2``.
Minimizing the weighted sum

.. math::

    G(\\gamma) = \\lambda \\gamma D_{max}^2 + \\frac{1 - \\lambda}{\\gamma d_{min}^2}

gives the stationary point
``gamma(lambda) = sqrt((1 - lambda) / (lambda D_max^2 d_min^2))``, and the
balanced weight ``lambda = 1/2`` yields

.. math::

    \\bar\\gamma = \\frac{1}{D_{max} d_{min}}, \\qquad
    \\bar\\sigma = \\sqrt{D_{max} d_{min} / 2}.

Because a single mislabelled sample can drive ``d_min`` towards zero, the
default ``"avg"`` variant replaces it by the root-mean-square ``d_av`` of the
pairwise class distances.

Examples
--------
>>> from kernelgamma.geometry import ClassGeometry
>>> geom = ClassGeometry.from_distances([1.0, 1.0], [3.0])
>>> est = estimate(geom)
>>> round(est.gamma, 12), round(est.sigma, 6)
(0.333333333333, 1.224745)
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .geometry import ClassGeometry

__all__ = [
    "DegenerateGeometryError",
    "Variant",
    "DmmEstimate",
    "estimate",
    "gamma_to_sigma",
    "sigma_to_gamma",
    "weighted_objective",
    "objective_derivative",
    "objective_second_derivative",
    "stationary_gamma",
    "pareto_value",
    "pareto_value_derivative",
]


class DegenerateGeometryError(ValueError):
    """Class geometry admits no finite positive gamma."""


class Variant(str, enum.Enum):
    MIN = "min"
    AVG = "avg"


@dataclass(frozen=True)
class DmmEstimate:
    gamma: float
    sigma: float
    variant: Variant
    D_max: float
    d_used: float

    def to_dict(self) -> dict:
        return {"gamma": self.gamma, "sigma": self.sigma,
                "variant": self.variant.value, "D_max": self.D_max,
                "d_used": self.d_used}


def gamma_to_sigma(gamma: float) -> float:
    return math.sqrt(1.0 / (2.0 * gamma))


def sigma_to_gamma(sigma: float) -> float:
    return 1.0 / (2.0 * sigma * sigma)


def estimate(geom: ClassGeometry, variant: Variant | str = Variant.AVG) -> DmmEstimate:
    """Analytical ``gamma = 1 / (D_max * d)`` with ``d`` = ``d_av`` or ``d_min``.

    Raises
    ------
    DegenerateGeometryError
        If ``D_max`` is zero (every class collapses to a point) or the
        selected class distance is zero (touching or overlapping classes).
    """
    variant = Variant(variant)
    D = geom.d_max
    d = geom.d_av if variant is Variant.AVG else geom.d_min_interclass
    if not D > 0:
        raise DegenerateGeometryError(
            "largest class diameter is zero; every class is a single point")
    if not d > 0:
        hint = " (use the 'avg' variant)" if variant is Variant.MIN else ""
        raise DegenerateGeometryError(
            f"inter-class distance d_{variant.value} is zero; classes overlap{hint}")
    prod = D * d
    return DmmEstimate(gamma=1.0 / prod, sigma=math.sqrt(prod / 2.0),
                       variant=variant, D_max=D, d_used=d)


def _check_lambda(lam: float) -> None:
    if not 0.0 < lam < 1.0:
        raise ValueError("lambda must lie strictly between 0 and 1")


def _check_gamma(gamma: float) -> None:
    if not gamma > 0:
        raise ValueError("gamma must be positive")


def weighted_objective(gamma: float, lam: float, geom: ClassGeometry) -> float:
    """``lam * gamma * D_max^2 + (1 - lam) / (gamma * d_min^2)``."""
    _check_gamma(gamma)
    _check_lambda(lam)
    D, d = geom.d_max, geom.d_min_interclass
    return lam * gamma * D * D + (1.0 - lam) / (gamma * d * d)


def objective_derivative(gamma: float, lam: float, geom: ClassGeometry) -> float:
    _check_gamma(gamma)
    D, d = geom.d_max, geom.d_min_interclass
    return lam * D * D - (1.0 - lam) / (gamma * gamma * d * d)


def objective_second_derivative(gamma: float, lam: float, geom: ClassGeometry) -> float:
    _check_gamma(gamma)
    d = geom.d_min_interclass
    return 2.0 * (1.0 - lam) / (d * d * gamma ** 3)


def stationary_gamma(lam: float, geom: ClassGeometry) -> float:
    """Minimizer of :func:`weighted_objective` for a fixed weight ``lam``."""
    _check_lambda(lam)
    D, d = geom.d_max, geom.d_min_interclass
    if not (D > 0 and d > 0):
        raise DegenerateGeometryError("D_max and d_min must both be positive")
    return math.sqrt((1.0 - lam) / lam) / (D * d)


def pareto_value(lam: float, geom: ClassGeometry) -> float:
    """Objective value at the stationary point, ``2 sqrt(lam (1-lam)) D_max / d_min``."""
    _check_lambda(lam)
    return 2.0 * math.sqrt(lam * (1.0 - lam)) * geom.d_max / geom.d_min_interclass


def pareto_value_derivative(lam: float, geom: ClassGeometry) -> float:
    """d/dlam of :func:`pareto_value`; vanishes only at ``lam = 1/2``."""
    _check_lambda(lam)
    return ((1.0 - 2.0 * lam) / math.sqrt(lam * (1.0 - lam))
            * geom.d_max / geom.d_min_interclass)
