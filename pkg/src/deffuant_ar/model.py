"""Parameters, opinion configurations and the attraction/repulsion pair rule."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class Boundary(str, Enum):
    RING = "ring"
    SEGMENT = "segment"


class Branch(str, Enum):
    ATTRACTION = "attraction"
    REPULSION = "repulsion"


class ParameterError(ValueError):
    """Raised for out-of-range model parameters or configurations."""


@dataclass(frozen=True)
class ModelParams:
    """Confidence threshold and the two compromise/escalation factors.

    Derived constants are computed on construction. ``D`` and ``K`` only
    exist when ``mu_plus > 0``; they are ``None`` in the classic model.
    """

    theta: float
    mu_minus: float
    mu_plus: float
    rho_minus: float = field(init=False)
    rho_plus: float = field(init=False)
    D: float | None = field(init=False)
    K: int | None = field(init=False)

    def __post_init__(self):
        theta, mu_minus, mu_plus = self.theta, self.mu_minus, self.mu_plus
        for name, v in (("theta", theta), ("mu_minus", mu_minus), ("mu_plus", mu_plus)):
            if not math.isfinite(v):
                raise ParameterError(f"{name} must be finite, got {v!r}")
        if not 0.0 < theta < 2.0:
            raise ParameterError(f"theta must satisfy 0 < theta < 2, got {theta}")
        if not 0.0 < mu_minus <= 0.5:
            raise ParameterError(f"mu_minus must satisfy 0 < mu_minus <= 1/2, got {mu_minus}")
        if not 0.0 <= mu_plus <= 0.5:
            raise ParameterError(f"mu_plus must satisfy 0 <= mu_plus <= 1/2, got {mu_plus}")

        rho_minus = (1.0 + 2.0 * mu_plus) / (1.0 + 3.0 * mu_plus)
        rho_plus = 1.0 + 2.0 * mu_plus
        if mu_plus > 0:
            # below ~1e-16 the repulsion factor rounds to 1 and K is undefined
            if rho_plus == 1.0:
                raise ParameterError(f"mu_plus={mu_plus} is too small to resolve in double precision")
            D = (3.0 + 1.0 / mu_plus) * mu_minus * theta
            K = max(1, math.ceil(math.log(2.0 * D / theta) / math.log1p(2.0 * mu_plus)))
        else:
            D, K = None, None
        object.__setattr__(self, "rho_minus", rho_minus)
        object.__setattr__(self, "rho_plus", rho_plus)
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "K", K)

    @property
    def classic(self) -> bool:
        """True when repulsion is switched off (the original Deffuant model)."""
        return self.mu_plus == 0.0

    def require_repulsion(self):
        if self.classic:
            raise ParameterError("operation needs mu_plus > 0 (D and K are undefined otherwise)")

    def as_dict(self) -> dict:
        return {
            "theta": self.theta,
            "mu_minus": self.mu_minus,
            "mu_plus": self.mu_plus,
            "rho_minus": self.rho_minus,
            "rho_plus": self.rho_plus,
            "D": self.D,
            "K": self.K,
        }


def validate_params(theta: float, mu_minus: float, mu_plus: float) -> ModelParams:
    return ModelParams(float(theta), float(mu_minus), float(mu_plus))


CANONICAL = ModelParams(1.0, 0.5, 0.25)


@dataclass(frozen=True)
class InteractionOutcome:
    new_left: float
    new_right: float
    branch: Branch


def interact(a: float, b: float, params: ModelParams) -> InteractionOutcome:
    """Apply one interaction between neighbours holding opinions ``a`` and ``b``.

    Compatible pairs (``|a - b| <= theta``) move toward each other by
    ``mu_minus``; incompatible pairs move apart by ``mu_plus``.
    """
    d = b - a
    if abs(d) <= params.theta:
        m = params.mu_minus
        return InteractionOutcome(a + m * d, b - m * d, Branch.ATTRACTION)
    m = params.mu_plus
    return InteractionOutcome(a - m * d, b + m * d, Branch.REPULSION)


def interact_array(a, b, theta, mu_minus, mu_plus):
    """Vectorised :func:`interact`; parameters may be arrays too.

    Returns ``(new_a, new_b, attracted)`` where ``attracted`` is a boolean mask.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    d = b - a
    attracted = np.abs(d) <= theta
    # repulsion is attraction with factor -mu_plus
    m = np.where(attracted, mu_minus, -np.asarray(mu_plus, dtype=float))
    return a + m * d, b - m * d, attracted


@dataclass
class OpinionLattice:
    """Opinions on sites ``0..N-1`` of a ring or a segment.

    Edge ``i`` joins sites ``i`` and ``i + 1`` (mod ``N`` on a ring), so a
    ring has ``N`` edges and a segment ``N - 1``.
    """

    opinions: np.ndarray
    boundary: Boundary = Boundary.RING

    def __post_init__(self):
        self.opinions = np.ascontiguousarray(self.opinions, dtype=np.float64)
        self.boundary = Boundary(self.boundary)
        if self.opinions.ndim != 1:
            raise ParameterError("opinions must be a 1-d array")
        if self.n_sites < 4:
            raise ParameterError(f"need at least 4 sites, got {self.n_sites}")

    @property
    def n_sites(self) -> int:
        return self.opinions.shape[0]

    @property
    def n_edges(self) -> int:
        return self.n_sites if self.boundary is Boundary.RING else self.n_sites - 1

    @property
    def is_ring(self) -> bool:
        return self.boundary is Boundary.RING

    def endpoints(self, edge: int) -> tuple[int, int]:
        if not 0 <= edge < self.n_edges:
            raise IndexError(f"edge {edge} out of range for {self.n_edges} edges")
        return edge, (edge + 1) % self.n_sites

    def gap(self, edge: int) -> float:
        left, right = self.endpoints(edge)
        return abs(self.opinions[right] - self.opinions[left])

    def gaps(self) -> np.ndarray:
        x = self.opinions
        if self.is_ring:
            return np.abs(np.roll(x, -1) - x)
        return np.abs(np.diff(x))

    def apply_interaction(self, edge: int, params: ModelParams) -> InteractionOutcome:
        left, right = self.endpoints(edge)
        out = interact(self.opinions[left], self.opinions[right], params)
        self.opinions[left] = out.new_left
        self.opinions[right] = out.new_right
        return out

    def copy(self) -> "OpinionLattice":
        return OpinionLattice(self.opinions.copy(), self.boundary)


def gap(lattice: OpinionLattice, edge: int) -> float:
    return lattice.gap(edge)


def initial_config(n_sites: int, boundary="ring", rng=None) -> OpinionLattice:
    """I.i.d. uniform opinions on ``[-1, 1]``."""
    if n_sites < 4:
        raise ParameterError(f"need at least 4 sites, got {n_sites}")
    rng = np.random.default_rng(rng)
    return OpinionLattice(rng.uniform(-1.0, 1.0, size=n_sites), Boundary(boundary))
