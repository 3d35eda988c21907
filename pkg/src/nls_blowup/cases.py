"""Quadratic nonlinearities, mass triples and the phase-rotation predicates."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class MassTriple:
    m1: float
    m2: float
    m3: float

    def __post_init__(self):
        if not (self.m1 > 0 and self.m2 > 0 and self.m3 > 0):
            raise ValueError(f"masses must be strictly positive, got {self}")

    def detuned(self, delta: float) -> "MassTriple":
        """Multiplicatively perturb the third mass: m3 -> m3 (1 + delta)."""
        return MassTriple(self.m1, self.m2, self.m3 * (1.0 + delta))


class Quadratic(enum.Enum):
    """The four admissible quadratic couplings Q(z1, z2)."""

    U2_SQUARED = "u2^2"
    U1_U2 = "u1*u2"
    CONJ_U1_U2 = "conj(u1)*u2"
    ABS_U2_U2 = "|u2|*u2"


# Resonant mass ratios (m1 : m2 : m3) for each coupling.
_RESONANT_RATIOS = {
    Quadratic.U2_SQUARED: (1.0, 2.0, 4.0),
    Quadratic.U1_U2: (1.0, 2.0, 3.0),
    Quadratic.CONJ_U1_U2: (1.0, 2.0, 1.0),
    Quadratic.ABS_U2_U2: (1.0, 2.0, 2.0),
}

# Lifespan scaling order: T_eps ~ eps^{-order} at the resonant ratio.
_LIFESPAN_ORDER = {
    Quadratic.U2_SQUARED: 4,
    Quadratic.U1_U2: 6,
    Quadratic.CONJ_U1_U2: 6,
    Quadratic.ABS_U2_U2: 4,
}


@dataclass(frozen=True)
class NonlinearityCase:
    kind: Quadratic
    masses: MassTriple

    @classmethod
    def resonant(cls, kind: Quadratic, m1: float = 1.0) -> "NonlinearityCase":
        r1, r2, r3 = _RESONANT_RATIOS[kind]
        scale = m1 / r1
        return cls(kind, MassTriple(r1 * scale, r2 * scale, r3 * scale))

    def detuned(self, delta: float) -> "NonlinearityCase":
        return NonlinearityCase(self.kind, self.masses.detuned(delta))

    def q(self, z1, z2):
        """The coupling Q(z1, z2), elementwise on arrays."""
        k = self.kind
        if k is Quadratic.U2_SQUARED:
            return z2 * z2
        if k is Quadratic.U1_U2:
            return z1 * z2
        if k is Quadratic.CONJ_U1_U2:
            return np.conj(z1) * z2
        return np.abs(z2) * z2

    def q_tilde(self, a1, a2):
        """Rotated coupling e^{i pi/4} Q(e^{-i pi/4} a1, e^{-i pi/4} a2)."""
        r = np.exp(-1j * np.pi / 4)
        return np.exp(1j * np.pi / 4) * self.q(r * a1, r * a2)

    def phase_weight(self) -> float:
        """mu with Q(e^{i m1 h} z1, e^{i m2 h} z2) = e^{i mu h} Q(z1, z2)."""
        m = self.masses
        k = self.kind
        if k is Quadratic.U2_SQUARED:
            return 2.0 * m.m2
        if k is Quadratic.U1_U2:
            return m.m1 + m.m2
        if k is Quadratic.CONJ_U1_U2:
            return m.m2 - m.m1
        return m.m2

    def lifespan_order(self) -> int:
        return _LIFESPAN_ORDER[self.kind]


def gauge_condition_holds(case: NonlinearityCase, n_samples: int = 32,
                          tol: float = 1e-12, seed: int = 7) -> bool:
    """Whether phase rotations weighted by the masses commute with Q.

    The arithmetic criterion (phase weight equals m3) is double-checked by
    randomized sampling over rotation angles and complex arguments.
    """
    m3 = case.masses.m3
    if abs(case.phase_weight() - m3) > tol * max(1.0, m3):
        return False
    rng = np.random.default_rng(seed)
    theta = rng.uniform(-np.pi, np.pi, n_samples)
    z1 = rng.normal(size=n_samples) + 1j * rng.normal(size=n_samples)
    z2 = rng.normal(size=n_samples) + 1j * rng.normal(size=n_samples)
    lhs = case.q(np.exp(1j * case.masses.m1 * theta) * z1,
                 np.exp(1j * case.masses.m2 * theta) * z2)
    rhs = np.exp(1j * m3 * theta) * case.q(z1, z2)
    return bool(np.max(np.abs(lhs - rhs)) < tol * max(1.0, float(np.max(np.abs(rhs)))))


def homogeneity_holds(case: NonlinearityCase, n_samples: int = 32,
                      tol: float = 1e-12, seed: int = 11) -> bool:
    """Degree-2 positive homogeneity: Q(lam z1, lam z2) = lam^2 Q(z1, z2)."""
    rng = np.random.default_rng(seed)
    lam = rng.uniform(0.1, 3.0, n_samples)
    z1 = rng.normal(size=n_samples) + 1j * rng.normal(size=n_samples)
    z2 = rng.normal(size=n_samples) + 1j * rng.normal(size=n_samples)
    lhs = case.q(lam * z1, lam * z2)
    rhs = lam**2 * case.q(z1, z2)
    return bool(np.max(np.abs(lhs - rhs)) < tol * max(1.0, float(np.max(np.abs(rhs)))))
