"""Pump-state families, their reduced density matrices and initial moments.

Basis convention, shared by every module: |0> is the lower and |1> the
upper working level, single-atom operators ``s_xy = |x><y|`` are indexed
by the binary pair p = (x, y) mapped to 0..3 as (00, 01, 10, 11).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numerics import kron_chain, partial_trace

GHZ_CLASS = "ghz_class"
CLONE_MIXTURE = "clone_mixture"
Z_STATE = "z_state"
PRODUCT_UPPER = "product_upper"
FAMILIES = (GHZ_CLASS, CLONE_MIXTURE, Z_STATE, PRODUCT_UPPER)

# families whose two-atom reductions carry only classical (population)
# correlations, so the inversion-driven steady-state equation applies
CLONE_LIKE = (GHZ_CLASS, CLONE_MIXTURE, PRODUCT_UPPER)

#: dense construction limit; 2^N matrices get unwieldy past this
MAX_DENSE_ATOMS = 12

S_OPS = (
    np.array([[1, 0], [0, 0]], dtype=complex),  # s_00
    np.array([[0, 1], [0, 0]], dtype=complex),  # s_01 = |0><1|
    np.array([[0, 0], [1, 0]], dtype=complex),  # s_10 = |1><0|
    np.array([[0, 0], [0, 1]], dtype=complex),  # s_11
)

#: index conjugation p -> p-bar with 01 <-> 10 (operator adjoint)
P_CONJ = (0, 2, 1, 3)

_NORM_TOL = 1e-12


@dataclass(frozen=True)
class PumpState:
    """Declarative description of the N-atom initial state.

    alpha/beta are the complex amplitudes of the pure families, lambda1
    the upper-population weight of the mixture (lambda0 = 1 - lambda1),
    b the branch bit of the coherent two-atom family.
    """

    family: str
    n_atoms: int = 2
    alpha: complex = 0.0
    beta: complex = 0.0
    lambda1: float = 1.0
    b: int = 1

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown pump family {self.family!r}")
        if self.n_atoms < 1:
            raise ValueError("n_atoms must be positive")
        if self.family in (GHZ_CLASS, Z_STATE):
            norm = abs(self.alpha) ** 2 + abs(self.beta) ** 2
            if abs(norm - 1.0) > 1e-9:
                raise ValueError(f"|alpha|^2 + |beta|^2 = {norm} != 1")
        if self.family == CLONE_MIXTURE and not 0.0 <= self.lambda1 <= 1.0:
            raise ValueError("lambda1 must lie in [0, 1]")
        if self.family == Z_STATE:
            if self.n_atoms != 2:
                raise ValueError("the coherent two-atom family requires n_atoms = 2")
            if self.b not in (0, 1):
                raise ValueError("b must be 0 or 1")

    @property
    def lambda0(self) -> float:
        return 1.0 - self.lambda1

    @property
    def upper_weight(self) -> float:
        """Population weight r of the upper branch in the k-RDM mixture form."""
        if self.family == CLONE_MIXTURE:
            return self.lambda1
        if self.family == PRODUCT_UPPER:
            return 1.0
        if self.family == GHZ_CLASS:
            return abs(self.beta) ** 2
        raise ValueError("upper_weight is defined for the mixture-like families only")

    @property
    def inversion(self) -> float:
        """Initial single-atom inversion <s_11> - <s_00>."""
        if self.family == Z_STATE:
            return (-1.0) ** (1 - self.b) * abs(self.alpha) ** 2
        return 2.0 * self.upper_weight - 1.0

    @property
    def coherence(self) -> complex:
        """Initial single-atom coherence <s_01(0)>."""
        if self.family != Z_STATE:
            return 0.0
        if self.b == 1:
            return self.alpha * np.conj(self.beta) / np.sqrt(2.0)
        return np.conj(self.alpha) * self.beta / np.sqrt(2.0)


@dataclass
class AtomicMoments:
    """Initial one-particle averages and the 4x4 covariance table.

    ``single[p] = <s_p(0)>`` and ``cov[P, Q]`` carries the one-particle
    term (weight N) plus the two-particle cross term (weight N(N-1)).
    """

    single: np.ndarray
    cov: np.ndarray
    n_atoms: int = 2

    def __post_init__(self):
        self.single = np.asarray(self.single, dtype=complex).reshape(4)
        self.cov = np.asarray(self.cov, dtype=complex).reshape(4, 4)


def build_density(pump: PumpState) -> np.ndarray:
    """Full 2^N-dimensional density matrix of the pump state."""
    n = pump.n_atoms
    if n > MAX_DENSE_ATOMS:
        raise ValueError(f"dense construction capped at {MAX_DENSE_ATOMS} atoms")
    if pump.family == PRODUCT_UPPER:
        return kron_chain([S_OPS[3]] * n)
    if pump.family == CLONE_MIXTURE:
        return pump.lambda0 * kron_chain([S_OPS[0]] * n) + pump.lambda1 * kron_chain(
            [S_OPS[3]] * n
        )
    if pump.family == GHZ_CLASS:
        v = np.zeros(2**n, dtype=complex)
        v[0] = pump.alpha
        v[-1] = pump.beta
        return np.outer(v, v.conj())
    # coherent two-atom state alpha|bb> + beta|Psi+>
    v = np.zeros(4, dtype=complex)
    v[0 if pump.b == 0 else 3] = pump.alpha
    v[1] += pump.beta / np.sqrt(2.0)
    v[2] += pump.beta / np.sqrt(2.0)
    return np.outer(v, v.conj())


def _mixture_rdm(r: float, k: int) -> np.ndarray:
    return (1.0 - r) * kron_chain([S_OPS[0]] * k) + r * kron_chain([S_OPS[3]] * k)


def reduce(pump: PumpState, k: int) -> np.ndarray:
    """k-particle reduced density matrix (first k atoms; all are identical)."""
    if not 1 <= k <= pump.n_atoms:
        raise ValueError(f"k = {k} out of range for {pump.n_atoms} atoms")
    n = pump.n_atoms
    if k == n and n <= MAX_DENSE_ATOMS:
        return build_density(pump)
    if n > MAX_DENSE_ATOMS:
        # only the mixture-like families scale past the dense cap, and their
        # k < N reductions are the two-branch mixture
        if pump.family not in CLONE_LIKE:
            raise ValueError(f"dense reduction capped at {MAX_DENSE_ATOMS} atoms")
        return _mixture_rdm(pump.upper_weight, k)
    rho = build_density(pump)
    return partial_trace(rho, [2] * n, keep=range(k))


def entropy(pump: PumpState) -> float:
    """Von Neumann entropy of the pump state in bits."""
    if pump.n_atoms > MAX_DENSE_ATOMS:
        if pump.family == CLONE_MIXTURE:
            lam = np.array([pump.lambda0, pump.lambda1])
            lam = lam[lam > 0]
            return float(-(lam * np.log2(lam)).sum())
        return 0.0
    w = np.linalg.eigvalsh(build_density(pump))
    w = w[w > 1e-15]
    return float(-(w * np.log2(w)).sum())


def initial_moments(pump: PumpState) -> AtomicMoments:
    """Single-atom averages and the initial covariance table D_PQ.

    The one-particle second moments use s_xy s_uv = delta_yu s_xv on the
    1-RDM; the cross term is evaluated on the 2-RDM and vanishes for
    N = 1 by construction.
    """
    f1 = reduce(pump, 1)
    single = np.array([np.trace(op @ f1) for op in S_OPS])
    n = pump.n_atoms
    f2 = reduce(pump, 2) if n >= 2 else None
    cov = np.zeros((4, 4), dtype=complex)
    for p in range(4):
        for q in range(4):
            one = np.trace(S_OPS[p] @ S_OPS[q] @ f1)
            val = n * (one - single[p] * single[q])
            if f2 is not None:
                two = np.trace(np.kron(S_OPS[p], S_OPS[q]) @ f2)
                val += n * (n - 1) * (two - single[p] * single[q])
            cov[p, q] = val
    return AtomicMoments(single=single, cov=cov, n_atoms=n)
