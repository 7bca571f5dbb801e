"""Single-atom Heisenberg evolution in a classical field and two-time variances.

The atom sees a fixed complex amplitude alpha over one interaction
window; its operators rotate as s_p(t) = sum_q R_pq(t) s_q with the 4x4
table built from mu = cos(g|alpha|t) and nu = -(alpha/|alpha|) sin(g|alpha|t).
The sine argument carries g so that mu^2 + |nu|^2 = 1 holds exactly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pump_states import AtomicMoments, P_CONJ


@dataclass(frozen=True)
class RabiField:
    """Classical driving field: complex amplitude (I = |amplitude|^2) and coupling g."""

    amplitude: complex
    g: float = 1.0


def mu_nu(field: RabiField, t):
    """Rotation parameters (mu, nu) at time(s) t; (1, 0) for a dark field."""
    t = np.asarray(t, dtype=float)
    aa = abs(field.amplitude)
    if aa == 0.0:
        mu = np.ones_like(t)
        nu = np.zeros_like(t, dtype=complex)
    else:
        mu = np.cos(field.g * aa * t)
        nu = -(field.amplitude / aa) * np.sin(field.g * aa * t)
    if t.ndim == 0:
        return complex(mu), complex(nu)
    return mu, nu


def r_matrix(field: RabiField, t: float) -> np.ndarray:
    """4x4 Heisenberg rotation R(t), rows/columns ordered (00, 01, 10, 11).

    Obtained from s_p(t) = U(t)^dag s_p U(t) with U = mu + nu s_10 - nu* s_01;
    rows 00 and 11 pair -mu nu* with column 01 and -mu nu with column 10
    (the conjugation is fixed by U^dag s U, and population conservation
    row(00) + row(11) = (1, 0, 0, 1) holds for any phase of alpha).
    """
    mu, nu = mu_nu(field, float(t))
    nb = np.conj(nu)
    return np.array(
        [
            [mu**2, -mu * nb, -mu * nu, abs(nu) ** 2],
            [mu * nu, mu**2, -(nu**2), -mu * nu],
            [mu * nb, -(nb**2), mu**2, -mu * nb],
            [abs(nu) ** 2, mu * nb, mu * nu, mu**2],
        ]
    )


def r_rows_01_10(field: RabiField, t):
    """Rows p = 01 and p = 10 of R(t) for array-valued t, shape t.shape + (4,).

    These are the only rows the field drift and diffusion need.
    """
    mu, nu = mu_nu(field, t)
    mu = np.asarray(mu)
    nu = np.asarray(nu)
    nb = np.conj(nu)
    row01 = np.stack([mu * nu, mu**2, -(nu**2), -mu * nu], axis=-1)
    row10 = np.stack([mu * nb, -(nb**2), mu**2, -mu * nb], axis=-1)
    return row01, row10


def polarization(moments: AtomicMoments, field: RabiField, t):
    """One-particle polarization <s_01(t; 1)> (vectorized over t)."""
    row01, _ = r_rows_01_10(field, np.asarray(t, dtype=float))
    out = row01 @ moments.single
    return complex(out) if np.ndim(t) == 0 else out


def variance(
    moments: AtomicMoments,
    field: RabiField,
    t: float,
    t_prime: float,
    p: int,
    q: int,
) -> complex:
    """Two-time variance D_pq(t, t') = [R(t) D R(t')^T]_pq."""
    if not (0 <= p < 4 and 0 <= q < 4):
        raise ValueError("operator indices must lie in 0..3")
    rt = r_matrix(field, t)
    rtp = r_matrix(field, t_prime)
    return complex(rt[p] @ moments.cov @ rtp[q])


def variance_conjugate_pair(p: int, q: int) -> tuple[int, int]:
    """Indices (q-bar, p-bar) whose swapped-time variance conjugates D_pq."""
    return P_CONJ[q], P_CONJ[p]
