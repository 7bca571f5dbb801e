"""Dense complex linear algebra and quadrature kernels.

Conventions used throughout the package: matrices are plain complex
``numpy`` arrays in row-major semantic indexing, subsystem 0 is the
leftmost (most significant) factor of a Kronecker product.
"""
from __future__ import annotations

import numpy as np

HERMITIAN_TOL = 1e-12


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with the leftmost factor most significant."""
    return np.kron(np.asarray(a), np.asarray(b))


def kron_chain(ops) -> np.ndarray:
    """Kronecker product of a sequence of matrices, left to right."""
    out = np.asarray(ops[0])
    for op in ops[1:]:
        out = np.kron(out, op)
    return out


def is_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    return bool(np.max(np.abs(m - m.conj().T)) <= tol)


def partial_trace(m: np.ndarray, dims, keep) -> np.ndarray:
    """Reduced matrix over the kept subsystems.

    Args:
        m: square matrix on the tensor product of subsystems with
            dimensions ``dims`` (subsystem 0 most significant).
        dims: list of subsystem dimensions; their product must equal the
            matrix dimension.
        keep: nonempty collection of subsystem indices to keep, the
            output is ordered by ascending index.
    """
    m = np.asarray(m)
    dims = list(dims)
    n = int(np.prod(dims))
    if m.shape != (n, n):
        raise ValueError(f"matrix shape {m.shape} does not match dims {dims}")
    keep = sorted(set(keep))
    if not keep or any(k < 0 or k >= len(dims) for k in keep):
        raise ValueError(f"invalid keep set {keep} for {len(dims)} subsystems")
    t = m.reshape(dims + dims)
    nsub = len(dims)
    for idx in sorted((i for i in range(nsub) if i not in keep), reverse=True):
        half = t.ndim // 2
        t = np.trace(t, axis1=idx, axis2=idx + half)
    d_keep = int(np.prod([dims[k] for k in keep]))
    return t.reshape(d_keep, d_keep)


def herm_propagator(h: np.ndarray, t: float) -> np.ndarray:
    """Unitary exp(-i h t) of a Hermitian generator via eigendecomposition."""
    h = np.asarray(h)
    if not is_hermitian(h, 1e-10):
        raise ValueError("generator is not Hermitian")
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def _simpson_weights(n: int) -> np.ndarray:
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w / 3.0


def _check_panels(n: int) -> None:
    if n < 8 or n % 2:
        raise ValueError(f"n_points must be even and >= 8, got {n}")


def quad_1d(f, a: float, b: float, n_points: int = 256) -> complex:
    """Composite-Simpson estimate of the integral of f over [a, b].

    ``f`` must accept an ndarray of nodes and evaluate elementwise.
    """
    _check_panels(n_points)
    t = np.linspace(a, b, n_points + 1)
    vals = f(t)
    h = (b - a) / n_points
    return h * np.sum(_simpson_weights(n_points) * vals)


def triangle_nodes(T: float, n_points: int = 256):
    """Node grids (t, t') of the nested-Simpson rule on 0 <= t' <= t <= T.

    Returns two (n+1, n+1) arrays: the outer node replicated across each
    row and the inner nodes rescaled to [0, t] per outer node.
    """
    _check_panels(n_points)
    t = np.linspace(0.0, T, n_points + 1)
    frac = np.linspace(0.0, 1.0, n_points + 1)
    return np.broadcast_to(t[:, None], (n_points + 1, n_points + 1)), np.outer(t, frac)


def triangle_integrate(values: np.ndarray, T: float, n_points: int = 256) -> complex:
    """Integrate integrand values sampled on the triangle_nodes grid."""
    _check_panels(n_points)
    t = np.linspace(0.0, T, n_points + 1)
    w = _simpson_weights(n_points)
    inner = (values * w[None, :]).sum(axis=1) * (t / n_points)
    return (T / n_points) * np.sum(w * inner)


def quad_triangle(f, T: float, n_points: int = 256) -> complex:
    """Nested-Simpson estimate of ``int_0^T dt int_0^t dt' f(t, t')``.

    ``f`` is called once with two broadcastable 2-d node arrays and must
    evaluate elementwise. The inner upper limit is clamped to the outer
    variable, so the estimate keeps its O(n^-4) behaviour for smooth
    integrands.
    """
    tg, tpg = triangle_nodes(T, n_points)
    return triangle_integrate(f(tg, tpg), T, n_points)
