"""Dense linear algebra helpers: Hermitian spectra, condition numbers, alignment.

Everything here operates on plain numpy arrays. Matrices handled by the
package are small (at most 1024 x 1024), so dense routines are used throughout.
"""
from __future__ import annotations

import numpy as np

HERMITIAN_TOL = 1e-12
SINGULAR_RTOL = 1e-14


class NotHermitianError(ValueError):
    """Raised when a matrix expected to be Hermitian is not."""


class SingularMatrixError(ArithmeticError):
    """Raised when a matrix is numerically singular."""


def max_asymmetry(m: np.ndarray) -> float:
    """Largest element-wise deviation ``|M - M^dagger|``."""
    m = np.asarray(m)
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


def is_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and max_asymmetry(m) <= tol


def _check_square(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise ValueError(f"expected a non-empty square matrix, got shape {m.shape}")
    return m


def jacobi_eigenvalues(m: np.ndarray, tol: float = 1e-14, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix by cyclic Jacobi rotations.

    Complex Hermitian input is handled through the real symmetric embedding
    ``[[Re, -Im], [Im, Re]]``, whose spectrum is that of ``M`` with every
    eigenvalue doubled. Cost grows as O(N^3) per sweep with Python-level
    loops, so this is meant for small matrices and for cross-checking.
    """
    m = _check_square(m)
    if np.iscomplexobj(m) and np.any(m.imag != 0):
        n = m.shape[0]
        emb = np.block([[m.real, -m.imag], [m.imag, m.real]])
        return np.sort(jacobi_eigenvalues(emb, tol, max_sweeps))[::2]

    a = np.array(m.real, dtype=float)
    a = 0.5 * (a + a.T)
    n = a.shape[0]
    scale = max(np.max(np.abs(a)), np.finfo(float).tiny)
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.hypot(theta, 1.0)) if theta != 0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
    else:
        raise ArithmeticError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")
    return np.sort(np.diag(a))


def hermitian_eigenvalues(
    m: np.ndarray, tol: float = HERMITIAN_TOL, method: str = "lapack"
) -> np.ndarray:
    """Ascending real eigenvalues of a Hermitian matrix.

    Args:
        m: square matrix, Hermitian within ``tol`` element-wise.
        tol: Hermiticity tolerance.
        method: ``"lapack"`` (numpy ``eigvalsh``) or ``"jacobi"``.

    Raises:
        NotHermitianError: if ``max |M - M^dagger| > tol``.
    """
    m = _check_square(m)
    asym = max_asymmetry(m)
    if asym > tol:
        raise NotHermitianError(f"matrix is not Hermitian: max |M - M^H| = {asym:.3e} > {tol:.1e}")
    if method == "lapack":
        return np.linalg.eigvalsh(m)
    if method == "jacobi":
        return jacobi_eigenvalues(m)
    raise ValueError(f"unknown eigensolver method {method!r}")


def singular_values(m: np.ndarray) -> np.ndarray:
    """Singular values in descending order."""
    return np.linalg.svd(_check_square(m), compute_uv=False)


def condition_number(m: np.ndarray) -> float:
    """Ratio of the largest to the smallest singular value.

    Raises:
        SingularMatrixError: if ``sigma_min < 1e-14 * sigma_max``.
    """
    sv = singular_values(m)
    smax, smin = sv[0], sv[-1]
    if smax == 0 or smin < SINGULAR_RTOL * smax:
        raise SingularMatrixError(f"singular: sigma_min={smin:.3e}, sigma_max={smax:.3e}")
    return float(smax / smin)


def cosine_alignment(u: np.ndarray, v: np.ndarray) -> float:
    """``Re<u, v> / (|u| |v|)``; callers take ``abs`` where a sign-free value is wanted."""
    u = np.ravel(np.asarray(u))
    v = np.ravel(np.asarray(v))
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise ValueError("cosine alignment is undefined for a zero vector")
    return float(np.real(np.vdot(u, v)) / (nu * nv))


def rescale_to_unit_spectral_max(m: np.ndarray, tol: float = HERMITIAN_TOL) -> tuple[np.ndarray, float]:
    """Divide a Hermitian matrix by its largest absolute eigenvalue.

    Returns:
        ``(M / scale, scale)``.
    """
    ev = hermitian_eigenvalues(m, tol=tol)
    scale = float(np.max(np.abs(ev)))
    if scale == 0.0:
        raise ValueError("cannot rescale the zero matrix")
    return np.asarray(m) / scale, scale
