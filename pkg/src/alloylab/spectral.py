"""Dense spectral computations on finite-volume Hamiltonians.

Everything here is a pure function of an immutable :class:`HamiltonianMatrix`
(or of an :class:`EigenSystem` derived from one): eigendecompositions, Green
functions from direct linear solves, resolvent norms, spectral projections,
Schur-complement block inverses and unitary time evolution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .lattice import HamiltonianMatrix


class SpectralCollisionError(ArithmeticError):
    """The spectral parameter is (numerically) on the spectrum."""


@dataclass(frozen=True)
class EigenSystem:
    """Ascending eigenvalues with an orthonormal eigenvector matrix Q."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self):
        ev = np.asarray(self.eigenvalues, dtype=float)
        q = np.asarray(self.eigenvectors, dtype=float)
        ev.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "eigenvalues", ev)
        object.__setattr__(self, "eigenvectors", q)

    def spectral_distance(self, z: complex) -> float:
        return float(np.abs(self.eigenvalues - z).min())


def eigen_decomposition(H: HamiltonianMatrix) -> EigenSystem:
    vals, vecs = scipy.linalg.eigh(H.matrix)
    return EigenSystem(vals, vecs)


def _check_regular(H: HamiltonianMatrix, z: complex, eig: EigenSystem | None) -> None:
    if eig is not None:
        scale = max(1e-300, float(np.abs(eig.eigenvalues).max(initial=0.0)))
        if eig.spectral_distance(z) < 1e-13 * scale:
            raise SpectralCollisionError(
                f"z={z} is within 1e-13*||H|| of the spectrum")


def green_column(H: HamiltonianMatrix, z: complex, y,
                 eig: EigenSystem | None = None) -> np.ndarray:
    """Column x -> <delta_x, (H - z)^{-1} delta_y> from one direct solve."""
    _check_regular(H, z, eig)
    n = H.n
    j = H.index_of(y)
    rhs = np.zeros(n, dtype=complex)
    rhs[j] = 1.0
    a = H.matrix - z * np.eye(n)
    try:
        w = np.linalg.solve(a, rhs)
    except np.linalg.LinAlgError as exc:
        raise SpectralCollisionError(f"(H - z) singular at z={z}") from exc
    scale = (np.abs(H.matrix).max(initial=0.0) + abs(z) + 1.0) * (1.0 + np.linalg.norm(w))
    residual = np.linalg.norm(a @ w - rhs)
    if residual > 1e-10 * scale:
        raise SpectralCollisionError(
            f"solve residual {residual:.3e} exceeds tolerance at z={z}")
    return w


def green_function(H: HamiltonianMatrix, z: complex, x, y,
                   eig: EigenSystem | None = None) -> complex:
    """G(z; x, y) = <delta_x, (H - z)^{-1} delta_y>."""
    return complex(green_column(H, z, y, eig)[H.index_of(x)])


def resolvent_norm(H_or_eig, z: complex) -> float:
    """Operator norm of (H - z)^{-1}; exactly 1/dist(z, spec) for symmetric H."""
    eig = H_or_eig if isinstance(H_or_eig, EigenSystem) else eigen_decomposition(H_or_eig)
    dist = eig.spectral_distance(z)
    if dist == 0.0:
        raise SpectralCollisionError(f"z={z} is an eigenvalue")
    return 1.0 / dist


def spectral_projection_trace(eig: EigenSystem, a: float, b: float):
    """Eigenvalue count in the closed interval [a, b] and the diagonal of the
    spectral projection, <delta_x, chi_[a,b](H) delta_x>."""
    if a > b:
        raise ValueError("interval must satisfy a <= b")
    mask = (eig.eigenvalues >= a) & (eig.eigenvalues <= b)
    count = int(mask.sum())
    diag = (eig.eigenvectors[:, mask] ** 2).sum(axis=1)
    return count, diag


def schur_block_inverse(H: HamiltonianMatrix, E: float, subset,
                        check_tol: float = 1e-10) -> np.ndarray:
    """Inverse of the Schur complement of H - E onto a site subset.

    Returns (H_S - E - Gamma (H_Sc - E)^{-1} Gamma*)^{-1} for the subset S,
    which is verified entrywise against P_S (H - E)^{-1} P_S* to
    check_tol * cond(H - E).
    """
    idx = sorted({H.index_of(s) for s in subset})
    comp = [i for i in range(H.n) if i not in set(idx)]
    a = H.matrix - E * np.eye(H.n)
    a_ss = a[np.ix_(idx, idx)]
    if comp:
        a_cc = a[np.ix_(comp, comp)]
        gamma = a[np.ix_(idx, comp)]
        try:
            x = np.linalg.solve(a_cc, gamma.T)
        except np.linalg.LinAlgError as exc:
            raise SpectralCollisionError("complement block is singular") from exc
        schur = a_ss - gamma @ x
    else:
        schur = a_ss
    try:
        out = np.linalg.inv(schur)
    except np.linalg.LinAlgError as exc:
        raise SpectralCollisionError("Schur complement is singular") from exc
    full = np.linalg.inv(a)
    cond = np.linalg.cond(a)
    err = np.abs(out - full[np.ix_(idx, idx)]).max()
    if err > check_tol * max(cond, 1.0):
        raise ArithmeticError(
            f"Schur block identity violated: max error {err:.3e} at cond {cond:.3e}")
    return out


def evolve_state(eig: EigenSystem, psi0: np.ndarray, t: float) -> np.ndarray:
    """exp(-i t H) psi0 via the spectral decomposition."""
    psi0 = np.asarray(psi0, dtype=complex)
    coeffs = eig.eigenvectors.T @ psi0
    return eig.eigenvectors @ (np.exp(-1j * eig.eigenvalues * t) * coeffs)


def spectral_filter(eig: EigenSystem, psi0: np.ndarray, a: float, b: float) -> np.ndarray:
    """chi_[a,b](H) psi0."""
    psi0 = np.asarray(psi0, dtype=complex)
    mask = (eig.eigenvalues >= a) & (eig.eigenvalues <= b)
    coeffs = eig.eigenvectors.T @ psi0
    return eig.eigenvectors @ (mask * coeffs)
