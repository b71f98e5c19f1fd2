"""Eigenstructure of nonnegative and Metzler matrices.

Dense eigenvalues come from LAPACK through ``scipy.linalg``; power iteration
is kept only as an independent cross-check for nonnegative input.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike, NDArray
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from bivirus_hoi.config import settings
from bivirus_hoi.exceptions import SpectralConsistencyError, SpectralInputError
from bivirus_hoi.utils.logging import get_logger

logger = get_logger(__name__)

FloatArray = NDArray[np.float64]


class EigspecVerdict(str, Enum):
    """Sign of the spectral abscissa"""
    NEGATIVE = "s<0"
    ZERO = "s=0"
    POSITIVE = "s>0"


@dataclass(frozen=True, eq=False)
class SpectralSummary:
    rho: float
    s_abscissa: float
    dominant_eigvec: Optional[FloatArray]
    is_irreducible: bool


@dataclass(frozen=True)
class EigspecResult:
    verdict: EigspecVerdict
    abscissa: float
    radius: float


@dataclass(frozen=True, eq=False)
class HurwitzResult:
    is_hurwitz: bool
    abscissa: float
    certificate: Optional[FloatArray] = None


def _as_square(mat: ArrayLike) -> FloatArray:
    arr = np.asarray(mat, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise SpectralInputError(f"expected a non-empty square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise SpectralInputError("matrix has non-finite entries")
    return arr


def _as_nonnegative(mat: ArrayLike) -> FloatArray:
    arr = _as_square(mat)
    if np.any(arr < 0):
        i, j = np.argwhere(arr < 0)[0]
        raise SpectralInputError(f"matrix must be nonnegative, entry ({i}, {j}) is {arr[i, j]:g}")
    return arr


def eigenvalues(mat: ArrayLike) -> NDArray[np.complex128]:
    return scipy.linalg.eigvals(_as_square(mat))


def is_irreducible(mat: ArrayLike) -> bool:
    """True iff the digraph of nonzero entries is strongly connected"""
    arr = _as_square(mat)
    if arr.shape[0] == 1:
        return True
    n_components, _ = connected_components(
        csr_matrix(arr != 0), directed=True, connection="strong"
    )
    return n_components == 1


def perron_vector(mat: ArrayLike) -> FloatArray:
    """Eigenvector of the spectral radius, normalised to sum 1.

    For irreducible input the result is certified entrywise positive; a
    failed certification is logged, not raised.
    """
    arr = _as_nonnegative(mat)
    w, vecs = scipy.linalg.eig(arr)
    idx = int(np.argmax(w.real))
    vec = vecs[:, idx].real
    total = vec.sum()
    if abs(total) > np.finfo(float).eps:
        vec = vec / total
    else:
        vec = vec / np.max(np.abs(vec))
    if is_irreducible(arr) and not np.all(vec > 0):
        logger.warning(f"Perron vector of irreducible matrix is not positive: min entry {vec.min():.3e}")
    return vec


def dominant_gap(mat: ArrayLike) -> float:
    """Distance from the dominant eigenvalue to the nearest other eigenvalue"""
    w = eigenvalues(mat)
    if w.shape[0] < 2:
        return float("inf")
    idx = int(np.argmax(w.real))
    others = np.delete(w, idx)
    return float(np.min(np.abs(others - w[idx])))


def spectral_radius(mat: ArrayLike) -> float:
    """Largest eigenvalue modulus of a nonnegative matrix"""
    arr = _as_nonnegative(mat)
    w = scipy.linalg.eigvals(arr)
    rho = float(np.max(np.abs(w)))
    if rho > 0 and is_irreducible(arr):
        gap = dominant_gap(arr)
        if gap < settings.simplicity_gap:
            logger.warning(f"Dominant eigenvalue {rho:.12g} not separated: gap {gap:.3e}")
        perron_vector(arr)
    return rho


def spectral_abscissa(mat: ArrayLike) -> float:
    """Largest real part over the eigenvalues"""
    return float(np.max(eigenvalues(mat).real))


def spectral_summary(mat: ArrayLike) -> SpectralSummary:
    arr = _as_square(mat)
    w = scipy.linalg.eigvals(arr)
    nonnegative = bool(np.all(arr >= 0))
    irreducible = nonnegative and is_irreducible(arr)
    eigvec = None
    if irreducible:
        candidate = perron_vector(arr)
        if np.all(candidate > 0):
            eigvec = candidate
            eigvec.setflags(write=False)
    return SpectralSummary(
        rho=float(np.max(np.abs(w))),
        s_abscissa=float(np.max(w.real)),
        dominant_eigvec=eigvec,
        is_irreducible=irreducible,
    )


def power_iteration(mat: ArrayLike, tol: float = 1e-13, max_iter: int = 100_000) -> Tuple[float, FloatArray]:
    """Spectral radius and Perron vector by iterating ``I + N / ||N||``.

    The shift makes the iteration matrix primitive whenever N is irreducible.
    """
    arr = _as_nonnegative(mat)
    n = arr.shape[0]
    scale = float(np.max(arr.sum(axis=1)))
    if scale == 0.0:
        return 0.0, np.full(n, 1.0 / n)
    shifted = np.eye(n) + arr / scale
    x = np.full(n, 1.0 / n)
    growth = 1.0
    for _ in range(max_iter):
        y = shifted @ x
        growth = float(y.sum())
        y /= growth
        if np.max(np.abs(y - x)) < tol:
            x = y
            break
        x = y
    else:
        logger.debug(f"Power iteration stopped at max_iter={max_iter}")
    return (growth - 1.0) * scale, x


def _classify(value: float, band: float) -> EigspecVerdict:
    if value < -band:
        return EigspecVerdict.NEGATIVE
    if value > band:
        return EigspecVerdict.POSITIVE
    return EigspecVerdict.ZERO


def eigspec_consistency(
    lam: ArrayLike,
    n_mat: ArrayLike,
    tol: Optional[float] = None,
    band: Optional[float] = None,
) -> EigspecResult:
    """Sign of ``s(Lambda + N)`` cross-checked against ``rho(-Lambda^-1 N)`` vs 1.

    ``lam`` is either the diagonal of Lambda or the diagonal matrix itself.
    """
    tol = settings.consistency_tol if tol is None else tol
    band = settings.zero_band if band is None else band

    lam_arr = np.asarray(lam, dtype=np.float64)
    if lam_arr.ndim == 2:
        lam_arr = _as_square(lam_arr)
        if np.any(lam_arr - np.diag(np.diag(lam_arr)) != 0):
            raise SpectralInputError("Lambda must be diagonal")
        lam_arr = np.diag(lam_arr)
    if lam_arr.ndim != 1 or not np.all(lam_arr < 0):
        raise SpectralInputError("Lambda must be a strictly negative diagonal")

    n_arr = _as_nonnegative(n_mat)
    if n_arr.shape[0] != lam_arr.shape[0]:
        raise SpectralInputError(f"Lambda has size {lam_arr.shape[0]}, N has size {n_arr.shape[0]}")
    if not is_irreducible(n_arr):
        raise SpectralInputError("N must be irreducible")

    abscissa = spectral_abscissa(np.diag(lam_arr) + n_arr)
    radius = spectral_radius(n_arr / (-lam_arr)[:, None])

    verdict = _classify(abscissa, band)
    radius_verdict = _classify(radius - 1.0, tol)
    contradicts = {verdict, radius_verdict} == {EigspecVerdict.NEGATIVE, EigspecVerdict.POSITIVE}
    if contradicts:
        raise SpectralConsistencyError(abscissa, radius, tol)
    if verdict != radius_verdict:
        logger.debug(f"Near-critical spectrum: s={abscissa:.3e}, rho-1={radius - 1.0:.3e}")
    return EigspecResult(verdict=verdict, abscissa=abscissa, radius=radius)


def metzler_hurwitz(mat: ArrayLike) -> HurwitzResult:
    """Hurwitz test for a Metzler matrix with a positive certificate ``x`` (mat @ x << 0)"""
    arr = _as_square(mat)
    off_diagonal = arr - np.diag(np.diag(arr))
    if np.any(off_diagonal < 0):
        raise SpectralInputError("matrix is not Metzler: negative off-diagonal entry")

    abscissa = spectral_abscissa(arr)
    if abscissa >= 0:
        return HurwitzResult(is_hurwitz=False, abscissa=abscissa)

    certificate = scipy.linalg.solve(arr, -np.ones(arr.shape[0]))
    if not (np.all(certificate > 0) and np.all(arr @ certificate < 0)):
        logger.warning(f"Hurwitz certificate failed verification (s={abscissa:.3e})")
        return HurwitzResult(is_hurwitz=True, abscissa=abscissa)
    certificate.setflags(write=False)
    return HurwitzResult(is_hurwitz=True, abscissa=abscissa, certificate=certificate)
