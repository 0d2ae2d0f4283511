"""
Eigendecomposition, exact graph Fourier and wavelet operators, Chebyshev
approximation of the heat-kernel wavelets and scale-selection heuristics.

The wavelet kernel is h(s * lambda) = exp(-s * lambda) for the forward basis
Psi_s = U H_s U^T and exp(+s * lambda) for its inverse.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, FrozenSet, Optional, Sequence, Tuple, TypeVar, Union

import numpy as np
import scipy.linalg
import scipy.sparse
from numpy.polynomial import chebyshev

from msgwnn.errors import (
    ConvergenceFailure,
    DegenerateSpectrum,
    DimensionMismatch,
    InvalidGraph,
    NodeOutOfRange,
    ScaleOverflow,
    SpectrumBoundViolation,
)
from msgwnn.graph import Graph, LaplacianMatrix, hop_distances

logger = logging.getLogger(__name__)

FORWARD = "forward"
INVERSE = "inverse"

NORMALIZED_SPECTRUM_BOUND = 2.0
MIN_QUADRATURE_POINTS = 64
RECONSTRUCTION_TOLERANCE = 1e-8
# exp() overflows float64 just above this exponent
MAX_EXPONENT = math.log(np.finfo(np.float64).max)

T = TypeVar("T")


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """L = U diag(eigenvalues) U^T with eigenvalues ascending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def n(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[-1])

    def reconstruct(self) -> np.ndarray:
        u = self.eigenvectors
        return (u * self.eigenvalues) @ u.T


@dataclass(frozen=True, eq=False)
class ChebyshevFilter:
    """Truncated Chebyshev series of exp(-/+ s * lambda) on [0, spectrum_bound].

    Coefficients follow the c_0 / 2 + sum_j c_j T_j convention.
    """

    order: int
    coefficients: np.ndarray
    spectrum_bound: float
    sign: str
    scale: float

    def evaluate(self, lam: np.ndarray) -> np.ndarray:
        """Evaluate the truncated series at eigenvalue(s) ``lam``."""
        x = 2.0 * np.asarray(lam, dtype=np.float64) / self.spectrum_bound - 1.0
        series = self.coefficients.copy()
        series[0] *= 0.5
        return chebyshev.chebval(x, series)


class ChebyshevOperator:
    """Implicit N x N operator sum_j c_j T_j(L~) applied with ``@``."""

    def __init__(self, chebyshev_filter: ChebyshevFilter, laplacian: LaplacianMatrix):
        self.filter = chebyshev_filter
        self.laplacian = laplacian
        self.shape = (laplacian.n, laplacian.n)

    def __matmul__(self, x: np.ndarray) -> np.ndarray:
        return chebyshev_apply(self.filter, self.laplacian, x)

    def toarray(self) -> np.ndarray:
        """Materialise the operator; for inspection only."""
        return self @ np.eye(self.shape[0])


Operator = Union[np.ndarray, ChebyshevOperator]


@dataclass(frozen=True, eq=False)
class WaveletOperatorPair:
    """Psi_s and Psi_s^{-1} at one scale, either materialised or implicit."""

    scale: float
    forward: Operator
    inverse: Operator
    mode: str = "exact"
    order: Optional[int] = None

    @property
    def n(self) -> int:
        return self.forward.shape[0]

    def forward_matrix(self) -> np.ndarray:
        if isinstance(self.forward, ChebyshevOperator):
            return self.forward.toarray()
        return self.forward

    def inverse_matrix(self) -> np.ndarray:
        if isinstance(self.inverse, ChebyshevOperator):
            return self.inverse.toarray()
        return self.inverse


def _check_rows(n: int, x: np.ndarray, what: str) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim not in (1, 2) or x.shape[0] != n:
        raise DimensionMismatch(f"{what} has shape {x.shape}, expected {n} rows")
    return x


def _canonical_signs(vectors: np.ndarray) -> np.ndarray:
    # first non-negligible entry of each column is made positive
    vectors = vectors.copy()
    for col in range(vectors.shape[1]):
        column = vectors[:, col]
        nonzero = np.flatnonzero(np.abs(column) > 1e-12)
        if nonzero.size and column[nonzero[0]] < 0:
            vectors[:, col] = -column
    return vectors


def eigendecompose(l: LaplacianMatrix) -> SpectralDecomposition:
    """Full symmetric eigendecomposition of a Laplacian (dense LAPACK path)."""
    matrix = l.matrix
    if not np.allclose(matrix, matrix.T, rtol=0.0, atol=1e-12):
        raise InvalidGraph("Laplacian must be symmetric")
    try:
        eigenvalues, eigenvectors = scipy.linalg.eigh(matrix)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as e:
        raise ConvergenceFailure(f"eigensolver did not converge: {e}") from e

    sd = SpectralDecomposition(eigenvalues=eigenvalues, eigenvectors=_canonical_signs(eigenvectors))
    residual = float(np.max(np.abs(sd.reconstruct() - matrix)))
    logger.debug("eigendecomposition of %dx%d Laplacian, residual %.2e", sd.n, sd.n, residual)
    if residual > RECONSTRUCTION_TOLERANCE:
        raise ConvergenceFailure("eigendecomposition does not reconstruct L", residual)
    return sd


def fourier_conv(sd: SpectralDecomposition, theta: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Spectral convolution U diag(theta) U^T x."""
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape != (sd.n,):
        raise DimensionMismatch(f"theta has shape {theta.shape}, expected ({sd.n},)")
    x = _check_rows(sd.n, x, "signal")
    u = sd.eigenvectors
    coefficients = u.T @ x
    if x.ndim == 2:
        return u @ (theta[:, None] * coefficients)
    return u @ (theta * coefficients)


def _check_scale(s: float) -> None:
    if not s >= 0:
        raise ValueError(f"scale must be non-negative, got {s}")
    if s > 2.0:
        logger.warning("scale %.3g is outside the usual range [0, 2]", s)


def wavelet_basis_exact(sd: SpectralDecomposition, s: float) -> WaveletOperatorPair:
    """Materialise Psi_s = U diag(e^{-s lambda}) U^T and its inverse."""
    _check_scale(s)
    if s == 0:
        identity = np.eye(sd.n)
        return WaveletOperatorPair(scale=0.0, forward=identity, inverse=identity.copy())
    if s * sd.lambda_max >= MAX_EXPONENT:
        raise ScaleOverflow(
            f"exp({s} * {sd.lambda_max:.4g}) is not representable; use a smaller scale"
        )
    u = sd.eigenvectors
    forward = (u * np.exp(-s * sd.eigenvalues)) @ u.T
    inverse = (u * np.exp(s * sd.eigenvalues)) @ u.T
    return WaveletOperatorPair(
        scale=float(s),
        forward=0.5 * (forward + forward.T),
        inverse=0.5 * (inverse + inverse.T),
    )


def wavelet_basis_chebyshev(
    l: LaplacianMatrix,
    s: float,
    k: int = 2,
    lambda_max: float = NORMALIZED_SPECTRUM_BOUND,
) -> WaveletOperatorPair:
    """Implicit Psi_s / Psi_s^{-1}, each an independent order-k Chebyshev expansion."""
    _check_scale(s)
    return WaveletOperatorPair(
        scale=float(s),
        forward=ChebyshevOperator(chebyshev_fit(s, FORWARD, k, lambda_max), l),
        inverse=ChebyshevOperator(chebyshev_fit(s, INVERSE, k, lambda_max), l),
        mode="chebyshev",
        order=k,
    )


def wavelet_transform(pair: WaveletOperatorPair, x: np.ndarray) -> np.ndarray:
    """x_hat = Psi_s^{-1} x."""
    return pair.inverse @ _check_rows(pair.n, x, "signal")


def inverse_wavelet_transform(pair: WaveletOperatorPair, x_hat: np.ndarray) -> np.ndarray:
    """x = Psi_s x_hat."""
    return pair.forward @ _check_rows(pair.n, x_hat, "coefficients")


def wavelet_conv(pair: WaveletOperatorPair, f_diag: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Psi_s diag(f_diag) Psi_s^{-1} x, column by column."""
    f_diag = np.asarray(f_diag, dtype=np.float64)
    if f_diag.shape != (pair.n,):
        raise DimensionMismatch(f"kernel has shape {f_diag.shape}, expected ({pair.n},)")
    x_hat = wavelet_transform(pair, x)
    scaled = f_diag[:, None] * x_hat if x_hat.ndim == 2 else f_diag * x_hat
    return pair.forward @ scaled


def chebyshev_fit(s: float, sign: str, k: int, lambda_max: float) -> ChebyshevFilter:
    """Chebyshev coefficients of g(lambda) = exp(-/+ s lambda) on [0, lambda_max].

    Uses the cosine quadrature with max(64, 4 (k + 1)) points.
    """
    if k < 1:
        raise ValueError(f"Chebyshev order must be >= 1, got {k}")
    if not lambda_max > 0:
        raise ValueError(f"spectrum bound must be positive, got {lambda_max}")
    if sign not in (FORWARD, INVERSE):
        raise ValueError(f"sign must be '{FORWARD}' or '{INVERSE}', got {sign!r}")
    if k < 2:
        logger.warning("Chebyshev order %d gives a very coarse wavelet approximation", k)

    exponent = -s if sign == FORWARD else s
    points = max(MIN_QUADRATURE_POINTS, 4 * (k + 1))
    angles = np.pi * (np.arange(points) + 0.5) / points
    half = lambda_max / 2.0
    samples = np.exp(exponent * (half * np.cos(angles) + half))
    orders = np.arange(k + 1)
    coefficients = 2.0 / points * (np.cos(np.outer(orders, angles)) @ samples)
    logger.debug("Chebyshev fit s=%g %s k=%d: %s", s, sign, k, coefficients)
    return ChebyshevFilter(
        order=k,
        coefficients=coefficients,
        spectrum_bound=float(lambda_max),
        sign=sign,
        scale=float(s),
    )


def _rescaled_matvec(lhat: scipy.sparse.csr_matrix, v: np.ndarray) -> np.ndarray:
    return lhat @ v


def chebyshev_recurrence(coefficients: Sequence[float], matmul: Callable[[T], T], x: T) -> T:
    """sum_j c_j T_j(L~) x, where ``matmul`` multiplies by L~ (halved c_0 convention).

    Works on numpy arrays and torch tensors alike.
    """
    t_prev = x
    t_curr = matmul(x)
    result = 0.5 * float(coefficients[0]) * t_prev + float(coefficients[1]) * t_curr
    for c in coefficients[2:]:
        t_next = 2.0 * matmul(t_curr) - t_prev
        result = result + float(c) * t_next
        t_prev, t_curr = t_curr, t_next
    return result


def _check_spectrum_bound(l: LaplacianMatrix, bound: float) -> None:
    if l.kind == "normalized" and bound >= NORMALIZED_SPECTRUM_BOUND:
        return
    # Gershgorin discs enclose the spectrum
    matrix = l.matrix
    gershgorin = float(np.max(np.diag(matrix) + np.abs(matrix).sum(axis=1) - np.abs(np.diag(matrix))))
    if bound >= gershgorin:
        return
    lambda_max = float(scipy.linalg.eigvalsh(matrix, subset_by_index=[l.n - 1, l.n - 1])[0])
    if lambda_max > bound * (1 + 1e-9):
        raise SpectrumBoundViolation(
            f"spectrum bound {bound:.6g} is below the largest eigenvalue {lambda_max:.6g}"
        )


def chebyshev_apply(filter: ChebyshevFilter, l: LaplacianMatrix, x: np.ndarray) -> np.ndarray:
    """Apply sum_j c_j T_j(L~) to ``x`` with the three-term recurrence.

    L~ = (2 / lambda_max) L - I. Exactly ``filter.order`` sparse products are
    made per input column; no T_j(L~) is formed as a matrix.
    """
    x = _check_rows(l.n, x, "signal")
    _check_spectrum_bound(l, filter.spectrum_bound)

    n = l.n
    lhat = (2.0 / filter.spectrum_bound) * l.sparse() - scipy.sparse.identity(n, format="csr")
    return chebyshev_recurrence(filter.coefficients, lambda v: _rescaled_matvec(lhat, v), x)


def scale_range_heuristic(
    sd: SpectralDecomposition, eta: float = 0.85, gamma: float = 0.95
) -> Tuple[float, float]:
    """(s_min, s_max) from -log(gamma) / sqrt(lambda_2 lambda_N) and -log(eta) / ..."""
    if not (0 < eta < 1 and 0 < gamma < 1):
        raise ValueError(f"eta and gamma must lie in (0, 1), got {eta}, {gamma}")
    zero = sd.eigenvalues <= 1e-9
    if zero.all():
        raise DegenerateSpectrum("no eigenvalue above 1e-9")
    if np.count_nonzero(zero) > 1:
        raise DegenerateSpectrum(
            f"{np.count_nonzero(zero)} zero eigenvalues; the graph is disconnected"
        )
    nonzero = sd.eigenvalues[~zero]
    denominator = math.sqrt(float(nonzero[0]) * sd.lambda_max)
    return -math.log(gamma) / denominator, -math.log(eta) / denominator


def wavelet_column(pair: WaveletOperatorPair, center: int) -> np.ndarray:
    """The wavelet psi_{s, center} (column ``center`` of Psi_s)."""
    if not 0 <= center < pair.n:
        raise NodeOutOfRange(center, pair.n)
    delta = np.zeros(pair.n)
    delta[center] = 1.0
    return pair.forward @ delta


def receptive_field(pair: WaveletOperatorPair, center: int, threshold: float) -> FrozenSet[int]:
    """Nodes j with |Psi_s[j, center]| > threshold."""
    if threshold < 0:
        raise ValueError(f"threshold must be non-negative, got {threshold}")
    column = wavelet_column(pair, center)
    return frozenset(int(j) for j in np.flatnonzero(np.abs(column) > threshold))


def wavelet_mass_within(pair: WaveletOperatorPair, g: Graph, center: int, radius: int) -> float:
    """Fraction of sum_j |psi(j)| carried by nodes within ``radius`` hops of ``center``."""
    column = np.abs(wavelet_column(pair, center))
    hops = hop_distances(g, center)
    total = column.sum()
    if total == 0:
        return 0.0
    return float(column[hops <= radius].sum() / total)
