"""Structured linear algebra for path construction.

Path matrices for the Cholesky and PCA methods are kept in Kronecker form
(time factor, asset factor) and are never expanded unless asked for. The
linear-transformation method needs a growing orthonormal basis; that is
provided by :class:`IncrementalQR`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import sqrt

import numpy as np

from .errors import DecompositionError, RankDeficiencyError

SYMMETRY_TOL = 1e-12
PIVOT_TOL = 1e-10
ORTHO_TOL = 1e-10


def _check_symmetric(S: np.ndarray) -> None:
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {S.shape}")
    scale = max(1.0, float(np.max(np.abs(S)))) if S.size else 1.0
    if S.size and np.max(np.abs(S - S.T)) > SYMMETRY_TOL * scale:
        raise ValueError("matrix is not symmetric")


def cholesky(S) -> np.ndarray:
    """Lower-triangular ``L`` with ``L L^T = S`` for symmetric PSD ``S``.

    Pivots within ``PIVOT_TOL * max(diag S)`` of zero are clamped to zero
    (the column below is zeroed); a pivot below ``-tol`` raises
    :class:`DecompositionError` carrying the zero-based pivot index.
    """
    S = np.asarray(S, dtype=float)
    _check_symmetric(S)
    n = S.shape[0]
    L = np.zeros_like(S)
    tol = PIVOT_TOL * max(float(np.max(np.diag(S))), 0.0) if n else 0.0
    for j in range(n):
        row = L[j, :j]
        pivot = S[j, j] - row @ row
        if pivot < -tol:
            raise DecompositionError(f"matrix is not positive semidefinite (pivot {j} = {pivot:.3e})", j)
        if pivot <= tol:
            continue
        L[j, j] = sqrt(pivot)
        L[j + 1:, j] = (S[j + 1:, j] - L[j + 1:, :j] @ row) / L[j, j]
    return L


def time_matrix_cholesky(schedule) -> np.ndarray:
    """Closed-form Cholesky factor of ``min(t_l, t_m)``: every entry on or
    below the diagonal of column ``m`` is ``sqrt(t_m - t_{m-1})``."""
    t = np.asarray(schedule, dtype=float)
    if t.ndim != 1 or t.size == 0 or t[0] <= 0 or np.any(np.diff(t) <= 0):
        raise ValueError("schedule must be positive and strictly increasing")
    steps = np.sqrt(np.diff(t, prepend=0.0))
    return np.tril(np.broadcast_to(steps, (t.size, t.size)))


@dataclass(frozen=True)
class EigenPair:
    values: np.ndarray
    vectors: np.ndarray


def symmetric_eigen(S) -> EigenPair:
    """Eigen-decomposition with eigenvalues in decreasing order."""
    S = np.asarray(S, dtype=float)
    _check_symmetric(S)
    values, vectors = np.linalg.eigh(S)
    order = np.argsort(-values, kind="stable")
    return EigenPair(values[order], vectors[:, order])


def kron_apply(left: np.ndarray, right: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Rows of ``X`` multiplied by ``left kron right`` (asset-fastest vec)."""
    n = X.shape[0]
    N, M = left.shape[0], right.shape[0]
    Y = np.matmul(left, X.reshape(n, N, M)) @ right.T
    return Y.reshape(n, N * M)


@dataclass(frozen=True)
class PathMatrix:
    """A matrix ``C`` with ``C C^T`` equal to the global covariance.

    Two storage forms are used. Kronecker form: ``C = (left kron right)``
    with columns optionally scaled by ``scale`` (in Kronecker index order) and
    reordered by ``order``, so column ``l`` of ``C`` is column ``order[l]`` of
    the scaled product. Dense form: ``C`` is held explicitly.
    """

    method: str
    left: np.ndarray | None = None
    right: np.ndarray | None = None
    scale: np.ndarray | None = None
    order: np.ndarray | None = None
    matrix: np.ndarray | None = field(default=None, repr=False)
    rotation: np.ndarray | None = field(default=None, repr=False)
    k_star: int | None = None
    warnings: tuple[str, ...] = ()

    @classmethod
    def from_dense(cls, C, method: str = "dense") -> "PathMatrix":
        return cls(method, matrix=np.asarray(C, dtype=float))

    @property
    def dim(self) -> int:
        if self.matrix is not None:
            return self.matrix.shape[0]
        return self.left.shape[0] * self.right.shape[0]

    @property
    def is_kronecker(self) -> bool:
        return self.matrix is None

    def apply(self, eps: np.ndarray) -> np.ndarray:
        """Return ``C eps`` for every row of ``eps`` (shape ``(n, dim)``)."""
        eps = np.atleast_2d(eps)
        if self.matrix is not None:
            return eps @ self.matrix.T
        y = eps
        if self.order is not None:
            y = np.empty_like(eps)
            y[:, self.order] = eps
        if self.scale is not None:
            y = y * self.scale
        return kron_apply(self.left, self.right, y)

    def rmatvec(self, w) -> np.ndarray:
        """``C^T w``."""
        w = np.asarray(w, dtype=float)
        if self.matrix is not None:
            return self.matrix.T @ w
        y = kron_apply(self.left.T, self.right.T, w[None, :])[0]
        if self.scale is not None:
            y = y * self.scale
        if self.order is not None:
            y = y[self.order]
        return y

    def columns(self, stop: int) -> np.ndarray:
        """The first ``stop`` columns as a dense ``(dim, stop)`` array."""
        if self.matrix is not None:
            return self.matrix[:, :stop]
        basis = np.zeros((stop, self.dim))
        basis[np.arange(stop), np.arange(stop)] = 1.0
        return self.apply(basis).T

    def dense(self) -> np.ndarray:
        return self.columns(self.dim)


def build_path_matrix(method: str, cov) -> PathMatrix:
    """Cholesky or PCA path matrix of ``T kron S`` from factor-sized work only."""
    method = method.lower()
    if method == "cholesky":
        return PathMatrix("cholesky", left=time_matrix_cholesky(cov.schedule),
                          right=cholesky(cov.asset_cov))
    if method == "pca":
        et = symmetric_eigen(cov.time_matrix)
        ea = symmetric_eigen(cov.asset_cov)
        lam = np.clip(np.kron(et.values, ea.values), 0.0, None)
        order = np.argsort(-lam, kind="stable")
        return PathMatrix("pca", left=et.vectors, right=ea.vectors,
                          scale=np.sqrt(lam), order=order)
    raise ValueError(f"unknown decomposition method {method!r}")


def givens(a: float, b: float) -> tuple[float, float]:
    """Rotation ``(c, s)`` with ``[c s; -s c] [a; b] = [r; 0]``."""
    if b == 0.0:
        return 1.0, 0.0
    if a == 0.0:
        return 0.0, 1.0
    if abs(b) > abs(a):
        tau = a / b
        s = 1.0 / sqrt(1.0 + tau * tau)
        return s * tau, s
    tau = b / a
    c = 1.0 / sqrt(1.0 + tau * tau)
    return c, c * tau


def givens_qr(A) -> tuple[np.ndarray, np.ndarray]:
    """Full QR factorization by Givens rotations, zeroing each column bottom-up.

    Returns ``Q`` (m x m, orthogonal) and ``R`` (m x n, upper triangular with
    nonnegative diagonal).
    """
    R = np.array(A, dtype=float)
    m, n = R.shape
    Q = np.eye(m)
    for j in range(min(n, m - 1)):
        for i in range(m - 1, j, -1):
            if R[i, j] == 0.0:
                continue
            c, s = givens(R[i - 1, j], R[i, j])
            G = np.array([[c, s], [-s, c]])
            R[i - 1:i + 1, j:] = G @ R[i - 1:i + 1, j:]
            Q[:, i - 1:i + 1] = Q[:, i - 1:i + 1] @ G.T
            R[i, j] = 0.0
    for j in range(min(m, n)):
        if R[j, j] < 0:
            R[j, :] *= -1
            Q[:, j] *= -1
    return Q, R


class IncrementalQR:
    """Thin QR factorization ``[b_1 ... b_p] = Q R`` grown one column at a time.

    Appending ``b`` costs ``O(m p)``: with ``Q`` already orthonormal only the
    new column of ``R`` is needed, ``Q^T b`` on top and the norm of the part of
    ``b`` outside ``range(Q)`` on the diagonal. Rotating the trailing entries
    of ``[Q Q_perp]^T b`` into a single one, as a Givens sweep would, yields
    exactly that residual norm, so the sweep is folded into one normalization.
    The projection is repeated once so orthogonality holds to machine
    precision.
    """

    def __init__(self, m: int, tol: float = ORTHO_TOL):
        self.m = int(m)
        self.tol = tol
        self.p = 0
        # column-major, so the active block Q[:, :p] is contiguous
        self._Q = np.zeros((self.m, min(self.m, 16)), order="F")
        self._R = np.zeros((self._Q.shape[1], self._Q.shape[1]))

    @property
    def Q(self) -> np.ndarray:
        return self._Q[:, :self.p]

    @property
    def R(self) -> np.ndarray:
        return self._R[:self.p, :self.p]

    def _grow(self) -> None:
        cap = min(self.m, 2 * self._Q.shape[1])
        Q = np.zeros((self.m, cap), order="F")
        R = np.zeros((cap, cap))
        Q[:, :self.p] = self.Q
        R[:self.p, :self.p] = self.R
        self._Q, self._R = Q, R

    def residual(self, b) -> tuple[np.ndarray, np.ndarray]:
        """Coefficients ``Q^T b`` and the component of ``b`` orthogonal to ``Q``."""
        Q = self.Q
        coef = Q.T @ b
        w = b - Q @ coef
        again = Q.T @ w
        w -= Q @ again
        return coef + again, w

    def append(self, b) -> "IncrementalQR":
        b = np.asarray(b, dtype=float)
        if b.shape != (self.m,):
            raise ValueError(f"column must have length {self.m}, got shape {b.shape}")
        if self.p >= self.m:
            raise RankDeficiencyError("basis is already complete", float(np.linalg.norm(b)))
        coef, w = self.residual(b)
        rho = float(np.linalg.norm(w))
        if rho <= self.tol * float(np.linalg.norm(b)):
            raise RankDeficiencyError(
                f"column {self.p + 1} lies in the span of the basis (residual {rho:.3e})", rho)
        if self.p == self._Q.shape[1]:
            self._grow()
        self._Q[:, self.p] = w / rho
        self._R[:self.p, self.p] = coef
        self._R[self.p, self.p] = rho
        self.p += 1
        return self


def qr_append(state: IncrementalQR, b) -> IncrementalQR:
    """Append column ``b`` to ``state`` in place and return it."""
    return state.append(b)
