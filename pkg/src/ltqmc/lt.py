"""Linear-transformation path construction for arithmetic Asian baskets.

``C_LT = C_ch A`` with ``A`` orthogonal. Column ``p`` of ``A`` maximizes the
variance captured by coordinate ``p`` of a linearized payoff; for a linear
target this is the normalized projection of ``B = C_ch^T d`` onto the
complement of the columns already chosen, i.e. one incremental QR append.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import RankDeficiencyError
from .linalg import IncrementalQR, PathMatrix

log = logging.getLogger(__name__)

VARIANTS = ("lt1", "lt2")


@dataclass(frozen=True)
class LTConfig:
    variant: str = "lt1"
    k_star: int = 50

    def __post_init__(self):
        object.__setattr__(self, "variant", self.variant.lower())
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.k_star < 1:
            raise ValueError("k_star must be at least 1")


def lt_weight_vector(mu, C_partial, p: int, variant: str) -> np.ndarray:
    """Linearization weights ``d^(p)`` for column ``p`` (one based).

    LT1 uses ``exp(mu_i + sum_{l<p} C_il^2 / 2)``, LT2 expands the payoff at the
    point with ``p-1`` leading ones, ``exp(mu_i + sum_{l<p} C_il)``. The result
    is scaled by the largest term; only its direction is used downstream.
    """
    mu = np.asarray(mu, dtype=float)
    C = np.asarray(C_partial, dtype=float).reshape(mu.size, -1)[:, :p - 1]
    variant = variant.lower()
    if variant == "lt1":
        e = mu + 0.5 * np.einsum("ij,ij->i", C, C)
    elif variant == "lt2":
        e = mu + C.sum(axis=1)
    else:
        raise ValueError(f"unknown LT variant {variant!r}")
    return np.exp(e - e.max())


def lt_candidate_column(d, C_ch) -> np.ndarray:
    """``B = C_ch^T d``."""
    if isinstance(C_ch, PathMatrix):
        return C_ch.rmatvec(d)
    return np.asarray(C_ch, dtype=float).T @ np.asarray(d, dtype=float)


def complete_orthogonal(A_partial) -> np.ndarray:
    """Extend orthonormal columns to a square orthogonal matrix.

    The leading columns are kept bit for bit; the rest span the orthogonal
    complement and come from a Householder QR of ``A_partial``.
    """
    A_partial = np.asarray(A_partial, dtype=float)
    m, k = A_partial.shape
    if k == m:
        return A_partial.copy()
    Q, _ = np.linalg.qr(A_partial, mode="complete")
    Q[:, :k] = A_partial
    return Q


def _fallback_column(qr: IncrementalQR) -> np.ndarray:
    for j in range(qr.m):
        e = np.zeros(qr.m)
        e[j] = 1.0
        _, w = qr.residual(e)
        if np.linalg.norm(w) > 0.5:
            return e
    raise RankDeficiencyError("no standard basis vector outside the span", 0.0)


def lt_columns(C_ch: PathMatrix, mu, config: LTConfig) -> tuple[IncrementalQR, np.ndarray, list[str]]:
    """Greedy optimal columns of ``A`` and the matching columns of ``C_LT``."""
    mu = np.asarray(mu, dtype=float)
    m = mu.size
    k_star = min(config.k_star, m)
    qr = IncrementalQR(m)
    C_cols = np.zeros((m, k_star))
    notes = []
    for p in range(1, k_star + 1):
        d = lt_weight_vector(mu, C_cols, p, config.variant)
        B = lt_candidate_column(d, C_ch)
        try:
            qr.append(B)
        except RankDeficiencyError as exc:
            msg = f"column {p}: candidate in span of previous columns (residual {exc.residual_norm:.3e}); basis fallback used"
            log.warning(msg)
            notes.append(msg)
            qr.append(_fallback_column(qr))
        a = qr.Q[:, p - 1]
        C_cols[:, p - 1] = C_ch.apply(a[None, :])[0] if isinstance(C_ch, PathMatrix) else C_ch @ a
    return qr, C_cols, notes


def lt_build(C_ch, mu, config: LTConfig) -> PathMatrix:
    """``C_LT = C_ch A`` with ``k_star`` optimal columns and an arbitrary
    orthonormal completion."""
    if not isinstance(C_ch, PathMatrix):
        C_ch = PathMatrix.from_dense(C_ch, "cholesky")
    qr, _, notes = lt_columns(C_ch, mu, config)
    A = complete_orthogonal(qr.Q)
    C = C_ch.apply(A.T).T
    return PathMatrix(config.variant, matrix=C, rotation=A, k_star=qr.p, warnings=tuple(notes))
