"""Uniform sample generators and the inverse normal map.

Every generator is a pure function of ``(seed, stream, n, d)``. Substreams
come from :class:`numpy.random.SeedSequence` spawn keys, so batch ``b`` always
sees the same numbers whatever order batches are run in.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import CapacityError

BITS = 32
MAX_SOBOL_DIMS = 50
TINY = 2.0 ** -64
KINDS = ("pseudo", "lhs", "hybrid")


def substream(seed: int, *keys: int) -> np.random.Generator:
    """Independent PCG64 generator for ``(seed, keys...)``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=keys)))


def _nudge(u: np.ndarray) -> np.ndarray:
    u[u == 0.0] = TINY
    return u


def pseudo_uniforms(n: int, d: int, seed: int, stream: int = 0) -> np.ndarray:
    return _nudge(substream(seed, stream).random((n, d)))


def lhs_uniforms(n: int, d: int, seed: int, stream: int = 0, rng=None) -> np.ndarray:
    """Latin hypercube sample: each column puts exactly one point in each of
    the ``n`` strata ``((k-1)/n, k/n]``, with independent permutations."""
    rng = substream(seed, stream) if rng is None else rng
    strata = rng.permuted(np.broadcast_to(np.arange(n), (d, n)), axis=1).T
    # keep offsets off the stratum edges so ceil(n u) recovers the stratum
    offset = np.clip(rng.random((n, d)), 2.0 ** -30, 1.0 - 2.0 ** -30)
    return (strata + offset) / n


# ---------------------------------------------------------------- Sobol'

def _default_direction_file() -> Path:
    return Path(str(resources.files("ltqmc") / "data" / "joe_kuo_50.txt"))


@lru_cache(maxsize=8)
def load_direction_numbers(path: str | None = None) -> tuple[tuple[int, int, tuple[int, ...]], ...]:
    """``(s, a, m)`` per dimension starting at dimension 2, read from a
    ``d s a m_1 .. m_s`` table."""
    path = Path(path) if path else _default_direction_file()
    rows = []
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#") or line[0].isalpha():
            continue
        try:
            fields = [int(x) for x in line.split()]
            dim, s, a, m = fields[0], fields[1], fields[2], tuple(fields[3:])
        except (ValueError, IndexError) as exc:
            raise ValueError(f"{path}:{lineno}: malformed direction-number row") from exc
        if dim != len(rows) + 2 or len(m) != s or s < 1:
            raise ValueError(f"{path}:{lineno}: bad row for dimension {dim}")
        for k, mk in enumerate(m, 1):
            if mk % 2 == 0 or not 0 < mk < 2 ** k:
                raise ValueError(f"{path}:{lineno}: m_{k} = {mk} must be odd and below 2^{k}")
        if not 0 <= a < max(1, 2 ** (s - 1)):
            raise ValueError(f"{path}:{lineno}: polynomial code a = {a} too large for degree {s}")
        rows.append((s, a, m))
    return tuple(rows)


def _direction_column(s: int, a: int, m: tuple[int, ...], count: int) -> list[int]:
    v = [mk << (BITS - k) for k, mk in enumerate(m[:count], 1)]
    for k in range(s, count):
        x = v[k - s] ^ (v[k - s] >> s)
        for i in range(1, s):
            if (a >> (s - 1 - i)) & 1:
                x ^= v[k - i]
        v.append(x)
    return v


@lru_cache(maxsize=8)
def direction_integers(d: int, path: str | None = None) -> np.ndarray:
    """``(d, 32)`` array; entry ``[j, k]`` is the generating-matrix column for
    index bit ``k`` of dimension ``j``, as a 32-bit binary fraction."""
    if d > MAX_SOBOL_DIMS:
        raise CapacityError(f"Sobol' core supports {MAX_SOBOL_DIMS} dimensions, {d} requested; "
                            "use the hybrid generator to pad the rest with LHS")
    table = load_direction_numbers(path)
    if d - 1 > len(table):
        raise CapacityError(f"direction table holds {len(table) + 1} dimensions, {d} requested")
    V = np.empty((d, BITS), dtype=np.uint64)
    V[0] = [1 << (BITS - k) for k in range(1, BITS + 1)]
    for j in range(1, d):
        V[j] = _direction_column(*table[j - 1], BITS)
    return V


def property_a_holds(d: int, path: str | None = None) -> bool:
    """Sobol's property A for the first ``d`` dimensions: the ``d x d`` matrix
    of leading bits of the first ``d`` direction numbers is invertible over
    GF(2)."""
    table = load_direction_numbers(path)
    rows = [[1] + [0] * (d - 1)]
    for j in range(1, d):
        s, a, m = table[j - 1]
        # leading bits obey the same recurrence with BITS = 1 headroom
        v = _direction_column(s, a, m, max(d, s))
        rows.append([(x >> (BITS - 1)) & 1 for x in v[:d]])
    A = np.array(rows, dtype=np.uint8)
    rank = 0
    for col in range(d):
        pivot = next((r for r in range(rank, d) if A[r, col]), None)
        if pivot is None:
            return False
        A[[rank, pivot]] = A[[pivot, rank]]
        mask = A[:, col].astype(bool)
        mask[rank] = False
        A[mask] ^= A[rank]
        rank += 1
    return True


def _parity(x: np.ndarray) -> np.ndarray:
    return (np.bitwise_count(x) & 1).astype(np.uint64)


def _scrambled_columns(V: np.ndarray, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Faure-Tezuka index scramble shared by all dimensions, a random
    lower-triangular output scramble per dimension, and a digital shift."""
    d = V.shape[0]
    # U[i, k]: input bit k feeds output index bit i (i <= k), unit diagonal
    U = np.triu(rng.integers(0, 2, size=(BITS, BITS), dtype=np.uint64), 1)
    U[np.arange(BITS), np.arange(BITS)] = 1
    cols = np.zeros_like(V)
    for k in range(BITS):
        for i in np.nonzero(U[:, k])[0]:
            cols[:, k] ^= V[:, i]
    # L[j, r, s]: output digit r (from the most significant) mixes digits s <= r
    L = np.tril(rng.integers(0, 2, size=(d, BITS, BITS), dtype=np.uint64), -1)
    L[:, np.arange(BITS), np.arange(BITS)] = 1
    weights = np.uint64(1) << np.arange(BITS - 1, -1, -1, dtype=np.uint64)
    masks = (L * weights).sum(axis=2, dtype=np.uint64)           # (d, BITS) row masks
    out = np.zeros_like(cols)
    for r in range(BITS):
        bit = _parity(cols & masks[:, r][:, None])
        out |= bit << np.uint64(BITS - 1 - r)
    shift = rng.integers(0, 2 ** BITS, size=d, dtype=np.uint64)
    return out, shift


def sobol_points(n: int, d: int, scramble=None, skip: int | None = None,
                 path: str | None = None) -> np.ndarray:
    """First ``n`` points (after ``skip``) of the ``d``-dimensional Sobol'
    sequence in Gray-code order.

    ``scramble`` is ``None`` for the plain sequence, or a seed / Generator for
    a randomized one. ``skip`` defaults to 1 for the plain sequence (drops the
    origin) and 0 when scrambled, where the digital shift already moves the
    origin and dropping a point would break the ``2^m``-point nets.
    """
    V = direction_integers(d, path)
    shift = np.zeros(d, dtype=np.uint64)
    if scramble is not None:
        rng = scramble if isinstance(scramble, np.random.Generator) else substream(int(scramble))
        V, shift = _scrambled_columns(V, rng)
    if skip is None:
        skip = 1 if scramble is None else 0
    idx = np.arange(skip, skip + n, dtype=np.uint64)
    gray = idx ^ (idx >> np.uint64(1))
    X = np.broadcast_to(shift, (n, d)).copy()
    for k in range(BITS):
        sel = ((gray >> np.uint64(k)) & np.uint64(1)).astype(bool)
        X[sel] ^= V[:, k]
    return _nudge(X.astype(float) / 2.0 ** BITS)


def hybrid_points(n: int, d: int, k_star: int, seed: int, stream: int = 0,
                  path: str | None = None, skip: int | None = None) -> np.ndarray:
    """Scrambled Sobol' in the first ``k_star`` columns, LHS in the rest."""
    if not 0 <= k_star <= min(d, MAX_SOBOL_DIMS):
        raise CapacityError(f"k_star must lie in [0, {min(d, MAX_SOBOL_DIMS)}], got {k_star}")
    out = np.empty((n, d))
    if k_star:
        out[:, :k_star] = sobol_points(n, k_star, substream(seed, stream, 0), skip, path)
    if k_star < d:
        out[:, k_star:] = lhs_uniforms(n, d - k_star, seed, rng=substream(seed, stream, 1))
    return out


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str = "pseudo"
    sobol_dims: int = MAX_SOBOL_DIMS
    seed: int = 0
    direction_file: str | None = None
    skip: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", self.kind.lower())
        if self.kind not in KINDS:
            raise ValueError(f"generator kind must be one of {KINDS}, got {self.kind!r}")
        if not 0 <= self.sobol_dims <= MAX_SOBOL_DIMS:
            raise CapacityError(f"sobol_dims must lie in [0, {MAX_SOBOL_DIMS}]")

    def sample(self, n: int, d: int, stream: int = 0) -> np.ndarray:
        if self.kind == "pseudo":
            return pseudo_uniforms(n, d, self.seed, stream)
        if self.kind == "lhs":
            return lhs_uniforms(n, d, self.seed, stream)
        return hybrid_points(n, d, min(self.sobol_dims, d), self.seed, stream,
                             self.direction_file, self.skip)


# ------------------------------------------------------------ inverse normal
# Wichura (1988), algorithm AS 241 (PPND16): relative accuracy about 1e-16.

_A = (3.387132872796366608, 133.14166789178437745, 1971.5909503065514427,
      13731.693765509461125, 45921.953931549871457, 67265.770927008700853,
      33430.575583588128105, 2509.0809287301226727)
_B = (1.0, 42.313330701600911252, 687.1870074920579083, 5394.1960214247511077,
      21213.794301586595867, 39307.89580009271061, 28729.085735721942674,
      5226.495278852545925)
_C = (1.42343711074968357734, 4.6303378461565452959, 5.7694972214606914055,
      3.64784832476320460504, 1.27045825245236838258, 0.24178072517745061177,
      0.0227238449892691845833, 7.7454501427834140764e-4)
_D = (1.0, 2.05319162663775882187, 1.6763848301838038494, 0.68976733498510000455,
      0.14810397642748007459, 0.0151986665636164571966, 5.475938084995344946e-4,
      1.05075007164441684324e-9)
_E = (6.6579046435011037772, 5.4637849111641143699, 1.7848265399172913358,
      0.29656057182850489123, 0.026532189526576123093, 0.0012426609473880784386,
      2.71155556874348757815e-5, 2.01033439929228813265e-7)
_F = (1.0, 0.59983220655588793769, 0.13692988092273580531, 0.0148753612908506148525,
      7.868691311456132591e-4, 1.8463183175100546818e-5, 1.4215117583164458887e-7,
      2.04426310338993978564e-15)


def _poly(coef, x):
    out = np.full_like(x, coef[-1])
    for c in coef[-2::-1]:
        out *= x
        out += c
    return out


def inv_norm(u):
    """Standard normal quantile, vectorized; ``u`` must lie in ``(0, 1)``."""
    u = np.asarray(u, dtype=float)
    scalar = u.ndim == 0
    u = np.atleast_1d(u)
    if u.size and not (u.min() > 0.0 and u.max() < 1.0):
        raise ValueError("inv_norm is defined on the open interval (0, 1)")
    q = u - 0.5
    r = q * q
    np.subtract(0.180625, r, out=r)
    out = _poly(_A, r)
    out /= _poly(_B, r)
    out *= q
    tail = np.flatnonzero(np.abs(q) > 0.425)
    if tail.size:
        ut = u.ravel()[tail]
        lower = ut < 0.5
        rt = np.sqrt(-np.log(np.where(lower, ut, 1.0 - ut)))
        near = rt <= 5.0
        z = np.empty_like(rt)
        rn = rt[near] - 1.6
        z[near] = _poly(_C, rn) / _poly(_D, rn)
        rf = rt[~near] - 5.0
        z[~near] = _poly(_E, rf) / _poly(_F, rf)
        out.ravel()[tail] = np.where(lower, -z, z)
    return float(out[0]) if scalar else out
