"""Evaluable zero-weight dynamical R-matrices.

A matrix of this family acts on C^n (x) C^n and has nonzero entries only in
two sparsity patterns: exchange entries at (row (i,j), col (j,i)) with
coefficient ``delta(i, j, lam)`` and diagonal entries at (row (i,j),
col (i,j)), i != j, with coefficient ``d(i, j, lam)``.  Both coefficient
fields are functions of the dynamical vector lam in C^n; dynamical shifts
move one component of lam by exactly 1 (the shift step is a fixed
normalization, not a parameter).

Composite row/column indices follow the convention (a, b) -> (a-1)*n + b,
1-based on both levels.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import PoleError
from .params import ClassificationParams
from .partition import IndexPartition

#: Fixed dynamical shift step (the normalization used throughout).
SHIFT_STEP = 1.0

#: Denominator guard shared with the coefficient closures.
POLE_GUARD = 1e-13

_TABLE_CACHE_MAX = 512


@dataclass(frozen=True)
class Provenance:
    """Construction record attached to builder-produced matrices."""

    partition: IndexPartition
    params: Optional[ClassificationParams] = None


CoefficientField = Callable[[int, int, np.ndarray], complex]


@dataclass(frozen=True)
class DynamicalRMatrix:
    """Zero-weight dynamical R-matrix given by its two coefficient fields."""

    n: int
    delta: CoefficientField
    d: CoefficientField
    provenance: Optional[Provenance] = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def tables(self, lam: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Dense n x n coefficient tables (exchange, diagonal) at ``lam``.

        Cached per evaluation point; raises :class:`PoleError` when any
        coefficient is non-finite.
        """
        lam = np.asarray(lam, dtype=complex)
        if lam.shape != (self.n,):
            raise ValueError(f"lambda must have length {self.n}, got {lam.shape}")
        key = lam.tobytes()
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        n = self.n
        delta_tab = np.empty((n, n), dtype=complex)
        d_tab = np.zeros((n, n), dtype=complex)
        for i in range(1, n + 1):
            for j in range(1, n + 1):
                delta_tab[i - 1, j - 1] = self.delta(i, j, lam)
                if i != j:
                    d_tab[i - 1, j - 1] = self.d(i, j, lam)
        if not (np.all(np.isfinite(delta_tab)) and np.all(np.isfinite(d_tab))):
            raise PoleError(f"non-finite coefficient at lam={lam}")
        if len(self._cache) >= _TABLE_CACHE_MAX:
            self._cache.clear()
        self._cache[key] = (delta_tab, d_tab)
        return delta_tab, d_tab


@dataclass(frozen=True)
class DensePoint:
    """Dense n^2 x n^2 evaluation of a matrix at one dynamical point."""

    n: int
    lam: tuple[complex, ...]
    matrix: np.ndarray

    def entry(self, row: tuple[int, int], col: tuple[int, int]) -> complex:
        return complex(self.matrix[composite_index(self.n, *row),
                                   composite_index(self.n, *col)])


def composite_index(n: int, a: int, b: int) -> int:
    """0-based position of the composite basis vector (a, b), 1-based inputs."""
    return (a - 1) * n + (b - 1)


def shifted(lam: np.ndarray, k: int) -> np.ndarray:
    """lam with component k (1-based) moved by the unit dynamical shift."""
    out = np.asarray(lam, dtype=complex).copy()
    out[k - 1] += SHIFT_STEP
    return out


def evaluate(R: DynamicalRMatrix, lam: np.ndarray) -> DensePoint:
    """Dense evaluation at ``lam``; only the two sparsity patterns are filled."""
    lam = np.asarray(lam, dtype=complex)
    delta_tab, d_tab = R.tables(lam)
    n = R.n
    M = np.zeros((n * n, n * n), dtype=complex)
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            M[composite_index(n, i, j), composite_index(n, j, i)] = delta_tab[i - 1, j - 1]
            if i != j:
                M[composite_index(n, i, j), composite_index(n, i, j)] = d_tab[i - 1, j - 1]
    return DensePoint(n=n, lam=tuple(lam.tolist()), matrix=M)


def embed_with_shift(
    R: DynamicalRMatrix,
    slot_pair: tuple[int, int],
    shift_slot: Optional[int],
    lam: np.ndarray,
) -> np.ndarray:
    """Embed R into the triple tensor product acting on two designated slots.

    The returned n^3 x n^3 operator applies R to the slots in ``slot_pair``
    (1-based, among 1..3) and the identity to the remaining slot.  When
    ``shift_slot`` is given, the block acting alongside basis vector e_k in
    that slot is evaluated at lam + e_k (the dynamical shift produced by the
    weight of the spectating factor); otherwise everything is evaluated at
    lam.
    """
    a, b = slot_pair
    if sorted((a, b)) != list(slot_pair) or a == b or not {a, b} <= {1, 2, 3}:
        raise ValueError(f"slot_pair must be an increasing pair among 1..3, got {slot_pair}")
    spectator = ({1, 2, 3} - {a, b}).pop()
    if shift_slot is not None and shift_slot != spectator:
        raise ValueError(
            f"shift slot {shift_slot} must be the spectating slot {spectator}"
        )
    lam = np.asarray(lam, dtype=complex)
    n = R.n
    T = np.zeros((n, n, n, n, n, n), dtype=complex)
    for k in range(1, n + 1):
        point = shifted(lam, k) if shift_slot is not None else lam
        block = evaluate(R, point).matrix.reshape(n, n, n, n)
        if (a, b) == (1, 2):
            T[:, :, k - 1, :, :, k - 1] = block
        elif (a, b) == (1, 3):
            T[:, k - 1, :, :, k - 1, :] = block
        else:  # (2, 3)
            T[k - 1, :, :, k - 1, :, :] = block
        if shift_slot is None:
            # No spectator shift: all k-slices are identical.
            for kk in range(2, n + 1):
                if (a, b) == (1, 2):
                    T[:, :, kk - 1, :, :, kk - 1] = block
                elif (a, b) == (1, 3):
                    T[:, kk - 1, :, :, kk - 1, :] = block
                else:
                    T[kk - 1, :, :, kk - 1, :, :] = block
            break
    return T.reshape(n ** 3, n ** 3)


def permuted(P: DensePoint) -> np.ndarray:
    """The flip-composed matrix: apply the factor swap v_i (x) v_j -> v_j (x) v_i
    after the matrix.  On span{e_i (x) e_j, e_j (x) e_i} the restriction is
    [[delta_ji, d_ji], [d_ij, delta_ij]]; on e_i (x) e_i it is delta_ii.
    """
    n = P.n
    out = np.empty_like(P.matrix)
    for a in range(1, n + 1):
        for b in range(1, n + 1):
            out[composite_index(n, a, b), :] = P.matrix[composite_index(n, b, a), :]
    return out


def sum_and_det_fields(
    R: DynamicalRMatrix, lam: np.ndarray
) -> dict[tuple[int, int], tuple[complex, complex]]:
    """Per-pair invariants (i < j): the sum delta_ij + delta_ji and the
    2x2-block determinant d_ij d_ji - delta_ij delta_ji."""
    lam = np.asarray(lam, dtype=complex)
    delta_tab, d_tab = R.tables(lam)
    out: dict[tuple[int, int], tuple[complex, complex]] = {}
    for i in range(1, R.n + 1):
        for j in range(i + 1, R.n + 1):
            s = delta_tab[i - 1, j - 1] + delta_tab[j - 1, i - 1]
            det = (
                d_tab[i - 1, j - 1] * d_tab[j - 1, i - 1]
                - delta_tab[i - 1, j - 1] * delta_tab[j - 1, i - 1]
            )
            out[(i, j)] = (complex(s), complex(det))
    return out


# -- JSON export -----------------------------------------------------------

def dense_point_to_json(P: DensePoint) -> dict:
    entries = []
    n = P.n
    # enumerate only the two sparsity patterns
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            v = P.entry((i, j), (j, i))
            if v != 0:
                entries.append(
                    {"row": [i, j], "col": [j, i], "re": v.real, "im": v.imag}
                )
            if i != j:
                v = P.entry((i, j), (i, j))
                if v != 0:
                    entries.append(
                        {"row": [i, j], "col": [i, j], "re": v.real, "im": v.imag}
                    )
    return {
        "n": n,
        "lambda": [{"re": z.real, "im": z.imag} for z in P.lam],
        "entries": entries,
    }
