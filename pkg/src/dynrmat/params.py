"""Numeric classification data attached to an index partition.

Each coupling block carries two complex constants: the *sum* constant
(``sum_const``, the common value of Delta_ij + Delta_ji on cross-class
pairs of the block) and the *determinant* constant (``det_const``, the
common value of d_ij d_ji - Delta_ij Delta_ji).  Distinct blocks are tied
together by cross-block determinant constants.  Each d-class carries a
sign (+1/-1) and a complex constant ``f`` fixing its position inside the
exchange class; the conventional normalization puts f = 1 (sum != 0,
"trigonometric" block) or f = 0 (sum = 0, "rational" block) on the first
d-class of every exchange class.  Finally a multiplicative 2-form rescales
the diagonal coefficients.

JSON field names (``S``, ``Sigma``, ``signs``, ``f``) follow the shared
config schema; see :mod:`dynrmat.serialize`.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Optional

import numpy as np

from .errors import ParameterError, PoleError
from .partition import IndexPartition, ValidationResult, validate as validate_partition

#: A d-class is keyed by the tuple of its member indices.
ClassKey = tuple[int, ...]

#: Relative threshold below which a complex value counts as negative-real.
NEGATIVE_REAL_IM_TOL = 1e-12

#: Denominator magnitudes below this trip a pole error.
POLE_GUARD = 1e-13


@dataclass(frozen=True)
class BlockConstants:
    """The (sum, determinant) constants of one coupling block."""

    sum_const: complex
    det_const: complex

    @property
    def rational(self) -> bool:
        return self.sum_const == 0


@dataclass(frozen=True)
class DerivedBlockConstants:
    """Derived quantities of one coupling block.

    ``discriminant``  D with D^2 = S^2 + 4*Sigma (principal square root);
    ``ratio``         T = (D - S)/(D + S);
    ``log_ratio``     A with e^A = T (principal log, except Im A = -pi when
                      T is negative real); None when S = 0;
    ``root``          B = (S + D)/2, a root of X^2 - S X - Sigma.
    """

    discriminant: complex
    ratio: complex
    log_ratio: Optional[complex]
    root: complex


def principal_sqrt(z: complex) -> complex:
    """Principal square root: Re >= 0; on the cut (Re = 0) take Im >= 0."""
    return complex(np.sqrt(complex(z)))


def is_negative_real(z: complex) -> bool:
    return z.real < 0 and abs(z.imag) <= NEGATIVE_REAL_IM_TOL * abs(z)


def derive(sum_const: complex, det_const: complex) -> DerivedBlockConstants:
    """Compute the derived constants (D, T, A, B) of a coupling block."""
    if det_const == 0:
        raise ParameterError("determinant constant must be nonzero")
    disc = principal_sqrt(sum_const * sum_const + 4 * det_const)
    if sum_const == 0:
        # Rational block: T = 1 and the log-ratio is unused; B = sqrt(Sigma).
        return DerivedBlockConstants(
            discriminant=disc,
            ratio=1.0 + 0j,
            log_ratio=None,
            root=principal_sqrt(det_const),
        )
    denom = disc + sum_const
    if abs(denom) < POLE_GUARD:
        raise ParameterError("degenerate block constants: D + S = 0")
    ratio = (disc - sum_const) / denom
    if ratio == 0:
        raise ParameterError("degenerate block constants: D = S")
    if is_negative_real(ratio):
        log_ratio = cmath.log(-ratio) - 1j * cmath.pi
    else:
        log_ratio = cmath.log(ratio)
    root = (sum_const + disc) / 2
    return DerivedBlockConstants(
        discriminant=disc, ratio=ratio, log_ratio=log_ratio, root=root
    )


# -- 2-form specifications -------------------------------------------------


class TwoFormSpec:
    """Multiplicative 2-form g acting on the diagonal coefficients.

    Subclasses provide ``value(i, j, lam) -> complex`` with the reciprocity
    g_ij * g_ji = 1 built in.
    """

    kind = "abstract"

    def value(self, i: int, j: int, lam: np.ndarray) -> complex:
        raise NotImplementedError


class TrivialTwoForm(TwoFormSpec):
    """g identically 1."""

    kind = "trivial"

    def value(self, i: int, j: int, lam: np.ndarray) -> complex:
        return 1.0 + 0j


@dataclass
class ExactTwoForm(TwoFormSpec):
    """g derived from per-index potentials:

    g_ij(lam) = (beta_i(lam + e_j) / beta_i(lam)) * (beta_j(lam) / beta_j(lam + e_i)).

    Exact 2-forms are automatically closed (the cyclic shifted product over
    any triplet telescopes to 1).
    """

    beta: Mapping[int, Callable[[np.ndarray], complex]]
    kind = "exact"

    def value(self, i: int, j: int, lam: np.ndarray) -> complex:
        lam = np.asarray(lam, dtype=complex)
        shifted_j = lam.copy()
        shifted_j[j - 1] += 1
        shifted_i = lam.copy()
        shifted_i[i - 1] += 1
        bi, bj = self.beta[i], self.beta[j]
        bi0, bj0 = complex(bi(lam)), complex(bj(lam))
        bij, bji = complex(bi(shifted_j)), complex(bj(shifted_i))
        for v in (bi0, bj0, bji):
            if abs(v) < POLE_GUARD:
                raise PoleError(f"potential of 2-form vanishes near lam={lam}")
        return (bij / bi0) * (bj0 / bji)


@dataclass
class TableTwoForm(TwoFormSpec):
    """g given pairwise: one evaluable function per unordered pair (i < j);
    the reverse orientation is the reciprocal, so g_ij * g_ji = 1 holds by
    construction.  Closedness is *not* automatic; see
    :func:`dynrmat.transforms.check_closed`.
    """

    g: Mapping[tuple[int, int], Callable[[np.ndarray], complex]]
    kind = "table"

    def value(self, i: int, j: int, lam: np.ndarray) -> complex:
        lam = np.asarray(lam, dtype=complex)
        if i < j:
            v = complex(self.g[(i, j)](lam))
            if abs(v) < POLE_GUARD:
                raise PoleError(f"2-form table entry ({i},{j}) vanishes at lam={lam}")
            return v
        v = complex(self.g[(j, i)](lam))
        if abs(v) < POLE_GUARD:
            raise PoleError(f"2-form table entry ({j},{i}) vanishes at lam={lam}")
        return 1.0 / v


def constant_table_two_form(values: Mapping[tuple[int, int], complex]) -> TableTwoForm:
    """Table 2-form from constants keyed by (i, j) with i < j."""
    return TableTwoForm(
        g={pair: (lambda lam, _v=complex(v): _v) for pair, v in values.items()}
    )


# -- classification data ---------------------------------------------------


@dataclass(frozen=True)
class ClassificationParams:
    """Full numeric datum attached to a partition."""

    partition: IndexPartition
    per_block: tuple[BlockConstants, ...]
    cross_det: Mapping[tuple[int, int], complex] = field(default_factory=dict)
    signs: Mapping[ClassKey, int] = field(default_factory=dict)
    f_consts: Mapping[ClassKey, complex] = field(default_factory=dict)
    two_form: TwoFormSpec = field(default_factory=TrivialTwoForm)

    def block_constants(self, q: int) -> BlockConstants:
        return self.per_block[q]


def validate_params(c: ClassificationParams) -> ValidationResult:
    """Check all invariants of a :class:`ClassificationParams` value."""
    pres = validate_partition(c.partition)
    if not pres:
        return pres
    p = c.partition
    nblocks = len(p.blocks)
    if len(c.per_block) != nblocks:
        return ValidationResult(
            False,
            f"{len(c.per_block)} per-block constants for {nblocks} blocks",
        )
    for q, (block, consts) in enumerate(zip(p.blocks, c.per_block)):
        if consts.det_const == 0:
            return ValidationResult(
                False, f"block {q + 1}: determinant constant must be nonzero"
            )
        if len(block) >= 2 and consts.sum_const == 0:
            return ValidationResult(
                False,
                f"block {q + 1}: sum constant must be nonzero when the block "
                "has several exchange classes",
            )
    for q in range(nblocks):
        for qq in range(q + 1, nblocks):
            v = c.cross_det.get((q, qq))
            if v is None:
                return ValidationResult(
                    False, f"missing cross-block determinant constant ({q + 1},{qq + 1})"
                )
            if v == 0:
                return ValidationResult(
                    False, f"cross-block determinant constant ({q + 1},{qq + 1}) is zero"
                )
    for q, block in enumerate(p.blocks):
        consts = c.per_block[q]
        for dclass in block:
            classes = dclass.all_d_classes()
            for k, cls in enumerate(classes):
                if cls not in c.signs or c.signs[cls] not in (+1, -1):
                    return ValidationResult(
                        False, f"missing or invalid sign for d-class {list(cls)}"
                    )
                if cls not in c.f_consts:
                    return ValidationResult(
                        False, f"missing f constant for d-class {list(cls)}"
                    )
                fv = complex(c.f_consts[cls])
                if not consts.rational and fv == 0:
                    return ValidationResult(
                        False,
                        f"f constant of d-class {list(cls)} must be nonzero in a "
                        "block with nonzero sum constant",
                    )
                if k == 0:
                    want = 0j if consts.rational else 1 + 0j
                    if fv != want:
                        return ValidationResult(
                            False,
                            f"f constant of the first d-class {list(cls)} of an "
                            f"exchange class must be {want} (got {fv}); apply "
                            "normalize_f first",
                        )
    return ValidationResult(True)


def normalize_f(c: ClassificationParams) -> tuple[ClassificationParams, dict]:
    """Renormalize the f constants to the per-exchange-class convention.

    In blocks with nonzero sum constant every f inside an exchange class is
    divided by the f of its first d-class; in rational blocks the first f
    is subtracted instead.  Only ratios (respectively differences) of f
    enter the matrix coefficients, so the built matrix is unchanged.
    Idempotent.  Returns the adjusted params and a report of the applied
    scale/shift per exchange class.
    """
    new_f = dict(c.f_consts)
    report: dict[str, dict] = {}
    for q, block in enumerate(c.partition.blocks):
        consts = c.per_block[q]
        for dclass in block:
            classes = dclass.all_d_classes()
            first = classes[0]
            pivot = complex(c.f_consts[first])
            key = ",".join(str(i) for i in dclass.members())
            if consts.rational:
                report[key] = {"shift": -pivot}
                for cls in classes:
                    new_f[cls] = complex(c.f_consts[cls]) - pivot
                new_f[first] = 0j
            else:
                if pivot == 0:
                    raise ParameterError(
                        f"f constant of d-class {list(first)} is zero in a block "
                        "with nonzero sum constant"
                    )
                report[key] = {"scale": 1.0 / pivot}
                for cls in classes:
                    new_f[cls] = complex(c.f_consts[cls]) / pivot
                new_f[first] = 1 + 0j
    return replace(c, f_consts=new_f), report


def class_key(cls) -> str:
    """JSON key for a d-class: comma-joined member indices."""
    return ",".join(str(i) for i in cls)
