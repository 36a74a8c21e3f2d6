"""Structure-preserving transforms of zero-weight dynamical matrices.

Implemented here:

* :func:`apply_twist` -- diagonal gauge action rescaling the diagonal
  coefficients by a shifted quotient of per-index potentials;
* :func:`apply_2form` / :func:`check_closed` -- multiplicative pairwise
  rescaling of the diagonal coefficients, legal when the cyclic shifted
  product over every coupled triplet is 1;
* :func:`contract` -- restriction to a subset of indices (ambient
  dynamical variables frozen at 0);
* :func:`decouple_compose` -- block combination of two solutions joined
  by constant diagonal coefficients;
* :func:`scale_f` -- merges the exchange classes of a multi-class block
  into a single class whose position constants carry powers of a scale
  eta; as eta -> 0 the merged build converges to the multi-class build up
  to an explicit compensating 2-form;
* :func:`reparametrize` -- dynamical-variable offsets that absorb the
  position constants f into lambda;
* :func:`trig_to_rational_limit` -- one-parameter family of nonzero-sum
  data converging entrywise to a given zero-sum datum.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .errors import ParameterError, PoleError
from .params import (
    ClassificationParams,
    ExactTwoForm,
    TableTwoForm,
    TrivialTwoForm,
    TwoFormSpec,
    derive,
    normalize_f,
    principal_sqrt,
)
from .partition import DeltaClass, IndexPartition, ValidationResult, nd_pairs
from .rmatrix import DynamicalRMatrix, Provenance

DEFAULT_CLOSED_TOL = 1e-10


# -- diagonal gauge twist ---------------------------------------------------


def apply_twist(
    R: DynamicalRMatrix, beta: Mapping[int, Callable[[np.ndarray], complex]]
) -> DynamicalRMatrix:
    """Gauge the diagonal coefficients by per-index potentials.

    d'_ij(lam) = (beta_i(lam+e_j)/beta_i(lam)) * (beta_j(lam)/beta_j(lam+e_i)) * d_ij(lam);
    exchange coefficients are unchanged.
    """
    if set(beta.keys()) != set(range(1, R.n + 1)):
        raise ParameterError("twist needs one potential per index 1..n")
    multiplier = ExactTwoForm(beta=beta)

    def new_d(i: int, j: int, lam: np.ndarray) -> complex:
        base = R.d(i, j, lam)
        if i == j or base == 0:
            return base
        return multiplier.value(i, j, lam) * base

    return DynamicalRMatrix(n=R.n, delta=R.delta, d=new_d, provenance=R.provenance)


# -- multiplicative 2-form action -------------------------------------------


def _coupled_triplets(p: IndexPartition):
    pairs = set(nd_pairs(p))
    n = p.n
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            for k in range(j + 1, n + 1):
                if (
                    (i, j) in pairs
                    and (j, k) in pairs
                    and (i, k) in pairs
                ):
                    yield (i, j, k)


def check_closed(
    g: TwoFormSpec,
    partition: IndexPartition,
    samples: Optional[Sequence[np.ndarray]] = None,
    tol: float = DEFAULT_CLOSED_TOL,
    seed: int = 0,
) -> ValidationResult:
    """Check the cyclic shifted product over every coupled triplet.

    For each triplet (i, j, k) whose three pairs all carry diagonal
    coefficients, the product
    (g_ij(lam+e_k)/g_ij(lam)) * (g_jk(lam+e_i)/g_jk(lam)) * (g_ki(lam+e_j)/g_ki(lam))
    must equal 1.  Trivial and potential-derived specs pass structurally
    (the product telescopes); tables are checked numerically.
    """
    if isinstance(g, (TrivialTwoForm, ExactTwoForm)):
        return ValidationResult(True)
    if samples is None:
        rng = np.random.default_rng(seed)
        samples = [
            rng.uniform(-2, 2, partition.n) + 1j * rng.uniform(-2, 2, partition.n)
            for _ in range(4)
        ]
    worst = 0.0
    worst_triplet = None
    for (i, j, k) in _coupled_triplets(partition):
        for lam in samples:
            lam = np.asarray(lam, dtype=complex)
            prod = 1.0 + 0j
            for (a, b, c) in ((i, j, k), (j, k, i), (k, i, j)):
                shifted = lam.copy()
                shifted[c - 1] += 1
                prod *= g.value(a, b, shifted) / g.value(a, b, lam)
            dev = abs(prod - 1)
            if dev > worst:
                worst, worst_triplet = dev, (i, j, k)
    if worst > tol:
        return ValidationResult(
            False,
            f"2-form not closed: triplet {worst_triplet} has cyclic defect {worst:.3e}",
        )
    return ValidationResult(True)


def apply_2form(
    R: DynamicalRMatrix,
    g: TwoFormSpec,
    check: bool = True,
    tol: float = DEFAULT_CLOSED_TOL,
    seed: int = 0,
) -> DynamicalRMatrix:
    """Multiply each coupled diagonal coefficient d_ij by g_ij.

    Exchange coefficients and uncoupled pairs are untouched.  Unless
    ``check=False``, closedness of ``g`` over the coupled triplets of R's
    classification is verified first and a violation raises
    :class:`ParameterError` naming the worst triplet.
    """
    if R.provenance is not None and R.provenance.partition is not None:
        partition = R.provenance.partition
    else:
        from .classifier import classify

        partition = classify(R).recovered_partition
    if check:
        res = check_closed(g, partition, tol=tol, seed=seed)
        if not res:
            raise ParameterError(res.message)
    coupled = set(nd_pairs(partition)) | {(j, i) for (i, j) in nd_pairs(partition)}

    def new_d(i: int, j: int, lam: np.ndarray) -> complex:
        base = R.d(i, j, lam)
        if (i, j) not in coupled or base == 0:
            return base
        return g.value(i, j, lam) * base

    return DynamicalRMatrix(n=R.n, delta=R.delta, d=new_d, provenance=R.provenance)


# -- contraction ------------------------------------------------------------


def contract(R: DynamicalRMatrix, subset: Sequence[int]) -> DynamicalRMatrix:
    """Restrict to ``subset`` (strictly increasing), relabeling to 1..m.

    The dynamical variables of discarded indices are frozen at 0.
    """
    subset = tuple(int(i) for i in subset)
    if not subset:
        raise ParameterError("contraction subset must be nonempty")
    if list(subset) != sorted(set(subset)):
        raise ParameterError("contraction subset must be strictly increasing")
    if subset[0] < 1 or subset[-1] > R.n:
        raise ParameterError(f"contraction subset must lie in 1..{R.n}")
    m = len(subset)
    n = R.n

    def lift(lam: np.ndarray) -> np.ndarray:
        full = np.zeros(n, dtype=complex)
        for pos, orig in enumerate(subset):
            full[orig - 1] = lam[pos]
        return full

    def new_delta(a: int, b: int, lam: np.ndarray) -> complex:
        return R.delta(subset[a - 1], subset[b - 1], lift(np.asarray(lam, dtype=complex)))

    def new_d(a: int, b: int, lam: np.ndarray) -> complex:
        return R.d(subset[a - 1], subset[b - 1], lift(np.asarray(lam, dtype=complex)))

    return DynamicalRMatrix(n=m, delta=new_delta, d=new_d, provenance=None)


# -- decoupled composition --------------------------------------------------


def decouple_compose(
    Ra: DynamicalRMatrix,
    Rb: DynamicalRMatrix,
    g_ab: complex,
    g_ba: complex,
) -> DynamicalRMatrix:
    """Combine two solutions on disjoint index ranges.

    Output indices 1..na come from ``Ra``, na+1..na+nb from ``Rb``.  Cross
    pairs get zero exchange coefficients and the constant diagonal
    coefficients ``g_ab`` (first range to second) and ``g_ba``.
    """
    if g_ab == 0 or g_ba == 0:
        raise ParameterError("cross coefficients of a decoupled composition must be nonzero")
    na, nb = Ra.n, Rb.n
    g_ab, g_ba = complex(g_ab), complex(g_ba)

    def new_delta(i: int, j: int, lam: np.ndarray) -> complex:
        lam = np.asarray(lam, dtype=complex)
        if i <= na and j <= na:
            return Ra.delta(i, j, lam[:na])
        if i > na and j > na:
            return Rb.delta(i - na, j - na, lam[na:])
        return 0j

    def new_d(i: int, j: int, lam: np.ndarray) -> complex:
        lam = np.asarray(lam, dtype=complex)
        if i <= na and j <= na:
            return Ra.d(i, j, lam[:na])
        if i > na and j > na:
            return Rb.d(i - na, j - na, lam[na:])
        return g_ab if i <= na else g_ba

    return DynamicalRMatrix(n=na + nb, delta=new_delta, d=new_d, provenance=None)


# -- exchange-class merging under a scale -----------------------------------


@dataclass
class ScaledDatum:
    """Result of :func:`scale_f`.

    ``params`` is a valid datum whose formerly multi-class blocks each
    consist of a single exchange class; ``index_map`` sends original index
    labels to the relabeled ones; ``compensator`` is the constant 2-form
    (keyed by new labels) that must multiply the merged build's diagonal
    coefficients for it to converge, as eta -> 0, to the multi-class build.
    """

    params: ClassificationParams
    index_map: dict[int, int]
    compensator: TwoFormSpec
    eta: float


def scale_f(params: ClassificationParams, eta: float) -> ScaledDatum:
    """Merge each multi-class block into one exchange class at scale eta.

    A sub-class (free singleton or d-class) sitting in the exchange class
    at position p (1-based) has its position constant multiplied by
    eta^(1-p).  Free indices are moved in front of the d-classes inside the
    merged class, which relabels indices; the returned ``index_map`` and
    constant ``compensator`` 2-form make the merged build comparable to
    the original.
    """
    if eta <= 0:
        raise ParameterError("scale must be positive")
    if not isinstance(params.two_form, TrivialTwoForm):
        raise ParameterError(
            "exchange-class merging is defined for data with trivial 2-form; "
            "apply the 2-form separately"
        )
    p = params.partition
    new_blocks = []
    # original label -> (new position in canonical order)
    order: list[int] = []
    new_f: dict = {}
    new_signs: dict = {}
    # remember, per (old_label), the exchange-class position for the compensator
    class_position: dict[int, int] = {}
    old_class_of: dict[int, tuple[int, ...]] = {}
    for q, block in enumerate(p.blocks):
        if len(block) < 2:
            # nothing to merge; keep as is
            new_blocks.append(block)
            for dclass in block:
                for idx in dclass.members():
                    order.append(idx)
                    class_position[idx] = 1
                for cls in dclass.all_d_classes():
                    new_f[cls] = params.f_consts[cls]
                    new_signs[cls] = params.signs[cls]
                    for idx in cls:
                        old_class_of[idx] = cls
            continue
        if params.per_block[q].rational:
            raise ParameterError(
                "cannot merge exchange classes of a zero-sum block"
            )
        frees: list[int] = []
        dcs: list[tuple[int, ...]] = []
        for pos, dclass in enumerate(block, start=1):
            scale = eta ** (1 - pos)
            for idx in dclass.free:
                frees.append(idx)
                class_position[idx] = pos
                cls = (idx,)
                new_f[cls] = complex(params.f_consts[cls]) * scale
                new_signs[cls] = params.signs[cls]
                old_class_of[idx] = cls
            for cls in dclass.d_classes:
                dcs.append(cls)
                for idx in cls:
                    class_position[idx] = pos
                    old_class_of[idx] = cls
                new_f[cls] = complex(params.f_consts[cls]) * scale
                new_signs[cls] = params.signs[cls]
        merged = DeltaClass(free=tuple(frees), d_classes=tuple(dcs))
        new_blocks.append((merged,))
        order.extend(merged.members())
    index_map = {old: pos + 1 for pos, old in enumerate(order)}

    def relabel_cls(cls: tuple[int, ...]) -> tuple[int, ...]:
        return tuple(sorted(index_map[i] for i in cls))

    relabeled_blocks = tuple(
        tuple(
            DeltaClass(
                free=tuple(index_map[i] for i in dclass.free),
                d_classes=tuple(relabel_cls(c) for c in dclass.d_classes),
            )
            for dclass in block
        )
        for block in new_blocks
    )
    new_p = IndexPartition(n=p.n, blocks=relabeled_blocks)
    merged_params = ClassificationParams(
        partition=new_p,
        per_block=params.per_block,
        cross_det=params.cross_det,
        signs={relabel_cls(c): s for c, s in new_signs.items()},
        f_consts={relabel_cls(c): v for c, v in new_f.items()},
        two_form=TrivialTwoForm(),
    )
    merged_params, _ = normalize_f(merged_params)

    # compensating constant 2-form: on former cross-class pairs of a merged
    # block, g_ij = sqrt(Sigma)/(B - S) for i in the earlier class and
    # g_ji = sqrt(Sigma)/B; elsewhere 1
    comp_values: dict[tuple[int, int], complex] = {}
    block_of_old = {idx: q for q, block in enumerate(p.blocks) for dc in block for idx in dc.members()}
    for (i, j) in nd_pairs(new_p):
        oi = order[i - 1]
        oj = order[j - 1]
        q = block_of_old[oi]
        if block_of_old[oj] != q or class_position[oi] == class_position[oj]:
            comp_values[(i, j)] = 1.0 + 0j
            continue
        consts = params.per_block[q]
        der = derive(consts.sum_const, consts.det_const)
        sq = principal_sqrt(consts.det_const)
        if class_position[oi] < class_position[oj]:
            comp_values[(i, j)] = sq / (der.root - consts.sum_const)
        else:
            comp_values[(i, j)] = sq / der.root
    compensator = TableTwoForm(
        g={pair: (lambda lam, _v=v: _v) for pair, v in comp_values.items()}
    )
    return ScaledDatum(
        params=merged_params, index_map=index_map, compensator=compensator, eta=eta
    )


# -- absorbing position constants into the dynamical variables --------------


def reparametrize(params: ClassificationParams) -> dict:
    """Offsets of the dynamical variables that absorb the f constants.

    Returns ``{"offsets": {index: complex}}`` such that building the datum
    with every position constant reset to its conventional value (1 in
    nonzero-sum blocks, 0 in zero-sum blocks) and evaluating at
    lam + offsets reproduces the original build at lam.
    """
    p = params.partition
    offsets: dict[int, complex] = {}
    for q, block in enumerate(p.blocks):
        consts = params.per_block[q]
        der = None if consts.rational else derive(consts.sum_const, consts.det_const)
        for dclass in block:
            for cls in dclass.all_d_classes():
                eps = params.signs[cls]
                f = complex(params.f_consts[cls])
                size = len(cls)
                if consts.rational:
                    off = (eps / size) * f
                else:
                    if f == 0:
                        raise ParameterError(
                            f"position constant of d-class {list(cls)} is zero"
                        )
                    off = (eps / size) * (np.log(complex(f)) / der.log_ratio)
                for idx in cls:
                    offsets[idx] = complex(off)
    return {"offsets": offsets}


def conventional_f(params: ClassificationParams) -> ClassificationParams:
    """The same datum with every position constant at its conventional value."""
    new_f = {}
    for q, block in enumerate(params.partition.blocks):
        want = 0j if params.per_block[q].rational else 1 + 0j
        for dclass in block:
            for cls in dclass.all_d_classes():
                new_f[cls] = want
    return replace(params, f_consts=new_f)


# -- limit from nonzero-sum to zero-sum data --------------------------------


@dataclass
class LimitReport:
    xi_values: list[float]
    distances: list[float]
    orders: list[float] = field(default_factory=list)
    lam: Optional[np.ndarray] = None

    @property
    def converging(self) -> bool:
        return all(o >= 0.9 for o in self.orders) and (
            all(b < a for a, b in zip(self.distances, self.distances[1:]))
        )


def _limit_member(
    params: ClassificationParams, xi: float, slopes: Sequence[complex]
) -> ClassificationParams:
    per_block = []
    new_f = dict(params.f_consts)
    for q, block in enumerate(params.partition.blocks):
        consts = params.per_block[q]
        slope = complex(slopes[q])
        per_block.append(replace(consts, sum_const=slope * xi))
        ratio = slope / principal_sqrt(consts.det_const)
        for dclass in block:
            for cls in dclass.all_d_classes():
                new_f[cls] = 1 - complex(params.f_consts[cls]) * ratio * xi
    return replace(params, per_block=tuple(per_block), f_consts=new_f)


def trig_to_rational_limit(
    rational_params: ClassificationParams,
    xi_sequence: Sequence[float],
    slopes: Optional[Sequence[complex]] = None,
    lam: Optional[np.ndarray] = None,
) -> LimitReport:
    """Entrywise convergence of a nonzero-sum family to a zero-sum datum.

    Every block of the input must have zero sum constant and a single
    exchange class.  For each xi the family member has sum constant
    slope*xi (slope defaults to the principal square root of the block's
    determinant constant) and position constants 1 - f*(slope/sqrt(det))*xi;
    the report gives the max entrywise distance to the zero-sum build at a
    fixed test point and the empirical convergence orders between
    consecutive xi values.
    """
    from .builder import build
    from .classifier import _reference_point
    from .rmatrix import evaluate

    p = rational_params.partition
    for q, block in enumerate(p.blocks):
        if not rational_params.per_block[q].rational:
            raise ParameterError(f"block {q + 1} has nonzero sum constant")
        if len(block) != 1:
            raise ParameterError(
                f"block {q + 1} has several exchange classes; limit needs one"
            )
    if slopes is None:
        slopes = [
            principal_sqrt(c.det_const) for c in rational_params.per_block
        ]
    R0 = build(p, rational_params)
    if lam is None:
        lam = _reference_point(R0)
    lam = np.asarray(lam, dtype=complex)
    base = evaluate(R0, lam).matrix
    xi_values = [float(x) for x in xi_sequence]
    distances = []
    for xi in xi_values:
        member = _limit_member(rational_params, xi, slopes)
        Rxi = build(p, member)
        distances.append(float(np.abs(evaluate(Rxi, lam).matrix - base).max()))
    orders = []
    for (x1, d1), (x2, d2) in zip(
        zip(xi_values, distances), zip(xi_values[1:], distances[1:])
    ):
        if d2 == 0 or d1 == 0:
            orders.append(float("inf"))
        else:
            orders.append(float(np.log(d1 / d2) / np.log(x1 / x2)))
    return LimitReport(xi_values=xi_values, distances=distances, orders=orders, lam=lam)
