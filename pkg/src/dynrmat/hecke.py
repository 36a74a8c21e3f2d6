"""Spectral classification of the flip-composed matrix.

After composing with the factor flip, a zero-weight matrix acts as the
scalar Delta_ii on each e_i (x) e_i line and as the 2x2 block
[[Delta_ji, d_ji], [d_ij, Delta_ij]] on each plane span{e_i (x) e_j,
e_j (x) e_i}.  The eigenvalue structure decides the classification:

* ``DegenerateSingleDClass`` -- the whole index set is one d-class; the
  matrix is a multiple of the flip and has the single eigenvalue Delta;
* ``WeakHecke`` -- exactly two distinct eigenvalues {rho, -kappa} occur
  and every block with a repeated eigenvalue is diagonalizable, so the
  minimal polynomial is (X - rho)(X + kappa);
* ``Hecke`` -- additionally rho occurs on every diagonal line and every
  off-diagonal plane carries both eigenvalues;
* ``NotHecke`` -- anything else (e.g. more than two distinct values).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import NotInFamilyError
from .params import principal_sqrt
from .rmatrix import DynamicalRMatrix
from .verifier import sample_lambda

DEFAULT_TOL = 1e-9


@dataclass
class HeckeAssignment:
    rho: complex
    kappa: complex


@dataclass
class HeckeReport:
    kind: str  # "Hecke" | "WeakHecke" | "DegenerateSingleDClass" | "NotHecke"
    rho: Optional[complex] = None
    kappa: Optional[complex] = None
    assignments: list[HeckeAssignment] = field(default_factory=list)
    evidence: dict = field(default_factory=dict)
    lambda_samples: list = field(default_factory=list)
    detail: str = ""


def _constant_over_samples(values: np.ndarray, tol: float, scale: float, what: str):
    if np.abs(values - values.mean()).max() > tol * max(1.0, scale):
        raise NotInFamilyError(f"{what} varies with the dynamical point")
    return complex(values.mean())


def hecke_classify(
    R: DynamicalRMatrix,
    samples: Optional[Sequence[np.ndarray]] = None,
    tol: float = DEFAULT_TOL,
    seed: int = 0,
) -> HeckeReport:
    """Decide the spectral class of the flip-composed matrix."""
    n = R.n
    if samples is None:
        rng = np.random.default_rng(seed)
        samples = sample_lambda(R, rng, 5)
    tabs = [R.tables(np.asarray(lam, dtype=complex)) for lam in samples]
    scale = max(
        max(float(np.abs(dt).max()), float(np.abs(dd).max())) for dt, dd in tabs
    )

    # diagonal eigenvalues Delta_ii (must be constants)
    diag = {}
    for i in range(1, n + 1):
        vals = np.array([dt[i - 1, i - 1] for dt, _ in tabs])
        diag[i] = _constant_over_samples(vals, tol, scale, f"Delta_{i}{i}")

    # per-plane invariants and eigenvalues
    pair_eigs: dict[tuple[int, int], tuple[complex, complex]] = {}
    pair_diagonalizable: dict[tuple[int, int], bool] = {}
    all_d_zero = n > 1
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            s_vals = np.array(
                [dt[i - 1, j - 1] + dt[j - 1, i - 1] for dt, _ in tabs]
            )
            det_vals = np.array(
                [
                    dd[i - 1, j - 1] * dd[j - 1, i - 1]
                    - dt[i - 1, j - 1] * dt[j - 1, i - 1]
                    for dt, dd in tabs
                ]
            )
            s = _constant_over_samples(s_vals, tol, scale, f"pair sum ({i},{j})")
            det = _constant_over_samples(
                det_vals, tol, scale, f"pair determinant ({i},{j})"
            )
            disc = principal_sqrt(s * s + 4 * det)
            pair_eigs[(i, j)] = ((s + disc) / 2, (s - disc) / 2)
            if abs(disc) <= tol * max(1.0, scale):
                # repeated eigenvalue: diagonalizable iff the block is scalar
                off = max(
                    max(abs(dd[i - 1, j - 1]), abs(dd[j - 1, i - 1]))
                    for _, dd in tabs
                )
                skew = max(
                    abs(dt[i - 1, j - 1] - dt[j - 1, i - 1]) for dt, _ in tabs
                )
                pair_diagonalizable[(i, j)] = (
                    off <= tol * max(1.0, scale) and skew <= tol * max(1.0, scale)
                )
            else:
                pair_diagonalizable[(i, j)] = True
            d_mags = max(
                max(abs(dd[i - 1, j - 1]), abs(dd[j - 1, i - 1])) for _, dd in tabs
            )
            if d_mags > tol * max(1.0, scale):
                all_d_zero = False

    evidence = {
        "diagonal": diag,
        "pair_eigenvalues": pair_eigs,
        "scale": scale,
    }
    lam_list = [tuple(np.asarray(l, dtype=complex).tolist()) for l in samples]

    if n == 1 or all_d_zero:
        # one d-class covering everything: all diagonal coefficients vanish
        # and every exchange entry equals the same constant, so the
        # flip-composed matrix is that constant times the identity
        eq_tol = tol * max(1.0, scale)
        delta = diag[1]
        uniform = all(abs(diag[i] - delta) <= eq_tol for i in diag) and all(
            abs(e1 - delta) <= eq_tol and abs(e2 - delta) <= eq_tol
            for (e1, e2) in pair_eigs.values()
        )
        if uniform:
            return HeckeReport(
                kind="DegenerateSingleDClass",
                rho=delta,
                kappa=-delta,
                evidence=evidence,
                lambda_samples=lam_list,
                detail="single d-class: minimal polynomial has degree one",
            )

    # cluster all eigenvalues
    values: list[complex] = list(diag.values())
    for e1, e2 in pair_eigs.values():
        values.extend((e1, e2))
    clusters: list[list[complex]] = []
    eq_tol = max(tol * max(1.0, scale), 1e-12)
    for v in values:
        for cl in clusters:
            if abs(v - cl[0]) <= 1e4 * eq_tol:
                cl.append(v)
                break
        else:
            clusters.append([v])
    centers = [complex(np.mean(cl)) for cl in clusters]
    evidence["eigenvalue_clusters"] = centers

    if len(centers) != 2:
        return HeckeReport(
            kind="NotHecke",
            evidence=evidence,
            lambda_samples=lam_list,
            detail=f"{len(centers)} distinct eigenvalue(s), need exactly 2",
        )
    if not all(pair_diagonalizable.values()):
        bad = [p for p, okd in pair_diagonalizable.items() if not okd]
        return HeckeReport(
            kind="NotHecke",
            evidence=evidence,
            lambda_samples=lam_list,
            detail=f"non-diagonalizable repeated-eigenvalue plane(s) {bad}",
        )

    def near(a: complex, b: complex) -> bool:
        return abs(a - b) <= 1e4 * eq_tol

    e1, e2 = centers
    diag_hits = {0: [], 1: []}
    for i, v in diag.items():
        diag_hits[0 if near(v, e1) else 1].append(i)
    assignments = []
    if diag_hits[0]:
        assignments.append(HeckeAssignment(rho=e1, kappa=-e2))
    if diag_hits[1]:
        assignments.append(HeckeAssignment(rho=e2, kappa=-e1))
    if not assignments:  # cannot happen: diagonals are among the clusters
        assignments.append(HeckeAssignment(rho=e1, kappa=-e2))
    # primary assignment: eigenvalue carried by more diagonal lines, ties
    # resolved toward the smallest index
    if len(assignments) == 2:
        c0, c1 = len(diag_hits[0]), len(diag_hits[1])
        if c1 > c0 or (c1 == c0 and min(diag_hits[1]) < min(diag_hits[0])):
            assignments.reverse()
    primary = assignments[0]

    # Hecke: a single eigenvalue on every diagonal line and both
    # eigenvalues on every off-diagonal plane
    hecke = (not diag_hits[0]) or (not diag_hits[1])
    if hecke:
        rho = primary.rho
        kappa = primary.kappa
        for (i, j), (f1, f2) in pair_eigs.items():
            pair_vals = sorted((f1, f2), key=lambda z: (z.real, z.imag))
            want = sorted((rho, -kappa), key=lambda z: (z.real, z.imag))
            if not (near(pair_vals[0], want[0]) and near(pair_vals[1], want[1])):
                hecke = False
                break
    kind = "Hecke" if hecke else "WeakHecke"
    if primary.rho == 0 or primary.kappa == 0 or near(primary.rho, -primary.kappa):
        return HeckeReport(
            kind="NotHecke",
            evidence=evidence,
            lambda_samples=lam_list,
            detail="degenerate parameters (rho, kappa)",
        )
    return HeckeReport(
        kind=kind,
        rho=primary.rho,
        kappa=primary.kappa,
        assignments=assignments,
        evidence=evidence,
        lambda_samples=lam_list,
    )


def basic_form_distance(R: DynamicalRMatrix, report: HeckeReport) -> dict:
    """Recipe reducing a (weak) Hecke matrix to its basic normal form.

    Returns a scalar factor and a pairwise 2-form multiplier: scaling the
    whole matrix by ``scalar`` and multiplying each diagonal coefficient
    d_ij by ``two_form(i, j, lam)`` produces a matrix whose recovered
    2-form is identically -1 (the basic form convention).  The scalar is
    1/kappa, which is the identity on the basic trigonometric datum.
    """
    if report.kind not in ("Hecke", "WeakHecke"):
        raise NotInFamilyError(
            f"basic-form reduction needs a (weak) Hecke matrix, got {report.kind}"
        )
    from .classifier import classify, recover_params

    struct = classify(R)
    params = recover_params(R, struct)

    def two_form_multiplier(i: int, j: int, lam: np.ndarray) -> complex:
        return -1.0 / params.two_form.value(i, j, lam)

    return {
        "scalar": 1.0 / report.kappa,
        "two_form": two_form_multiplier,
        "params": params,
    }
