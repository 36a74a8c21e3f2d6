import numpy as np
import pytest

from dynrmat.builder import build
from dynrmat.rmatrix import (
    DynamicalRMatrix,
    composite_index,
    evaluate,
    shifted,
)
from dynrmat.sampling import random_datum
from dynrmat.verifier import (
    EQUATION_TAGS,
    check_invertibility,
    check_system,
    check_zero_weight,
    dqybe_defect,
    dqybe_residual,
    dqybe_residual_normalized,
    sample_lambda,
)

from conftest import golden_datum, random_points


def _triple_oracle(R, lam):
    """Same relation via dense kron-style products built with loops over the
    spectator label only; an independent restatement of both sides."""
    n = R.n
    lam = np.asarray(lam, dtype=complex)
    size = n ** 3
    eye = np.eye(n)

    def op(slot_pair, shift_slot):
        out = np.zeros((size, size), dtype=complex)
        for k in range(1, n + 1):
            pt = shifted(lam, k) if shift_slot else lam
            M = evaluate(R, pt).matrix.reshape(n, n, n, n)
            for i in range(n):
                for j in range(n):
                    for a in range(n):
                        for b in range(n):
                            v = M[i, j, a, b]
                            if v == 0:
                                continue
                            if slot_pair == (1, 2):
                                row = i * n * n + j * n + (k - 1)
                                col = a * n * n + b * n + (k - 1)
                            elif slot_pair == (1, 3):
                                row = i * n * n + (k - 1) * n + j
                                col = a * n * n + (k - 1) * n + b
                            else:
                                row = (k - 1) * n * n + i * n + j
                                col = (k - 1) * n * n + a * n + b
                            out[row, col] += v
            if not shift_slot:
                break
        if not shift_slot:
            # replicate the k-independent block over all spectator labels
            full = np.zeros((size, size), dtype=complex)
            M = evaluate(R, lam).matrix.reshape(n, n, n, n)
            for k in range(n):
                for i in range(n):
                    for j in range(n):
                        for a in range(n):
                            for b in range(n):
                                v = M[i, j, a, b]
                                if v == 0:
                                    continue
                                if slot_pair == (1, 2):
                                    full[i * n * n + j * n + k,
                                         a * n * n + b * n + k] += v
                                elif slot_pair == (1, 3):
                                    full[i * n * n + k * n + j,
                                         a * n * n + k * n + b] += v
                                else:
                                    full[k * n * n + i * n + j,
                                         k * n * n + a * n + b] += v
            return full
        return out

    lhs = op((1, 2), True) @ op((1, 3), False) @ op((2, 3), True)
    rhs = op((2, 3), False) @ op((1, 3), True) @ op((1, 2), False)
    return float(np.abs(lhs - rhs).max())


def test_defect_matches_independent_oracle_on_solution():
    p, c = golden_datum()
    R = build(p, c)
    rng = np.random.default_rng(0)
    (lam,) = sample_lambda(R, rng, 1)
    raw, _ = dqybe_defect(R, lam)
    assert raw < 1e-12
    assert _triple_oracle(R, lam) < 1e-12


def test_defect_matches_independent_oracle_on_non_solution():
    # doctor one coefficient so the relation genuinely fails, then both
    # computations must agree on the defect magnitude
    p, c = golden_datum()
    base = build(p, c)

    def bad_d(i, j, lam):
        v = base.d(i, j, lam)
        if (i, j) == (1, 2):
            return v + 0.1
        return v

    R = DynamicalRMatrix(n=4, delta=base.delta, d=bad_d)
    rng = np.random.default_rng(1)
    (lam,) = sample_lambda(R, rng, 1)
    raw, _ = dqybe_defect(R, lam)
    oracle = _triple_oracle(R, lam)
    assert raw > 1e-3
    assert abs(raw - oracle) < 1e-10 * max(1.0, oracle)


def test_perturbed_diagonal_coefficient_detected():
    p, c = golden_datum()
    base = build(p, c)

    def bad_d(i, j, lam):
        v = base.d(i, j, lam)
        if (i, j) == (1, 2):
            return v + 0.1
        return v

    R = DynamicalRMatrix(n=4, delta=base.delta, d=bad_d)
    rng = np.random.default_rng(2)
    (lam,) = sample_lambda(R, rng, 1)
    assert dqybe_residual_normalized(R, lam) > 1e-3


def test_equation_tags_complete():
    assert EQUATION_TAGS == (
        "G0", "F1", "F2", "F3", "F4", "F5", "F6", "F7", "F8", "F9",
        "E1", "E2", "E3", "E4", "E5", "E6",
    )


def test_system_vanishes_on_solutions():
    rng = np.random.default_rng(3)
    for _ in range(5):
        n = int(rng.integers(2, 6))
        p, c = random_datum(n, rng)
        R = build(p, c)
        report = check_system(R, samples=sample_lambda(R, rng, 4))
        assert report.passed
        assert all(v < 1e-9 for v in report.per_equation.values())


def test_system_equivalent_to_global_relation():
    # a generic zero-weight non-solution must fail BOTH the component
    # system and the global relation; the fifteen equations exactly cover
    # the nonzero defect components
    rng = np.random.default_rng(4)
    n = 3
    dt = rng.uniform(0.5, 2, (n, n)) + 1j * rng.uniform(-1, 1, (n, n))
    dd = rng.uniform(0.5, 2, (n, n)) + 1j * rng.uniform(-1, 1, (n, n))

    def delta(i, j, lam):
        return complex(dt[i - 1, j - 1] * np.exp(0.1 * lam[i - 1]))

    def d(i, j, lam):
        return complex(dd[i - 1, j - 1])

    R = DynamicalRMatrix(n=n, delta=delta, d=d)
    lam = np.array([0.3 + 0.1j, -0.2 + 0.4j, 0.7 - 0.3j])
    raw, _ = dqybe_defect(R, lam)
    report = check_system(R, samples=[lam])
    assert raw > 1e-3
    assert not report.passed
    assert max(report.per_equation.values()) > 1e-3


def test_normalized_residual_scale_invariance():
    # scaling the whole matrix by a constant scales the raw defect
    # cubically; the normalized residual stays within a small factor
    p, c = golden_datum()
    base = build(p, c)

    def make(scale):
        def bad_d(i, j, lam):
            v = base.d(i, j, lam)
            if (i, j) == (1, 2):
                v = v + 0.05
            return scale * v

        def sdelta(i, j, lam):
            return scale * base.delta(i, j, lam)

        return DynamicalRMatrix(n=4, delta=sdelta, d=bad_d)

    rng = np.random.default_rng(5)
    (lam,) = sample_lambda(base, rng, 1)
    r1 = dqybe_residual_normalized(make(1.0), lam)
    r10 = dqybe_residual_normalized(make(10.0), lam)
    raw1, _ = dqybe_defect(make(1.0), lam)
    raw10, _ = dqybe_defect(make(10.0), lam)
    assert 500 < raw10 / raw1 < 2000  # cubic in the scale
    assert 0.2 < r10 / r1 < 5


def test_check_zero_weight_rejects_stray_entry():
    p, c = golden_datum()
    R = build(p, c)
    rng = np.random.default_rng(6)
    (lam,) = sample_lambda(R, rng, 1)
    P = evaluate(R, lam)
    assert check_zero_weight(P)
    M = P.matrix.copy()
    M[composite_index(4, 1, 2), composite_index(4, 3, 4)] = 0.5
    from dynrmat.rmatrix import DensePoint

    assert not check_zero_weight(DensePoint(n=4, lam=P.lam, matrix=M))


def test_invertibility_factorization():
    rng = np.random.default_rng(7)
    for _ in range(5):
        n = int(rng.integers(2, 6))
        p, c = random_datum(n, rng)
        R = build(p, c)
        (lam,) = sample_lambda(R, rng, 1)
        res = check_invertibility(R, lam)
        assert res["agree"]
        assert res["det_factorized"] != 0


def test_sample_lambda_respects_caps():
    p, c = golden_datum()
    R = build(p, c)
    rng = np.random.default_rng(8)
    pts = sample_lambda(R, rng, 6, entry_cap=50.0)
    assert len(pts) == 6
    for lam in pts:
        tabs = [R.tables(lam)] + [R.tables(shifted(lam, k)) for k in range(1, 5)]
        for dt, dd in tabs:
            assert np.abs(dt).max() <= 50.0 and np.abs(dd).max() <= 50.0


def test_check_system_requires_samples():
    p, c = golden_datum()
    R = build(p, c)
    with pytest.raises(ValueError):
        check_system(R, samples=[])
