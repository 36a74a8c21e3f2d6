import numpy as np
import pytest

from dynrmat.errors import PoleError
from dynrmat.rmatrix import (
    composite_index,
    dense_point_to_json,
    embed_with_shift,
    evaluate,
    permuted,
    shifted,
    sum_and_det_fields,
)

from conftest import golden_datum, golden_expected_tables, random_points
from dynrmat.builder import build


def test_composite_index_convention():
    # (a, b) -> (a-1)*n + b, reported 0-based
    assert composite_index(3, 1, 1) == 0
    assert composite_index(3, 1, 3) == 2
    assert composite_index(3, 2, 1) == 3
    assert composite_index(3, 3, 3) == 8


def test_shifted_moves_one_component():
    lam = np.array([0.1 + 0.2j, -0.3 + 0j])
    out = shifted(lam, 2)
    assert out[0] == lam[0] and abs(out[1] - (lam[1] + 1)) < 1e-15
    assert lam[1] == -0.3 + 0j  # input untouched


def test_evaluate_sparsity_and_values():
    p, c = golden_datum()
    R = build(p, c)
    rng = np.random.default_rng(0)
    (lam,) = random_points(rng, 4, 1)
    P = evaluate(R, lam)
    delta, d = golden_expected_tables(lam)
    n = 4
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            assert abs(P.entry((i, j), (j, i)) - delta[i - 1, j - 1]) < 1e-12
            if i != j:
                assert abs(P.entry((i, j), (i, j)) - d[i - 1, j - 1]) < 1e-12
    # everything else is zero
    mask = np.ones((n * n, n * n), dtype=bool)
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            mask[composite_index(n, i, j), composite_index(n, j, i)] = False
            mask[composite_index(n, i, j), composite_index(n, i, j)] = False
    assert np.abs(P.matrix[mask]).max() == 0


def _embed_oracle(R, slot_pair, shift_slot, lam):
    """Independent n^6 nested-loop embedding: entry by entry, multiply the
    matrix element on the active slots by the identity on the spectator,
    shifting the evaluation point by the spectator's basis label."""
    n = R.n
    out = np.zeros((n ** 3, n ** 3), dtype=complex)
    spectator = ({1, 2, 3} - set(slot_pair)).pop()
    cache = {}
    for k in range(1, n + 1):
        pt = shifted(lam, k) if shift_slot is not None else np.asarray(lam, dtype=complex)
        cache[k] = evaluate(R, pt).matrix
    for a1 in range(1, n + 1):
        for a2 in range(1, n + 1):
            for a3 in range(1, n + 1):
                for b1 in range(1, n + 1):
                    for b2 in range(1, n + 1):
                        for b3 in range(1, n + 1):
                            outs = (a1, a2, a3)
                            ins = (b1, b2, b3)
                            if outs[spectator - 1] != ins[spectator - 1]:
                                continue
                            k = outs[spectator - 1]
                            i, j = slot_pair
                            row = composite_index(n, outs[i - 1], outs[j - 1])
                            col = composite_index(n, ins[i - 1], ins[j - 1])
                            r3 = (a1 - 1) * n * n + (a2 - 1) * n + (a3 - 1)
                            c3 = (b1 - 1) * n * n + (b2 - 1) * n + (b3 - 1)
                            out[r3, c3] = cache[k][row, col]
    return out


@pytest.mark.parametrize("slot_pair,shift_slot", [
    ((1, 2), 3), ((1, 2), None),
    ((1, 3), 2), ((1, 3), None),
    ((2, 3), 1), ((2, 3), None),
])
def test_embed_with_shift_against_nested_loop_oracle(slot_pair, shift_slot):
    p, c = golden_datum()
    R = build(p, c)
    rng = np.random.default_rng(7)
    (lam,) = random_points(rng, 4, 1)
    fast = embed_with_shift(R, slot_pair, shift_slot, lam)
    slow = _embed_oracle(R, slot_pair, shift_slot, lam)
    assert np.abs(fast - slow).max() < 1e-13


def test_embed_rejects_bad_slots():
    p, c = golden_datum()
    R = build(p, c)
    lam = np.zeros(4, dtype=complex) + 0.5
    with pytest.raises(ValueError):
        embed_with_shift(R, (2, 1), None, lam)
    with pytest.raises(ValueError):
        embed_with_shift(R, (1, 2), 1, lam)  # shift slot must spectate


def test_permuted_block_structure():
    p, c = golden_datum()
    R = build(p, c)
    rng = np.random.default_rng(1)
    (lam,) = random_points(rng, 4, 1)
    P = evaluate(R, lam)
    M = permuted(P)
    delta, d = golden_expected_tables(lam)
    n = 4
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            if i == j:
                assert abs(M[composite_index(n, i, i), composite_index(n, i, i)]
                           - delta[i - 1, i - 1]) < 1e-12
                continue
            # on span{e_i e_j, e_j e_i} the flip-composed restriction is
            # [[delta_ji, d_ji], [d_ij, delta_ij]]
            r1 = composite_index(n, i, j)
            r2 = composite_index(n, j, i)
            assert abs(M[r1, r1] - delta[j - 1, i - 1]) < 1e-12
            assert abs(M[r1, r2] - d[j - 1, i - 1]) < 1e-12
            assert abs(M[r2, r1] - d[i - 1, j - 1]) < 1e-12
            assert abs(M[r2, r2] - delta[i - 1, j - 1]) < 1e-12


def test_sum_and_det_fields_constancy():
    p, c = golden_datum()
    R = build(p, c)
    rng = np.random.default_rng(2)
    pts = random_points(rng, 4, 3)
    tables = [sum_and_det_fields(R, lam) for lam in pts]
    for key in tables[0]:
        sums = [t[key][0] for t in tables]
        dets = [t[key][1] for t in tables]
        assert max(abs(s - sums[0]) for s in sums) < 1e-10
        assert max(abs(v - dets[0]) for v in dets) < 1e-10
    # the golden datum has pair sum 0 and pair determinant 1 on every
    # cross-class pair
    for (i, j), (s, det) in tables[0].items():
        if (i, j) == (3, 4):
            assert abs(s + 2) < 1e-12 and abs(det + 1) < 1e-12
        else:
            assert abs(s) < 1e-12 and abs(det - 1) < 1e-12


def test_pole_detection():
    p, c = golden_datum()
    R = build(p, c)
    lam = np.array([0.5, 0.5, 0.25, 0.25], dtype=complex)  # lam1 == lam2
    with pytest.raises(PoleError):
        R.tables(lam)


def test_dense_point_json_round_trip():
    from dynrmat.serialize import dense_point_from_json

    p, c = golden_datum()
    R = build(p, c)
    rng = np.random.default_rng(3)
    (lam,) = random_points(rng, 4, 1)
    P = evaluate(R, lam)
    back = dense_point_from_json(dense_point_to_json(P))
    assert back.n == P.n
    assert np.abs(back.matrix - P.matrix).max() == 0
    assert np.abs(np.asarray(back.lam) - np.asarray(P.lam)).max() == 0
