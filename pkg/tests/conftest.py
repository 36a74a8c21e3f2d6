import json

import numpy as np
import pytest

from dynrmat.builder import build
from dynrmat.params import BlockConstants, ClassificationParams, normalize_f
from dynrmat.partition import DeltaClass, IndexPartition
from dynrmat.serialize import params_to_json


def golden_datum():
    """Reference n=4 datum: one block, one exchange class, two free indices
    and one two-element d-class, zero sum constant, unit determinant
    constant, signs (+1, +1, -1), all position constants 0, trivial 2-form.
    """
    p = IndexPartition(
        n=4, blocks=((DeltaClass(free=(1, 2), d_classes=((3, 4),)),),)
    )
    c = ClassificationParams(
        partition=p,
        per_block=(BlockConstants(0j, 1 + 0j),),
        signs={(1,): 1, (2,): 1, (3, 4): -1},
        f_consts={(1,): 0j, (2,): 0j, (3, 4): 0j},
    )
    c, _ = normalize_f(c)
    return p, c


def golden_expected_tables(lam: np.ndarray):
    """Closed-form coefficient tables of the golden datum, written out by
    hand: exchange entries are reciprocals of signed partial sums of lam,
    diagonal entries are 1 minus the exchange entry on coupled pairs and 0
    inside the d-class {3, 4}.
    """
    l1, l2, l3, l4 = lam
    delta = np.zeros((4, 4), dtype=complex)
    delta[0, 0] = delta[1, 1] = 1
    delta[2, 2] = delta[3, 3] = -1
    delta[2, 3] = delta[3, 2] = -1
    delta[0, 1] = 1 / (l1 - l2)
    delta[1, 0] = -delta[0, 1]
    for j in (3, 4):
        delta[0, j - 1] = 1 / (l1 + l3 + l4)
        delta[1, j - 1] = 1 / (l2 + l3 + l4)
        delta[j - 1, 0] = -delta[0, j - 1]
        delta[j - 1, 1] = -delta[1, j - 1]
    d = np.zeros((4, 4), dtype=complex)
    for i in range(4):
        for j in range(4):
            if i != j and not {i, j} == {2, 3}:
                d[i, j] = 1 - delta[i, j]
    return delta, d


@pytest.fixture
def golden():
    p, c = golden_datum()
    return p, c, build(p, c)


@pytest.fixture
def golden_config(tmp_path):
    _, c = golden_datum()
    path = tmp_path / "golden.json"
    path.write_text(json.dumps(params_to_json(c)))
    return str(path)


def random_points(rng: np.random.Generator, n: int, count: int, box: float = 2.0):
    return [
        rng.uniform(-box, box, n) + 1j * rng.uniform(-box, box, n)
        for _ in range(count)
    ]
