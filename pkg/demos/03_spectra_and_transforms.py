"""Spectral classification and the covariance transforms: twists, 2-forms,
contraction, decoupled composition, class merging, and the zero-sum limit.

Run:  python3 demos/03_spectra_and_transforms.py
"""

import numpy as np

from dynrmat import (
    BlockConstants,
    ClassificationParams,
    DeltaClass,
    IndexPartition,
    apply_2form,
    apply_twist,
    build,
    constant_table_two_form,
    contract,
    decouple_compose,
    dqybe_residual_normalized,
    hecke_classify,
    normalize_f,
    sample_lambda,
    scale_f,
    trig_to_rational_limit,
)

partition = IndexPartition(
    n=4, blocks=((DeltaClass(free=(1, 2), d_classes=((3, 4),)),),)
)
params = ClassificationParams(
    partition=partition,
    per_block=(BlockConstants(0j, 1 + 0j),),
    signs={(1,): 1, (2,): 1, (3, 4): -1},
    f_consts={(1,): 0j, (2,): 0j, (3, 4): 0j},
)
params, _ = normalize_f(params)
R = build(partition, params)
rng = np.random.default_rng(1)

# -- spectral type ----------------------------------------------------------
rep = hecke_classify(R)
print(f"spectral type: {rep.kind} (rho={rep.rho:.4g}, kappa={rep.kappa:.4g})")

# -- twist: per-index potentials, leaves exchange entries untouched ---------
beta = {i: (lambda lam, k=i: complex(np.exp(0.1 * k * lam[k - 1]))) for i in
        range(1, 5)}
Rt = apply_twist(R, beta)
(lam,) = sample_lambda(Rt, rng, 1)
print(f"twist residual: {dqybe_residual_normalized(Rt, lam):.3e}")

# -- constant 2-form on the coupled pairs -----------------------------------
g = constant_table_two_form(
    {pr: 2.0 + 0j for pr in ((1, 2), (1, 3), (1, 4), (2, 3), (2, 4))}
)
Rg = apply_2form(R, g)
print(f"2-form residual: {dqybe_residual_normalized(Rg, lam):.3e}")

# -- contraction to an index subset -----------------------------------------
R12 = contract(R, (1, 2))
mu = np.array([0.7 + 0.2j, -0.3 + 0.1j])
print(f"contracted exchange(1,2): {R12.delta(1, 2, mu):.6g} "
      f"(expected {1 / (mu[0] - mu[1]):.6g})")

# -- decoupled composition --------------------------------------------------
from dynrmat.rmatrix import DynamicalRMatrix

scalar = DynamicalRMatrix(n=1, delta=lambda i, j, l: 1.5 + 0j, d=lambda i, j, l: 0j)
Rc = decouple_compose(R, scalar, 1.2, 1 / 1.2)
lam5 = np.concatenate([lam, [0.4 + 0.1j]])
print(f"composition residual: {dqybe_residual_normalized(Rc, lam5):.3e}")

# -- merging exchange classes at a scale ------------------------------------
p2 = IndexPartition(n=4, blocks=((DeltaClass(free=(1, 2)), DeltaClass(free=(3, 4))),))
c2 = ClassificationParams(
    partition=p2,
    per_block=(BlockConstants(1.3 + 0.4j, 0.8 - 0.2j),),
    signs={(1,): 1, (2,): -1, (3,): 1, (4,): 1},
    f_consts={(1,): 1 + 0j, (2,): 0.7 + 0.3j, (3,): 1 + 0j, (4,): 1.4 - 0.5j},
)
c2, _ = normalize_f(c2)
for eta in (1e-2, 1e-3):
    merged = scale_f(c2, eta)
    print(f"scale eta={eta}: merged partition has "
          f"{len(merged.params.partition.blocks[0])} class(es), "
          f"index map {merged.index_map}")

# -- zero-sum limit ---------------------------------------------------------
limit = trig_to_rational_limit(params, [1e-1, 1e-2, 1e-3])
print(f"zero-sum limit converging: {limit.converging}, "
      f"orders {[f'{o:.3f}' for o in limit.orders]}")
