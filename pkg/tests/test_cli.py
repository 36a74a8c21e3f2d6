import json

import numpy as np
import pytest

from dynrmat.builder import build
from dynrmat.cli import (
    EXIT_INVALID,
    EXIT_NOT_IN_FAMILY,
    EXIT_OK,
    EXIT_POLE,
    EXIT_RESIDUAL,
    EXIT_USAGE,
    main,
)
from dynrmat.rmatrix import (
    DynamicalRMatrix,
    composite_index,
    dense_point_to_json,
    evaluate,
    shifted,
)
from dynrmat.serialize import params_to_json
from dynrmat.verifier import sample_lambda

from conftest import golden_datum


def _matrix_config(R, base_points, include_shifts=True, perturb=None):
    pts = []
    seen = set()
    for lam in base_points:
        group = [lam]
        if include_shifts:
            group += [shifted(lam, k) for k in range(1, R.n + 1)]
        for mu in group:
            key = tuple(np.round(np.asarray(mu, dtype=complex), 12))
            if key in seen:
                continue
            seen.add(key)
            P = evaluate(R, mu)
            if perturb is not None:
                M = P.matrix.copy()
                (r, c), eps = perturb
                M[r, c] += eps
                from dynrmat.rmatrix import DensePoint

                P = DensePoint(n=P.n, lam=P.lam, matrix=M)
            pts.append(dense_point_to_json(P))
    return {"kind": "matrix", "n": R.n, "samples": pts}


@pytest.fixture
def golden_R():
    p, c = golden_datum()
    return build(p, c)


def _write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


# -- build ------------------------------------------------------------------


def test_build_summary_and_point(golden_config, capsys):
    assert main(["build", golden_config, "--lambda", "1,2,0.5,0.25"]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["summary"][0] == "n = 4"
    assert any("exchange(1,2)" in line for line in out["summary"])
    # at (1, 2, .5, .25) the (1,2) exchange entry is 1/(1-2) = -1
    entries = {
        (tuple(e["row"]), tuple(e["col"])): complex(e["re"], e["im"])
        for e in out["point"]["entries"]
    }
    assert abs(entries[((1, 2), (2, 1))] + 1) < 1e-12


def test_build_pole_exit_code(golden_config, capsys):
    assert main(["build", golden_config, "--lambda", "1,1,0.5,0.25"]) == EXIT_POLE
    assert "pole" in capsys.readouterr().err


def test_build_bad_lambda_usage(golden_config):
    assert main(["build", golden_config, "--lambda", "foo,1,2,3"]) == EXIT_USAGE


def test_build_wrong_lambda_length(golden_config):
    assert main(["build", golden_config, "--lambda", "1,2"]) == EXIT_INVALID


# -- verify -----------------------------------------------------------------


def test_verify_datum_passes(golden_config, capsys):
    assert main(["verify", golden_config, "--samples", "5", "--seed", "3"]) == EXIT_OK
    out = capsys.readouterr().out
    head, _, csv = out.partition("\n}")
    obj = json.loads(head + "\n}")
    assert obj["passed"] is True
    assert obj["num_samples"] == 5
    assert obj["seed"] == 3
    assert "equation,max_normalized_residual" in csv
    assert "G0," in csv and "E6," in csv and "global," in csv


def test_verify_deterministic_output(golden_config, tmp_path):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    assert main(["verify", golden_config, "--seed", "7", "--out", str(a)]) == EXIT_OK
    assert main(["verify", golden_config, "--seed", "7", "--out", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()


def test_verify_env_seed(golden_config, tmp_path, monkeypatch):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    monkeypatch.setenv("DYNRMAT_SEED", "11")
    assert main(["verify", golden_config, "--out", str(a)]) == EXIT_OK
    monkeypatch.delenv("DYNRMAT_SEED")
    assert main(["verify", golden_config, "--seed", "11", "--out", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()


def test_verify_bad_env_seed(golden_config, monkeypatch):
    monkeypatch.setenv("DYNRMAT_SEED", "not-a-number")
    assert main(["verify", golden_config]) == EXIT_USAGE


def test_verify_nonpositive_samples(golden_config):
    assert main(["verify", golden_config, "--samples", "0"]) == EXIT_USAGE


def test_verify_matrix_with_shifts_passes(golden_R, tmp_path, capsys):
    rng = np.random.default_rng(0)
    base = sample_lambda(golden_R, rng, 2)
    cfg = _write(tmp_path, "m.json", _matrix_config(golden_R, base))
    assert main(["verify", cfg]) == EXIT_OK
    head, _, _ = capsys.readouterr().out.partition("\n}")
    assert json.loads(head + "\n}")["num_samples"] == 2


def test_verify_matrix_without_shifts_rejected(golden_R, tmp_path, capsys):
    rng = np.random.default_rng(1)
    base = sample_lambda(golden_R, rng, 3)
    cfg = _write(
        tmp_path, "m.json", _matrix_config(golden_R, base, include_shifts=False)
    )
    assert main(["verify", cfg]) == EXIT_INVALID
    assert "not verifiable" in capsys.readouterr().err


def test_verify_matrix_perturbed_fails_naming_equation(golden_R, tmp_path, capsys):
    rng = np.random.default_rng(2)
    base = sample_lambda(golden_R, rng, 2)
    slot = (composite_index(4, 1, 2), composite_index(4, 2, 1))
    cfg = _write(
        tmp_path,
        "m.json",
        _matrix_config(golden_R, base, perturb=(slot, 1e-2)),
    )
    assert main(["verify", cfg]) == EXIT_RESIDUAL
    err = capsys.readouterr().err
    assert "FAIL: worst equation" in err


def test_verify_missing_file(tmp_path):
    assert main(["verify", str(tmp_path / "nope.json")]) == EXIT_INVALID


def test_verify_bad_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert main(["verify", str(path)]) == EXIT_INVALID


def test_verify_bad_kind(tmp_path):
    assert main(["verify", _write(tmp_path, "k.json", {"kind": "other"})]) == EXIT_INVALID


# -- classify ---------------------------------------------------------------


def test_classify_datum_round_trip(golden_config, capsys):
    assert main(["classify", golden_config]) == EXIT_OK
    obj = json.loads(capsys.readouterr().out)
    assert obj["partition"]["n"] == 4
    assert obj["partition"]["blocks"] == [[{"free": [1, 2], "d_classes": [[3, 4]]}]]
    assert obj["reduced_incidence"] == [[1]]
    assert obj["params"]["kind"] == "datum"
    assert abs(obj["params"]["per_block"][0]["Sigma"]["re"] - 1) < 1e-8


def test_classify_matrix_structure_only(golden_R, tmp_path, capsys):
    rng = np.random.default_rng(3)
    base = sample_lambda(golden_R, rng, 5)
    cfg = _write(
        tmp_path, "m.json", _matrix_config(golden_R, base, include_shifts=False)
    )
    assert main(["classify", cfg]) == EXIT_OK
    obj = json.loads(capsys.readouterr().out)
    assert obj["partition"]["blocks"] == [[{"free": [1, 2], "d_classes": [[3, 4]]}]]
    assert "params" not in obj


def test_classify_not_in_family(tmp_path):
    # inconsistent vanishing pattern: a d-class whose members disagree on
    # their exchange entries toward a third index
    def delta(i, j, lam):
        if (i, j) in ((2, 3), (3, 2)):
            return 0j
        return 1.0 + 0j

    def d(i, j, lam):
        if (i, j) in ((1, 2), (2, 1)):
            return 0j
        return 2.0 + 0j

    R = DynamicalRMatrix(n=3, delta=delta, d=d)
    rng = np.random.default_rng(4)
    base = [rng.uniform(-1, 1, 3) + 1j * rng.uniform(-1, 1, 3) for _ in range(4)]
    cfg = _write(tmp_path, "m.json", _matrix_config(R, base, include_shifts=False))
    assert main(["classify", cfg]) == EXIT_NOT_IN_FAMILY


# -- hecke ------------------------------------------------------------------


def test_hecke_golden_line(golden_config, capsys):
    assert main(["hecke", golden_config]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.splitlines()[0] == "WeakHecke rho=1 kappa=1; not Hecke"
    obj = json.loads("\n".join(out.splitlines()[1:]))
    assert obj["kind"] == "WeakHecke"


def test_hecke_matrix_not_in_family(tmp_path):
    def delta(i, j, lam):
        if i == j:
            return complex(lam[0])
        return 1 + 0j

    def d(i, j, lam):
        return 2 + 0j

    R = DynamicalRMatrix(n=2, delta=delta, d=d)
    base = [
        np.array([0.5 + 0.1j, 0.3 - 0.2j]),
        np.array([1.5 - 0.4j, -0.7 + 0.3j]),
        np.array([-0.9 + 0.6j, 0.2 + 0.8j]),
    ]
    cfg = _write(tmp_path, "m.json", _matrix_config(R, base, include_shifts=False))
    assert main(["hecke", cfg]) == EXIT_NOT_IN_FAMILY


# -- transform --------------------------------------------------------------


def test_transform_requires_exactly_one_mode(golden_config):
    assert main(["transform", golden_config]) == EXIT_USAGE
    assert (
        main(
            [
                "transform", golden_config,
                "--contract", "1,2", "--scale", "0.5",
            ]
        )
        == EXIT_USAGE
    )


def test_transform_contract(golden_config, capsys):
    code = main(
        ["transform", golden_config, "--contract", "1,2", "--lambda", "1,2.5"]
    )
    assert code == EXIT_OK
    obj = json.loads(capsys.readouterr().out)
    assert obj["n"] == 2
    assert obj["residual"] < 1e-9
    entries = {
        (tuple(e["row"]), tuple(e["col"])): complex(e["re"], e["im"])
        for e in obj["point"]["entries"]
    }
    assert abs(entries[((1, 2), (2, 1))] - 1 / (1 - 2.5)) < 1e-12


def test_transform_compose(golden_config, capsys):
    code = main(
        [
            "transform", golden_config,
            "--compose", golden_config,
            "--g-ab", "2", "--g-ba", "0.5",
        ]
    )
    assert code == EXIT_OK
    obj = json.loads(capsys.readouterr().out)
    assert obj["n"] == 8
    assert obj["residual"] < 1e-9


def test_transform_two_form(golden_config, tmp_path, capsys):
    spec = {
        "type": "table",
        "values": {
            key: {"re": 2.0, "im": 0.0}
            for key in ("1,2", "1,3", "1,4", "2,3", "2,4")
        },
    }
    code = main(
        ["transform", golden_config, "--two-form", _write(tmp_path, "g.json", spec)]
    )
    assert code == EXIT_OK
    assert json.loads(capsys.readouterr().out)["residual"] < 1e-9


def test_transform_twist(golden_config, tmp_path, capsys):
    spec = {
        "potentials": {
            "1": {"lin": [0.2, 0.0, 0.0, 0.0]},
            "3": {"const": 1.0, "quad": [0.0, 0.0, 0.1, 0.0]},
        }
    }
    code = main(
        ["transform", golden_config, "--twist", _write(tmp_path, "b.json", spec)]
    )
    assert code == EXIT_OK
    assert json.loads(capsys.readouterr().out)["residual"] < 1e-9


def test_transform_limit(golden_config, capsys):
    code = main(["transform", golden_config, "--limit", "1e-1,1e-2,1e-3"])
    assert code == EXIT_OK
    obj = json.loads(capsys.readouterr().out)
    assert obj["converging"] is True
    assert len(obj["distances"]) == 3


def test_transform_scale(tmp_path, capsys):
    from dynrmat.params import BlockConstants, ClassificationParams, normalize_f
    from dynrmat.partition import DeltaClass, IndexPartition

    p = IndexPartition(
        n=2, blocks=((DeltaClass(free=(1,)), DeltaClass(free=(2,))),)
    )
    c = ClassificationParams(
        partition=p,
        per_block=(BlockConstants(1 + 0j, 2 + 0j),),
        signs={(1,): 1, (2,): 1},
        f_consts={(1,): 1 + 0j, (2,): 1 + 0j},
    )
    c, _ = normalize_f(c)
    cfg = _write(tmp_path, "d.json", params_to_json(c))
    assert main(["transform", cfg, "--scale", "0.1"]) == EXIT_OK
    obj = json.loads(capsys.readouterr().out)
    assert obj["eta"] == 0.1
    assert set(obj["index_map"]) == {"1", "2"}
    merged = obj["params"]["partition"]["blocks"]
    assert len(merged[0]) == 1  # classes merged into one


# -- top level --------------------------------------------------------------


def test_no_subcommand_usage():
    assert main([]) == EXIT_USAGE


def test_unknown_subcommand_usage():
    assert main(["frobnicate", "x.json"]) == EXIT_USAGE
