import json
import subprocess
import sys

import numpy as np
import pytest

from coupled_extremal.certifier import MarginalPair, check_extremal, validate_membership
from coupled_extremal.cli import (
    certificate,
    decode_matrix,
    encode_matrix,
    main,
    read_state,
    state_document,
    verify_certificate,
)
from coupled_extremal.numcore import DimensionPair, rank_eps
from coupled_extremal.sampler import random_density
from oracles import bell_phi_plus, ket_projector

HALF = MarginalPair.maximally_mixed(2, 2)


def write_state(path, rho, marginals=None, dims=(2, 2)):
    if marginals is None:
        doc = {"schema": "v1", "d1": dims[0], "d2": dims[1], "rho": encode_matrix(rho)}
    else:
        doc = state_document(rho, marginals)
    path.write_text(json.dumps(doc))
    return path


def load(path):
    return json.loads(path.read_text())


@pytest.fixture
def bell_file(tmp_path):
    return write_state(tmp_path / "bell.json", bell_phi_plus(), HALF)


@pytest.fixture
def mixed_file(tmp_path):
    return write_state(tmp_path / "maximally_mixed.json", np.eye(4) / 4, HALF)


class TestCheck:
    def test_bell(self, bell_file, tmp_path):
        out = tmp_path / "cert.json"
        assert main(["check", str(bell_file), "--output", str(out)]) == 0
        cert = load(out)
        assert (cert["verdict"], cert["k"], cert["dim_d"]) == ("extremal", 1, 1)
        assert cert["rank_bound"] == 2

    def test_maximally_mixed(self, mixed_file, tmp_path):
        out = tmp_path / "cert.json"
        assert main(["check", str(mixed_file), "--output", str(out)]) == 0
        cert = load(out)
        assert cert["verdict"] == "not_extremal"
        assert cert["route"] == "full_rank"
        w = cert["witness"]
        plus = decode_matrix(w["rho_plus"], (4, 4), "rho_plus")
        minus = decode_matrix(w["rho_minus"], (4, 4), "rho_minus")
        assert validate_membership(plus, HALF) is None
        assert validate_membership(minus, HALF) is None
        np.testing.assert_allclose((plus + minus) / 2, np.eye(4) / 4, atol=1e-15)

    def test_truncated_file(self, bell_file, capsys):
        bell_file.write_text(bell_file.read_text()[:50])
        assert main(["check", str(bell_file)]) == 2
        assert "parse error" in capsys.readouterr().err

    def test_bad_shape(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"schema": "v1", "d1": 2, "d2": 2, "rho": [[[1, 0]]]}))
        assert main(["check", str(path)]) == 2
        assert "expected shape" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert main(["check", str(tmp_path / "nope.json")]) == 2

    def test_assert_extremal(self, bell_file, mixed_file, tmp_path):
        assert main(["check", str(bell_file), "--assert-extremal", "--output", str(tmp_path / "a")]) == 0
        assert main(["check", str(mixed_file), "--assert-extremal", "--output", str(tmp_path / "b")]) == 1

    def test_not_in_c_is_still_a_verdict(self, tmp_path):
        path = write_state(tmp_path / "prod.json", ket_projector(1, 0, 0, 0), HALF)
        out = tmp_path / "cert.json"
        assert main(["check", str(path), "--output", str(out)]) == 0
        cert = load(out)
        assert cert["verdict"] == "not_in_c"
        assert cert["violation"]["kind"] == "marginal-1 mismatch"
        assert main(["check", str(path), "--verify-certificate", str(out)]) == 0

    def test_marginals_default_to_own_partial_traces(self, tmp_path, rng):
        rho = np.diag([0.5, 0.2, 0.2, 0.1]).astype(complex)
        path = write_state(tmp_path / "s.json", rho)
        out = tmp_path / "cert.json"
        assert main(["check", str(path), "--output", str(out)]) == 0
        cert = load(out)
        np.testing.assert_allclose(decode_matrix(cert["rho1"], (2, 2), "rho1"), np.diag([0.7, 0.3]))

    def test_marginals_flag(self, tmp_path):
        path = write_state(tmp_path / "s.json", ket_projector(1, 0, 0, 0))
        mfile = tmp_path / "m.json"
        mfile.write_text(json.dumps({"schema": "v1", "rho1": encode_matrix(np.eye(2) / 2), "rho2": encode_matrix(np.eye(2) / 2)}))
        out = tmp_path / "cert.json"
        assert main(["check", str(path), "--marginals", str(mfile), "--output", str(out)]) == 0
        assert load(out)["verdict"] == "not_in_c"

    def test_batch_with_jobs(self, bell_file, mixed_file, tmp_path):
        outdir = tmp_path / "certs"
        assert main(["check", str(bell_file), str(mixed_file), "--jobs", "2", "--output", str(outdir)]) == 0
        assert load(outdir / "bell.cert.json")["verdict"] == "extremal"
        assert load(outdir / "maximally_mixed.cert.json")["verdict"] == "not_extremal"


class TestVerifyCertificate:
    def test_round_trip(self, mixed_file, bell_file, tmp_path):
        for path in (bell_file, mixed_file):
            out = tmp_path / f"{path.stem}.cert"
            assert main(["check", str(path), "--output", str(out)]) == 0
            assert main(["check", str(path), "--verify-certificate", str(out)]) == 0

    def test_tampered_witness_fails(self, mixed_file, tmp_path):
        out = tmp_path / "cert.json"
        main(["check", str(mixed_file), "--output", str(out)])
        cert = load(out)
        cert["witness"]["rho_plus"][0][0][0] += 1e-3
        out.write_text(json.dumps(cert))
        assert main(["check", str(mixed_file), "--verify-certificate", str(out)]) == 1

    def test_wrong_verdict_fails(self, bell_file, mixed_file, tmp_path):
        out = tmp_path / "cert.json"
        main(["check", str(bell_file), "--output", str(out)])
        # the Bell certificate claims extremality; replayed against I/4 it must fail
        assert main(["check", str(mixed_file), "--verify-certificate", str(out)]) == 1

    def test_in_process_api(self):
        rho = bell_phi_plus()
        cert = json.loads(json.dumps(certificate(check_extremal(rho, HALF), HALF, 1e-8, 1e-9)))
        assert verify_certificate(cert, rho) == []
        cert["dim_d"] = 2
        assert any("dim_d" in p for p in verify_certificate(cert, rho))


class TestSample:
    def test_three_members(self, tmp_path):
        out = tmp_path / "samples"
        assert main(["sample", "--d1", "2", "--d2", "2", "--seed", "7", "--count", "3", "--output", str(out)]) == 0
        files = sorted(out.glob("*.json"))
        assert len(files) == 3
        for f in files:
            rho, dims, m = read_state(f)
            assert validate_membership(rho, HALF) is None
            assert main(["check", str(f), "--output", str(tmp_path / "c.json")]) == 0
            assert load(tmp_path / "c.json")["verdict"] == "not_extremal"

    def test_count_zero(self, tmp_path):
        out = tmp_path / "none"
        assert main(["sample", "--count", "0", "--output", str(out)]) == 0
        assert not out.exists() or not any(out.iterdir())

    def test_custom_marginals(self, tmp_path, rng):
        m = MarginalPair(random_density(2, rng), random_density(3, rng))
        mfile = tmp_path / "m.json"
        mfile.write_text(json.dumps({"schema": "v1", "rho1": encode_matrix(m.rho1), "rho2": encode_matrix(m.rho2)}))
        out = tmp_path / "s"
        assert main(["sample", "--marginals", str(mfile), "--count", "4", "--output", str(out)]) == 0
        for f in out.glob("*.json"):
            rho, dims, _ = read_state(f)
            assert dims == DimensionPair(2, 3)
            assert validate_membership(rho, m, 1e-8) is None

    def test_singular_marginals(self, tmp_path):
        mfile = tmp_path / "m.json"
        mfile.write_text(json.dumps({"schema": "v1", "rho1": encode_matrix(np.diag([1.0, 0])), "rho2": encode_matrix(np.eye(2) / 2)}))
        assert main(["sample", "--marginals", str(mfile), "--output", str(tmp_path / "s")]) == 2


class TestExtremize:
    def test_maximally_mixed(self, mixed_file, tmp_path):
        out = tmp_path / "ext.json"
        assert main(["extremize", str(mixed_file), "--seed", "3", "--output", str(out)]) == 0
        doc = load(out)
        assert doc["verdict"] == "extremal" and doc["k"] == 1
        assert len(doc["trace"]["steps"]) <= 3
        # the result document doubles as a state file and as its own certificate
        assert main(["check", str(out), "--verify-certificate", str(out)]) == 0

    def test_already_extremal(self, bell_file, tmp_path):
        out = tmp_path / "ext.json"
        assert main(["extremize", str(bell_file), "--output", str(out)]) == 0
        assert load(out)["trace"]["steps"] == []

    def test_qutrits(self, tmp_path):
        m = MarginalPair.maximally_mixed(3, 3)
        path = write_state(tmp_path / "mm9.json", np.eye(9) / 9, m)
        out = tmp_path / "ext.json"
        assert main(["extremize", str(path), "--output", str(out)]) == 0
        doc = load(out)
        rho, _, _ = read_state(out)
        assert doc["k"] <= 4 and rank_eps(rho) == doc["k"]

    def test_not_in_c_exit_3(self, tmp_path):
        path = write_state(tmp_path / "prod.json", ket_projector(1, 0, 0, 0), HALF)
        assert main(["extremize", str(path)]) == 3


def test_state_file_round_trip_is_exact(tmp_path, rng):
    m = MarginalPair(random_density(2, rng), random_density(3, rng))
    rho = np.kron(m.rho1, m.rho2)
    path = write_state(tmp_path / "s.json", rho, m)
    back, dims, m_back = read_state(path)
    assert np.array_equal(back, rho)
    assert np.array_equal(m_back.rho1, m.rho1) and np.array_equal(m_back.rho2, m.rho2)


def test_demo_subprocess():
    proc = subprocess.run([sys.executable, "-m", "coupled_extremal", "demo"], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "Extremal" in proc.stdout and "maximally entangled: True" in proc.stdout


def test_bad_arguments_exit_2():
    proc = subprocess.run([sys.executable, "-m", "coupled_extremal", "check"], capture_output=True, text=True)
    assert proc.returncode == 2
