import json

import numpy as np
import pytest

from koopspec import cli, dynamics as dy, galerkin as ga, io, measure_rational as mr


def run(*args):
    return cli.main([str(a) for a in args])


def test_systems_list(capsys):
    assert run("systems-list") == 0
    first = capsys.readouterr().out
    for name in ("tent", "gauss", "pendulum", "double_pendulum", "lorenz", "shift", "cmv"):
        assert name in first
    run("systems-list")
    assert capsys.readouterr().out == first


@pytest.mark.parametrize("args, code", [
    (["measure", "--system", "nosuch"], 2),
    (["measure", "--system", "cmv", "--theta", "0,1"], 2),
    (["measure", "--system", "cmv", "--method", "bogus"], 2),
    (["eigs", "--system", "gauss", "--quad", "weird:10"], 2),
    (["measure", "--system", "cmv", "--dict", "canonical:50", "--order", "9"], 4),
    (["eigs", "--system", "gauss", "--param", "novalue"], 2),
])
def test_exit_codes(tmp_path, capsys, args, code):
    assert run(*args, "--out", tmp_path) == code
    assert "koopspec" in capsys.readouterr().err


def test_cmv_measure_matches_library(tmp_path):
    assert run("measure", "--system", "cmv", "--dict", "canonical:300", "--theta", "0.2,0.2,1",
               "--certificate", "--out", tmp_path) == 0
    X, names = io.read_csv(tmp_path / "measure.csv")
    assert names == ["theta", "nu", "certificate", "imag_max"]
    system = dy.make_system("cmv", n_store=max(512, 2 * 100 + 16))
    mats = ga.assemble_exact(system, 300, sparse=True)
    a = np.zeros(300, dtype=complex)
    a[0] = 1.0
    k = mr.kernel_coeffs(2, 0.1)
    assert X[0, 1] == mr.measure_eval(mats, a, k, [0.2]).values[0]
    assert X[0, 2] == mr.total_bound(mats, a, k, 0.2)
    meta = json.loads((tmp_path / "meta.json").read_text())
    assert meta["config"]["system"] == "cmv" and meta["N_K"] == 300


def test_identity_pseudospectrum(tmp_path):
    assert run("pseudospec", "--system", "identity", "--grid=-1,2,-1,1,7", "--epsilon", "0.5",
               "--out", tmp_path) == 0
    X, names = io.read_csv(tmp_path / "grid.csv")
    assert names == ["re", "im", "tau"]
    z = X[:, 0] + 1j * X[:, 1]
    np.testing.assert_allclose(X[:, 2], np.abs(1 - z), atol=1e-7)
    acc, _ = io.read_csv(tmp_path / "accepted.csv")
    assert np.all(np.abs(1 - (acc[:, 0] + 1j * acc[:, 1])) <= 0.5 + 1e-9)


def test_gauss_eigs_and_rerun(tmp_path):
    d1, d2 = tmp_path / "a", tmp_path / "b"
    assert run("eigs", "--system", "gauss", "--quad", "gauss:100", "--dict", "legendre:20", "--out", d1) == 0
    X, _ = io.read_csv(d1 / "eigs.csv")
    best = np.argmin(np.abs(X[:, 0] + 1j * X[:, 1] - 1))
    assert abs(X[best, 0] - 1) < 1e-10 and X[best, 2] < 1e-8
    assert run("eigs", "--config", d1 / "meta.json", "--out", d2) == 0
    assert (d1 / "eigs.csv").read_bytes() == (d2 / "eigs.csv").read_bytes()


def test_threads_byte_identical(tmp_path):
    outs = []
    for t in (1, 3):
        d = tmp_path / f"t{t}"
        assert run("pseudospec", "--system", "gauss", "--quad", "gauss:100", "--dict", "legendre:15",
                   "--grid=-1,1,-1,1,9", "--threads", t, "--out", d) == 0
        outs.append((d / "grid.csv").read_bytes())
    assert outs[0] == outs[1]


def test_toml_config_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text('system = "gauss"\nquad = "gauss:80"\ndict = "legendre:10"\nepsilon = 0.5\n')
    assert run("eigs", "--config", cfg, "--dict", "legendre:12", "--out", tmp_path / "o") == 0
    meta = json.loads((tmp_path / "o" / "meta.json").read_text())
    assert meta["config"]["quad"] == "gauss:80"
    assert meta["N_K"] == 12
    assert meta["epsilon"] == 0.5
    bad = tmp_path / "bad.toml"
    bad.write_text('system = "gauss"\nunknown_key = 1\n')
    assert run("eigs", "--config", bad, "--out", tmp_path / "p") == 2


def test_tent_filter_measure(tmp_path):
    assert run("measure", "--system", "tent", "--N", 40, "--theta=-3,3,13", "--out", tmp_path) == 0
    X, names = io.read_csv(tmp_path / "measure.csv")
    assert names == ["theta", "nu", "imag_max"] and X.shape == (13, 3)
    assert np.all(np.isfinite(X[:, 1]))
    meta = json.loads((tmp_path / "meta.json").read_text())
    assert meta["N"] == 40 and meta["filter"] == "bump"


def test_kernel_dmd_smoke(tmp_path):
    cfg = tmp_path / "k.toml"
    cfg.write_text('system = "lorenz"\nquad = "mc:700"\nN = 40\nm1_prime = 200\nepsilon = 0.05\n')
    assert run("kernel-dmd", "--config", cfg, "--out", tmp_path / "o") == 0
    X, _ = io.read_csv(tmp_path / "o" / "eigs.csv")
    lam = X[:, 0] + 1j * X[:, 1]
    j = np.argmin(np.abs(lam - 1))
    assert abs(lam[j] - 1) < 1e-6 and X[j, 2] < 0.05
    from koopspec import kernelized as kz
    ld = kz.load_learned(tmp_path / "o" / "learned")
    assert ld.size == 40 and ld.anchors.shape == (200, 3)


def test_double_pendulum_hermite_spreads_wider(tmp_path):
    spread = {}
    for obs in ("dp_fourier1", "dp_hermite3"):
        assert run("measure", "--system", "double_pendulum", "--observable", obs,
                   "--theta=-3.14159,3.14159,121", "--out", tmp_path / obs) == 0
        X, _ = io.read_csv(tmp_path / obs / "measure.csv")
        th, nu = X[:, 0], X[:, 1]
        mass = np.trapezoid(nu, th)
        assert abs(mass - 1) < 1e-3
        spread[obs] = np.trapezoid(np.abs(th) * nu, th) / mass
    assert spread["dp_hermite3"] > 1.2 * spread["dp_fourier1"]


def test_cmv_pseudospec_annulus(tmp_path):
    assert run("pseudospec", "--system", "cmv", "--dict", "canonical:100", "--epsilon", "0.25",
               "--grid=-1.5,1.5,-1.5,1.5,25", "--out", tmp_path) == 0
    acc, _ = io.read_csv(tmp_path / "accepted.csv")
    r = np.hypot(acc[:, 0], acc[:, 1])
    assert len(r) > 0 and np.all(np.abs(r - 1) <= 0.25 + 1e-8)


def test_gauss_pseudospec_nested(tmp_path):
    assert run("pseudospec", "--system", "gauss", "--epsilon", "0.001,0.01,0.1,0.3",
               "--grid=-1.5,1.5,-1.5,1.5,21", "--out", tmp_path) == 0
    acc, _ = io.read_csv(tmp_path / "accepted.csv")
    sets = {e: {(x, y) for x, y, ee in acc if ee == e} for e in (0.001, 0.01, 0.1, 0.3)}
    assert sets[0.001] <= sets[0.01] <= sets[0.1] <= sets[0.3]
    assert len(sets[0.3]) > len(sets[0.01])


def test_lorenz_eigs_table(tmp_path):
    assert run("eigs", "--system", "lorenz", "--quad", "mc:800", "--dict", "hyperbolic:4", "--out", tmp_path) == 0
    acc, names = io.read_csv(tmp_path / "accepted.csv")
    assert names == ["re", "im", "res"]
    assert np.all(acc[:, 2] <= 0.01)


def test_tent_measure_has_atom_spike(tmp_path):
    assert run("measure", "--system", "tent", "--N", 100, "--theta=-3.14159,3.14159,201", "--out", tmp_path) == 0
    X, _ = io.read_csv(tmp_path / "measure.csv")
    nu = X[:, 1]
    assert np.argmax(nu) == 100  # theta = 0
    assert nu[100] > 5 * np.median(nu)
