import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from koopspec import dynamics as dy, io, quadrature as qd
from koopspec.errors import ArgumentError

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 4)), elements=finite))
def test_csv_roundtrip_exact(tmp_path_factory, X):
    p = tmp_path_factory.mktemp("csv") / "x.csv"
    names = [f"c{i}" for i in range(X.shape[1])]
    io.write_csv(p, X, names)
    Y, got = io.read_csv(p)
    assert got == names
    np.testing.assert_array_equal(Y, X)


def test_csv_complex_columns(tmp_path):
    Z = np.array([[1 + 2j, 3 - 4j]])
    io.write_csv(tmp_path / "z.csv", Z, ["a", "b"])
    Y, names = io.read_csv(tmp_path / "z.csv")
    assert names == ["a_re", "a_im", "b_re", "b_im"]
    np.testing.assert_array_equal(io.join_complex(Y), Z)
    assert (tmp_path / "z.csv").read_bytes().startswith(b"a_re,a_im,b_re,b_im\n")


def test_csv_name_mismatch(tmp_path):
    with pytest.raises(ArgumentError):
        io.write_csv(tmp_path / "x.csv", np.zeros((2, 2)), ["only"])


@given(arrays(np.complex128, st.tuples(st.integers(1, 5), st.integers(1, 3)),
              elements=st.complex_numbers(allow_nan=False, allow_infinity=False)))
def test_binary_roundtrip_complex(tmp_path_factory, Z):
    p = tmp_path_factory.mktemp("bin") / "z.bin"
    io.write_binary(p, Z)
    np.testing.assert_array_equal(io.read_binary(p, complex_pairs=True), Z)


def test_binary_header(tmp_path):
    X = np.arange(6.0).reshape(2, 3)
    io.write_binary(tmp_path / "x.bin", X)
    raw = (tmp_path / "x.bin").read_bytes()
    assert raw[:4] == b"RDMD" and len(raw) == 32 + 6 * 8
    np.testing.assert_array_equal(io.read_binary(tmp_path / "x.bin"), X)


def test_binary_errors(tmp_path):
    io.write_binary(tmp_path / "x.bin", np.ones((2, 2)))
    raw = bytearray((tmp_path / "x.bin").read_bytes())
    (tmp_path / "bad.bin").write_bytes(b"XXXX" + bytes(raw[4:]))
    with pytest.raises(ArgumentError, match="magic"):
        io.read_binary(tmp_path / "bad.bin")
    (tmp_path / "short.bin").write_bytes(bytes(raw[:-8]))
    with pytest.raises(ArgumentError):
        io.read_binary(tmp_path / "short.bin")
    (tmp_path / "tiny.bin").write_bytes(b"RD")
    with pytest.raises(ArgumentError):
        io.read_binary(tmp_path / "tiny.bin")


@pytest.mark.parametrize("fmt", ["csv", "bin"])
def test_snapshot_and_rule_roundtrip(tmp_path, fmt):
    rule = qd.monte_carlo(20, [(0, 1), (-1, 1)], seed=4)
    snap = dy.generate_snapshots(dy.identity(2), rule.nodes, 2, rule.weights)
    io.save_snapshots(tmp_path / "s", snap, fmt)
    back = io.load_snapshots(tmp_path / f"s.{fmt}")
    np.testing.assert_array_equal(back.x0, snap.x0)
    np.testing.assert_array_equal(back.x1, snap.x1)
    np.testing.assert_array_equal(back.weights, snap.weights)
    io.save_rule(tmp_path / "r", rule, fmt)
    r2 = io.load_rule(tmp_path / f"r.{fmt}")
    np.testing.assert_array_equal(r2.nodes, rule.nodes)
    assert r2.kind == rule.kind and r2.seed == rule.seed


def test_trajectory_roundtrip(tmp_path):
    traj = dy.generate_trajectories(dy.tent_map(), np.array([[0.1], [0.37]]), 5)
    io.save_trajectories(tmp_path / "t", traj)
    back = io.load_trajectories(tmp_path / "t.csv")
    np.testing.assert_array_equal(back.states, traj.states)
    np.testing.assert_array_equal(back.weights, traj.weights)


def test_digest_and_json(tmp_path):
    a = np.arange(4.0)
    assert io.digest(a) == io.digest(a.copy())
    assert io.digest(a) != io.digest(a.astype(np.float32))
    io.write_json(tmp_path / "m.json", {"x": np.float64(1.5), "n": np.int64(3), "_hidden": 1,
                                        "z": 1 + 2j, "v": np.arange(2)})
    import json
    assert json.loads((tmp_path / "m.json").read_text()) == {"n": 3, "v": [0, 1], "x": 1.5, "z": [1.0, 2.0]}
