"""Matrix serialization: CSV with a header row, and the little-endian RDMD binary format.

Binary layout: 32-byte header {magic b"RDMD", version u32, rows u64, cols u64, 8 reserved
bytes} followed by rows*cols float64 values in row-major order. Complex matrices are
stored as interleaved real/imaginary column pairs.
"""
from __future__ import annotations

import csv
import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .errors import ArgumentError

MAGIC = b"RDMD"
VERSION = 1
_HEADER = struct.Struct("<4sIQQ8x")


def split_complex(X: np.ndarray, names=None):
    """Expand a complex matrix to paired re/im real columns (names get _re/_im suffixes)."""
    X = np.atleast_2d(np.asarray(X))
    if X.ndim != 2:
        raise ArgumentError("expected a matrix")
    if not np.iscomplexobj(X):
        return X.astype(float), list(names) if names is not None else None
    out = np.empty((X.shape[0], 2 * X.shape[1]))
    out[:, 0::2], out[:, 1::2] = X.real, X.imag
    if names is not None:
        names = [f"{n}_{s}" for n in names for s in ("re", "im")]
    return out, names


def join_complex(X: np.ndarray) -> np.ndarray:
    if X.shape[1] % 2:
        raise ArgumentError("odd number of columns cannot hold re/im pairs")
    return X[:, 0::2] + 1j * X[:, 1::2]


def write_binary(path, X) -> None:
    X, _ = split_complex(X)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, X.shape[0], X.shape[1]))
        fh.write(np.ascontiguousarray(X, dtype="<f8").tobytes())


def read_binary(path, complex_pairs: bool = False) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ArgumentError(f"{path}: truncated header")
    magic, version, rows, cols = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ArgumentError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise ArgumentError(f"{path}: unsupported version {version}")
    body = data[_HEADER.size:]
    if len(body) != 8 * rows * cols:
        raise ArgumentError(f"{path}: expected {rows}x{cols} values, found {len(body) // 8}")
    X = np.frombuffer(body, dtype="<f8").reshape(rows, cols).astype(float)
    return join_complex(X) if complex_pairs else X


def write_csv(path, X, names) -> None:
    """Write with repr-exact floats so a re-run reproduces the file byte for byte."""
    X, names = split_complex(X, names)
    if len(names) != X.shape[1]:
        raise ArgumentError(f"{len(names)} column names for {X.shape[1]} columns")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in X:
            w.writerow([repr(float(v)) for v in row])


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ArgumentError(f"{path}: empty file")
    names, body = rows[0], rows[1:]
    X = np.array([[float(v) for v in r] for r in body], dtype=float).reshape(len(body), len(names))
    return X, names


def digest(*arrays) -> str:
    h = hashlib.sha256()
    for a in arrays:
        a = np.ascontiguousarray(a)
        h.update(str(a.dtype).encode() + str(a.shape).encode())
        h.update(a.tobytes())
    return h.hexdigest()[:16]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items() if not str(k).startswith("_")}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def write_json(path, meta: dict) -> None:
    Path(path).write_text(json.dumps(_jsonable(meta), indent=2, sort_keys=True) + "\n")


def save_snapshots(prefix, snap, fmt: str = "csv") -> None:
    """x0, x1 and weights side by side: columns x0_*, x1_*, w."""
    d = snap.dim
    X = np.hstack([snap.x0, snap.x1, snap.weights[:, None]])
    names = [f"x0_{i}" for i in range(d)] + [f"x1_{i}" for i in range(d)] + ["w"]
    if fmt == "csv":
        write_csv(f"{prefix}.csv", X, names)
    elif fmt == "bin":
        write_binary(f"{prefix}.bin", X)
    else:
        raise ArgumentError(f"unknown format {fmt!r}")
    write_json(f"{prefix}.json", {"dim": d, "size": snap.size, "source": snap.source,
                                  "columns": names, "sha": digest(X)})


def load_snapshots(path):
    from .dynamics import SnapshotSet
    p = str(path)
    X = read_csv(p)[0] if p.endswith(".csv") else read_binary(p)
    if (X.shape[1] - 1) % 2:
        raise ArgumentError("snapshot file must have 2d + 1 columns")
    d = (X.shape[1] - 1) // 2
    return SnapshotSet(X[:, :d], X[:, d:2 * d], X[:, -1], f"file:{Path(p).name}")


def save_trajectories(prefix, traj, fmt: str = "csv") -> None:
    """One row per state: trajectory index, step index, coordinates, trajectory weight."""
    M1, M2, d = traj.states.shape
    t_idx, s_idx = np.meshgrid(np.arange(M1), np.arange(M2), indexing="ij")
    X = np.column_stack([t_idx.ravel(), s_idx.ravel(), traj.states.reshape(-1, d),
                         np.repeat(traj.weights, M2)])
    names = ["traj", "step"] + [f"x_{i}" for i in range(d)] + ["w"]
    if fmt == "csv":
        write_csv(f"{prefix}.csv", X, names)
    elif fmt == "bin":
        write_binary(f"{prefix}.bin", X)
    else:
        raise ArgumentError(f"unknown format {fmt!r}")
    write_json(f"{prefix}.json", {"M1": M1, "M2": M2, "dim": d, "source": traj.source, "sha": digest(X)})


def load_trajectories(path):
    from .dynamics import TrajectorySet
    p = str(path)
    X = read_csv(p)[0] if p.endswith(".csv") else read_binary(p)
    M1 = int(X[:, 0].max()) + 1
    M2 = int(X[:, 1].max()) + 1
    if M1 * M2 != X.shape[0]:
        raise ArgumentError("trajectory file is not a complete M1 x M2 table")
    d = X.shape[1] - 3
    order = np.lexsort((X[:, 1], X[:, 0]))
    X = X[order]
    return TrajectorySet(X[:, 2:2 + d].reshape(M1, M2, d), X[::M2, -1], f"file:{Path(p).name}")


def save_rule(prefix, rule, fmt: str = "csv") -> None:
    X = np.hstack([rule.nodes, rule.weights[:, None]])
    names = [f"x_{i}" for i in range(rule.dim)] + ["w"]
    if fmt == "csv":
        write_csv(f"{prefix}.csv", X, names)
    elif fmt == "bin":
        write_binary(f"{prefix}.bin", X)
    else:
        raise ArgumentError(f"unknown format {fmt!r}")
    write_json(f"{prefix}.json", {"kind": rule.kind, "seed": rule.seed, "size": rule.size,
                                  "dim": rule.dim, "meta": rule.meta, "sha": digest(X)})


def load_rule(path):
    from .quadrature import QuadratureRule
    p = Path(path)
    X = read_csv(p)[0] if p.suffix == ".csv" else read_binary(p)
    side = p.with_suffix(".json")
    info = json.loads(side.read_text()) if side.is_file() else {"kind": "external", "seed": None, "meta": {}}
    return QuadratureRule(X[:, :-1], X[:, -1], info["kind"], info.get("seed"), info.get("meta", {}))
