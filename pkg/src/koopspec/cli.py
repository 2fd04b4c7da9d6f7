"""Command-line front end: ``koopspec <subcommand> [--config run.toml] [flags]``.

Every run writes CSV tables plus a meta.json holding the fully resolved
configuration; ``--config meta.json`` re-runs it.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import dictionary as dc
from . import dynamics as dy
from . import galerkin as ga
from . import io
from . import kernelized as kz
from . import measure_filter as mf
from . import measure_rational as mr
from . import observables as ob
from . import quadrature as qd
from .errors import ArgumentError, NumericError, ResourceError

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_RESOURCE = 0, 2, 3, 4
PI = float(np.pi)

# Per-system defaults. Domains list one entry per coordinate: (a, b) for a bounded
# or truncated axis, (a, b, "periodic") for a periodic one.
PRESETS = {
    "tent": {"domain": [(0.0, 1.0)], "quad": "dyadic:16", "dict": "legendre:40",
             "observable": "tent_g", "method": "filter", "filter": "bump", "N": 100, "noise": 1e-14},
    "gauss": {"domain": [(-1.0, 0.0)], "quad": "gauss:200", "dict": "legendre:40", "observable": "x1"},
    "pendulum": {"params": {"dt": 1.0}, "domain": [(-PI, PI, "periodic"), (-8.0, 8.0)],
                 "quad": "trapezoid:100", "dict": "hyperbolic:20", "observable": "pendulum_g",
                 "axes": ["fourier_periodic", "hermite_function"]},
    "double_pendulum": {"domain": [(-PI, PI, "periodic"), (-PI, PI, "periodic"), (-6.0, 6.0), (-6.0, 6.0)],
                        "quad": "trapezoid:10", "dict": "hyperbolic:6", "observable": "dp_fourier1",
                        "axes": ["fourier_periodic", "fourier_periodic", "hermite_function", "hermite_function"],
                        "method": "rational", "order": 6, "epsilon": 0.1},
    "lorenz": {"domain": [(-25.0, 25.0), (-30.0, 30.0), (0.0, 55.0)], "quad": "mc:2500",
               "dict": "hyperbolic:6", "observable": "x1",
               "axes": ["legendre_transplanted"] * 3, "epsilon": 0.01, "N": 100, "m1_prime": 500},
    "shift": {"domain": [(-np.inf, np.inf)], "quad": "lattice:20000", "dict": "canonical:201",
              "observable": "shift_sinc", "method": "filter", "filter": "four", "N": 100},
    "cmv": {"quad": "exact", "dict": "canonical:2000", "observable": "e1", "method": "rational",
            "order": 2, "epsilon": 0.1},
    "identity": {"domain": [(-1.0, 1.0)], "quad": "gauss:50", "dict": "legendre:10", "observable": "x1"},
}


@dataclass
class RunConfig:
    subcommand: str
    system: str
    params: dict = field(default_factory=dict)
    quad: str = "gauss:200"
    dict: str = "legendre:20"
    method: str = "rational"
    epsilon: list = field(default_factory=lambda: [0.1])
    order: int = 2
    N: int = 100
    filter: str = "bump"
    observable: str = "x1"
    grid: str = "-1.5,1.5,-1.5,1.5,60"
    theta: str = "-3.141592653589793,3.141592653589793,201"
    noise: float = 0.0
    certificate: bool = False
    m1_prime: int = 500
    domain: list | None = None
    axes: list | None = None
    out: str = "out"
    seed: int = 0
    threads: int = 1

    def to_dict(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------------------
# parsing helpers

def _spec(s: str) -> tuple[str, list[str]]:
    kind, _, rest = str(s).partition(":")
    return kind.strip(), [p for p in rest.split(",") if p.strip()] if rest else []


def _floats(s: str, n: int, what: str) -> list[float]:
    try:
        v = [float(t) for t in str(s).split(",")]
    except ValueError:
        raise ArgumentError(f"--{what}: expected {n} comma-separated numbers, got {s!r}") from None
    if len(v) != n:
        raise ArgumentError(f"--{what}: expected {n} values, got {len(v)}")
    return v


def _param_value(v: str):
    try:
        return json.loads(v)
    except json.JSONDecodeError:
        return v


def _load_config_file(path: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ArgumentError(f"config file {path!r} not found")
    if p.suffix == ".json":
        data = json.loads(p.read_text())
        return data.get("config", data)
    try:
        return tomllib.loads(p.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ArgumentError(f"{path}: {exc}") from exc


def resolve_config(ns: argparse.Namespace) -> RunConfig:
    """Preset for the system, then the config file, then explicit flags."""
    filed = _load_config_file(ns.config) if ns.config else {}
    system = ns.system or filed.get("system")
    if system is None:
        raise ArgumentError("--system is required")
    if system not in dy.SYSTEMS:
        raise ArgumentError(f"unknown system {system!r}; known: {', '.join(sorted(dy.SYSTEMS))}")
    merged = {k: v for k, v in PRESETS.get(system, {}).items()}
    merged["params"] = dict(merged.get("params", {}))
    for k, v in filed.items():
        if k == "params":
            merged["params"].update(v)
        elif k != "subcommand":
            merged[k] = v
    flags = {"quad": ns.quad, "dict": ns.dict, "method": ns.method, "epsilon": ns.epsilon,
             "order": ns.order, "N": ns.N, "grid": ns.grid, "out": ns.out, "seed": ns.seed,
             "threads": ns.threads, "filter": ns.filter, "observable": ns.observable,
             "theta": ns.theta, "noise": ns.noise}
    merged.update({k: v for k, v in flags.items() if v is not None})
    if ns.certificate:
        merged["certificate"] = True
    for item in ns.param or []:
        key, sep, val = item.partition("=")
        if not sep:
            raise ArgumentError(f"--param expects key=value, got {item!r}")
        merged["params"][key] = _param_value(val)
    eps = merged.get("epsilon", [0.1])
    if isinstance(eps, str):
        eps = [float(t) for t in eps.split(",")]
    elif not isinstance(eps, (list, tuple)):
        eps = [float(eps)]
    merged["epsilon"] = [float(e) for e in eps]
    if "domain" in merged and merged["domain"] is not None:
        merged["domain"] = [list(d) for d in merged["domain"]]
    known = set(RunConfig.__dataclass_fields__)
    unknown = set(merged) - known - {"system"}
    if unknown:
        raise ArgumentError(f"unknown configuration keys: {', '.join(sorted(unknown))}")
    cfg = RunConfig(subcommand=ns.cmd, system=system, **{k: v for k, v in merged.items() if k != "system"})
    if cfg.threads < 1:
        raise ArgumentError("--threads must be >= 1")
    if cfg.N < 1:
        raise ArgumentError("--N must be >= 1")
    return cfg


# ---------------------------------------------------------------------------
# building blocks

def build_system(cfg: RunConfig):
    params = dict(cfg.params)
    if cfg.system == "cmv":
        params.setdefault("n_store", max(512, 2 * cfg.N + 16))
    return dy.make_system(cfg.system, **params)


def _axis_rule(kind: str, M: int, dom) -> qd.QuadratureRule:
    a, b = float(dom[0]), float(dom[1])
    periodic = len(dom) > 2 and dom[2] == "periodic"
    if not (np.isfinite(a) and np.isfinite(b)):
        raise ArgumentError("tensor rules need a bounded (truncated) domain; set 'domain' in the config")
    if kind == "gauss":
        return qd.gauss_legendre(M, (a, b))
    if kind == "trapezoid":
        return qd.trapezoid(M, (a, b), periodic=periodic)
    if kind == "riemann":
        return qd.riemann(M, (a, b))
    raise ArgumentError(f"unknown quadrature kind {kind!r}")


def build_rule(cfg: RunConfig, system) -> qd.QuadratureRule:
    kind, args = _spec(cfg.quad)
    if not args:
        raise ArgumentError(f"--quad {cfg.quad!r}: expected kind:size")
    size = int(args[0])
    dom = cfg.domain
    if kind in ("gauss", "trapezoid", "riemann"):
        return qd.tensor_product([_axis_rule(kind, size, d) for d in dom])
    if kind == "mc":
        return qd.monte_carlo(size, [d[:2] for d in dom], seed=cfg.seed)
    if kind == "dyadic":
        if len(dom) != 1:
            raise ArgumentError("dyadic rules are one-dimensional")
        return qd.dyadic(size, tuple(dom[0][:2]), jitter_seed=cfg.seed)
    if kind == "lattice":
        k = np.arange(-size, size + 1, dtype=float)
        return qd.QuadratureRule(k, np.ones(k.shape[0]), "lattice", meta={"K": size})
    raise ArgumentError(f"unknown quadrature kind {kind!r}")


def build_dictionary(cfg: RunConfig):
    kind, args = _spec(cfg.dict)
    if not args:
        raise ArgumentError(f"--dict {cfg.dict!r}: expected kind:size")
    n = int(args[0])
    if kind == "canonical":
        return dc.CanonicalDictionary(n, -(n // 2) if cfg.system == "shift" else 0)
    dom = cfg.domain or [(-1.0, 1.0)]
    one_d = {"legendre": "legendre_transplanted", "fourier": "fourier_periodic",
             "hermite": "hermite_function", "hermite_poly": "hermite_polynomial"}
    if kind in one_d:
        if len(dom) != 1:
            raise ArgumentError(f"--dict {kind} is one-dimensional; use hyperbolic:order")
        return dc.TensorDictionary.univariate(dc.Axis(one_d[kind], tuple(dom[0][:2])), n)
    if kind == "hyperbolic":
        kinds = cfg.axes or ["legendre_transplanted"] * len(dom)
        axes = [dc.Axis(k, tuple(d[:2])) for k, d in zip(kinds, dom)]
        return dc.TensorDictionary.hyperbolic(axes, n)
    raise ArgumentError(f"unknown dictionary kind {kind!r}")


def _trajectory_snapshots(cfg: RunConfig, system, M: int) -> dy.SnapshotSet:
    """M consecutive pairs along one trajectory after a burn-in, weights 1/M."""
    rng = np.random.default_rng(cfg.seed)
    x = rng.standard_normal((1, system.dim))
    for _ in range(1000):
        x = system.step(x)
    traj = dy.generate_trajectories(system, x, M + 1)
    s = traj.states[0]
    return dy.SnapshotSet(s[:-1], s[1:], np.full(M, 1.0 / M), f"{system.name}:trajectory")


def build_matrices(cfg: RunConfig, system, dictionary):
    """Galerkin matrices, plus the rule (or None) and snapshot set (or None) they came from."""
    if cfg.quad == "exact" or isinstance(system, dy.SequenceSystem):
        if not isinstance(dictionary, dc.CanonicalDictionary):
            raise ArgumentError("exact assembly needs --dict canonical:N")
        return ga.assemble_exact(system, dictionary.size, sparse=True), None, None
    kind, args = _spec(cfg.quad)
    if kind == "trajectory":
        snap = _trajectory_snapshots(cfg, system, int(args[0]))
        return ga.assemble(snap, dictionary, threads=cfg.threads), None, snap
    rule = build_rule(cfg, system)
    snap = dy.generate_snapshots(system, rule.nodes, 2, rule.weights)
    return ga.assemble(snap, dictionary, threads=cfg.threads), rule, snap


def _theta(cfg: RunConfig) -> np.ndarray:
    lo, hi, n = _floats(cfg.theta, 3, "theta")
    if int(n) < 1:
        raise ArgumentError("--theta needs at least one point")
    return np.linspace(lo, hi, int(n))


def _grid(cfg: RunConfig) -> np.ndarray:
    x0, x1, y0, y1, n = _floats(cfg.grid, 5, "grid")
    if int(n) < 1:
        raise ArgumentError("--grid needs a positive resolution")
    return ga.rect_grid((x0, x1), (y0, y1), int(n))


def _write_meta(out: Path, cfg: RunConfig, extra: dict) -> None:
    io.write_json(out / "meta.json", {"config": cfg.to_dict(), "version": __version__, **extra})


# ---------------------------------------------------------------------------
# subcommands

def cmd_systems_list(_ns=None) -> str:
    lines = []
    for name in sorted(dy.SYSTEMS):
        params = ", ".join(f"{k}={v}" for k, v in dy.SYSTEMS[name]["params"].items())
        lines.append(f"{name}({params})")
    return "\n".join(lines)


def _autocorrelations(cfg: RunConfig, system) -> mf.AutocorrelationSeries:
    if isinstance(system, dy.SequenceSystem):
        if cfg.observable != "e1":
            raise ArgumentError("sequence systems support the observable e1 only")
        x = np.zeros((1, system.n_store), dtype=complex)
        x[0, 0] = 1.0
        a = np.empty(cfg.N + 1, dtype=complex)
        for n in range(cfg.N + 1):
            a[n] = np.conj(x[0, 0])
            x = system.step(x)
        return mf.AutocorrelationSeries(a / (2 * np.pi), "exact", "e1")
    g = ob.get_observable(cfg.observable)
    kind, args = _spec(cfg.quad)
    if kind == "trajectory":
        snap = _trajectory_snapshots(cfg, system, max(int(args[0]), cfg.N + 1))
        return mf.autocorr_ergodic(np.vstack([snap.x0, snap.x1[-1:]]), g, cfg.N, cfg.observable)
    rule = build_rule(cfg, system)
    return mf.autocorr_quadrature_stream(system, rule, g, cfg.N, cfg.noise, cfg.seed, cfg.observable)


def _coefficients(cfg: RunConfig, dictionary, rule, snap):
    """Normalized projection coefficients of the observable; returns (a, norm before scaling)."""
    if cfg.observable == "e1":
        a = np.zeros(dictionary.size, dtype=complex)
        a[0] = 1.0
        return a, 1.0
    g = ob.get_observable(cfg.observable)
    if rule is None:
        rule = qd.QuadratureRule(snap.x0, snap.weights, "snapshots")
    a = dc.project(dictionary, g, rule)
    P = dictionary.eval(rule.nodes) @ a
    nrm = float(np.sqrt(np.sum(rule.weights * np.abs(P) ** 2)))
    if nrm == 0:
        raise NumericError("observable projects to zero in this dictionary")
    return a / nrm, nrm


def cmd_measure(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    system = build_system(cfg)
    theta = _theta(cfg)
    extra = {}
    if cfg.method == "filter":
        acs = _autocorrelations(cfg, system)
        est = mf.nu_eval(acs, mf.Filter(cfg.filter), theta)
        cols, names = [theta, est.values], ["theta", "nu"]
        extra.update({"N": cfg.N, "filter": cfg.filter, "a_digest": acs.digest(),
                      "atom_at_0": mf.atom_estimate(acs, mf.Filter(cfg.filter))})
    elif cfg.method == "rational":
        dic = build_dictionary(cfg)
        mats, rule, snap = build_matrices(cfg, system, dic)
        a, nrm = _coefficients(cfg, dic, rule, snap)
        k = mr.kernel_coeffs(cfg.order, cfg.epsilon[0])
        est = mr.measure_eval(mats, a, k, theta)
        cols, names = [theta, est.values], ["theta", "nu"]
        if cfg.certificate:
            cols.append(np.array([mr.total_bound(mats, a, k, t) for t in theta]))
            names.append("certificate")
        extra.update({"m": cfg.order, "epsilon": cfg.epsilon[0], "N_K": dic.size,
                      "M1": None if snap is None else snap.size, "projection_norm": nrm,
                      "dictionary": dic.describe(), "a_digest": io.digest(a)})
    else:
        raise ArgumentError(f"--method must be filter or rational, got {cfg.method!r}")
    cols.append(np.full(theta.shape, est.imag_max))
    names.append("imag_max")
    io.write_csv(out / "measure.csv", np.column_stack(cols), names)
    _write_meta(out, cfg, extra)
    return out


def cmd_pseudospec(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    system = build_system(cfg)
    dic = build_dictionary(cfg)
    mats, _, snap = build_matrices(cfg, system, dic)
    grid = _grid(cfg)
    eps = sorted(cfg.epsilon)
    ps = ga.pseudospectrum(mats, grid, max(eps), threads=cfg.threads)
    io.write_csv(out / "grid.csv", np.column_stack([grid.real, grid.imag, ps.tau]), ["re", "im", "tau"])
    rows = [(z.real, z.imag, e) for e in eps for z, t in zip(grid, ps.tau) if t < e]
    io.write_csv(out / "accepted.csv", np.array(rows, dtype=float).reshape(-1, 3), ["re", "im", "eps"])
    _write_meta(out, cfg, {"epsilon": eps, "N_K": dic.size, "M1": None if snap is None else snap.size,
                           "dictionary": dic.describe(),
                           "accepted_counts": {str(e): int(np.sum(ps.tau < e)) for e in eps}})
    return out


def _write_eigs(out: Path, eigs, eps: float | None) -> None:
    eigs = sorted(eigs, key=lambda e: (e.res, -abs(e.lam)))
    table = np.array([[e.lam.real, e.lam.imag, e.res] for e in eigs], dtype=float).reshape(-1, 3)
    io.write_csv(out / "eigs.csv", table, ["re", "im", "res"])
    if eps is not None:
        io.write_csv(out / "accepted.csv", table[table[:, 2] <= eps], ["re", "im", "res"])


def cmd_eigs(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    system = build_system(cfg)
    dic = build_dictionary(cfg)
    mats, _, snap = build_matrices(cfg, system, dic)
    eigs = ga.edmd_eigs(mats)
    for e in eigs:
        e.res = ga.residual(e.lam, e.g, mats)
    _write_eigs(out, eigs, cfg.epsilon[0])
    _write_meta(out, cfg, {"epsilon": cfg.epsilon[0], "N_K": dic.size,
                           "M1": None if snap is None else snap.size, "dictionary": dic.describe()})
    return out


def cmd_kernel_dmd(cfg: RunConfig) -> Path:
    """Learn N (= N_K'') functions from the first m1_prime snapshots, verify on the rest."""
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    system = build_system(cfg)
    kind, args = _spec(cfg.quad)
    if kind == "trajectory":
        snap = _trajectory_snapshots(cfg, system, int(args[0]))
    else:
        rule = build_rule(cfg, system)
        snap = dy.generate_snapshots(system, rule.nodes, 2, rule.weights)
    if not 0 < cfg.m1_prime < snap.size:
        raise ArgumentError(f"m1_prime must lie in (0, {snap.size})")
    idx = np.random.default_rng(cfg.seed).permutation(snap.size)
    s1, s2 = snap.subset(np.sort(idx[:cfg.m1_prime])), snap.subset(np.sort(idx[cfg.m1_prime:]))
    s1 = dy.SnapshotSet(s1.x0, s1.x1, np.full(s1.size, 1.0 / s1.size), s1.source)
    s2 = dy.SnapshotSet(s2.x0, s2.x1, s2.weights / s2.weights.sum(), s2.source)
    kern = kz.GaussianKernel(kz.gamma_heuristic(s1))
    res = kz.kernel_resdmd(s1, s2, kern, min(cfg.N, s1.size), request="eigs", append_constant=True)
    _write_eigs(out, res["eigs"], cfg.epsilon[0])
    ld = res["learned"]
    kz.save_learned(out / "learned", ld, sources=[(s1.x0, s1.x1)])
    _write_meta(out, cfg, {"epsilon": cfg.epsilon[0], "gamma": kern.gamma, "learned": ld.describe(),
                           "M1_prime": s1.size, "M1_second": s2.size,
                           "snap1_sha": io.digest(s1.x0, s1.x1), "snap2_sha": io.digest(s2.x0, s2.x1)})
    return out


COMMANDS = {"measure": cmd_measure, "pseudospec": cmd_pseudospec, "eigs": cmd_eigs,
            "kernel-dmd": cmd_kernel_dmd}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="koopspec", description="Koopman spectral computations from snapshot data.")
    p.add_argument("--version", action="version", version=f"koopspec {__version__}")
    sub = p.add_subparsers(dest="cmd", required=True)
    sub.add_parser("systems-list", help="list registered systems and their parameters")
    for name, help_ in [("measure", "smoothed spectral measure (filter or rational kernel)"),
                        ("pseudospec", "pseudospectrum on a rectangular grid"),
                        ("eigs", "EDMD eigenvalues with residuals"),
                        ("kernel-dmd", "kernel-learned dictionary, verified on held-out snapshots")]:
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", help="TOML recipe (or a previous run's meta.json)")
        s.add_argument("--system")
        s.add_argument("--param", action="append", metavar="KEY=VALUE", help="system parameter")
        s.add_argument("--quad", help="gauss:M, trapezoid:M, riemann:M, mc:M, dyadic:k, lattice:K, "
                                      "trajectory:M or exact")
        s.add_argument("--dict", help="legendre:N, fourier:N, hermite:N, hyperbolic:order or canonical:N")
        s.add_argument("--method", help="filter or rational (measure only)")
        s.add_argument("--epsilon", help="smoothing / residual threshold; comma list for pseudospec")
        s.add_argument("--order", type=int, help="rational kernel order m")
        s.add_argument("--N", type=int, help="Fourier truncation (filter) or learned size (kernel-dmd)")
        s.add_argument("--filter", help="hat, cos, four, bump or none")
        s.add_argument("--observable", help=f"one of {', '.join(sorted(ob.OBSERVABLES))} or e1")
        s.add_argument("--theta", help="lo,hi,n evaluation points")
        s.add_argument("--grid", help="re_lo,re_hi,im_lo,im_hi,n")
        s.add_argument("--noise", type=float, help="uniform noise added at each step")
        s.add_argument("--certificate", action="store_true", help="add the error-bound column")
        s.add_argument("--out", help="output directory")
        s.add_argument("--seed", type=int)
        s.add_argument("--threads", type=int)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if ns.cmd == "systems-list":
            print(cmd_systems_list(ns))
            return EXIT_OK
        cfg = resolve_config(ns)
        t0 = time.perf_counter()
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            out = COMMANDS[ns.cmd](cfg)
        print(f"wrote {out} in {time.perf_counter() - t0:.2f}s")
        return EXIT_OK
    except ResourceError as exc:
        print(f"koopspec: resource cap: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except ArgumentError as exc:
        print(f"koopspec: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"koopspec: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
