"""Command-line front end.

Subcommands: spectrum, majority-table, learn, junta, noise, sample, verify.
Configuration is a flat key=value file with [section] headers and full-line
# comments; every key is validated against the schema below and unknown keys
are rejected. Values resolve in order: built-in default, config file,
MRF_<SECTION>_<KEY> environment variable, command-line flag. Exit codes:
0 success, 1 usage or config error, 2 size cap exceeded, 3 numerical
validation failure.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import experiments
from .chain import ChainOracle, sample_stationary_iid, state_string
from .errors import NumericalValidationError, SizeCapExceeded
from .learners import halfspace_function, majority_function
from .models import ColoringModel, CubeWalkModel, IsingModel, make_graph
from .rng import RngStream
from .spectral import (DB_TOLERANCE, DEFAULT_MATRIX_CAP, enumerate_support,
                       detailed_balance_violation, eigendecompose,
                       exact_transition_matrix, fourier_coefficients,
                       stationary_exact)

ENV_PREFIX = "MRF"

# key -> (type tag, default); tags: int, float, str, ints, floats
SCHEMA = {
    "model": {
        "graph": ("str", "cycle"),
        "n": ("int", 10),
        "rows": ("int", 0),
        "cols": ("int", 0),
        "beta": ("float", 0.0),
        "field": ("float", 0.0),
        "q": ("int", 0),
        "er_p": ("float", 0.3),
        "er_seed": ("int", 0),
    },
    "run": {
        "master_seed": ("int", 0),
        "out": ("str", "mrf-out"),
        "cache": ("str", ""),
        "workers": ("int", 1),
        "cap_states": ("int", DEFAULT_MATRIX_CAP),
    },
    "spectrum": {
        "betas": ("floats", experiments.FIG_BETAS),
    },
    "majority": {
        "graph": ("str", "K11"),
        "n": ("int", 11),
        "betas": ("floats", ()),
        "degrees": ("ints", (2, 4)),
        "policy": ("str", "dimension"),
        "er_seeds": ("int", 20),
    },
    "learn": {
        "seeds": ("int", 1),
        "train": ("int", 3000),
        "val": ("int", 500),
        "budgets": ("floats", (1.0, 4.0, 16.0)),
        "tau_max": ("int", 30),
        "eps2": ("float", 0.05),
        "delta": ("float", 0.01),
        "basis_k": ("int", 2),
        "opt_k": ("int", 3),
    },
    "junta": {
        "k": ("int", 3),
        "seeds": ("int", 100),
        "delta": ("float", 0.05),
        "walk_len": ("int", 0),
    },
    "noise": {
        "t_max": ("int", 30),
        "pairs": ("int", 0),
        "function": ("str", "majority"),
        "weights": ("floats", ()),
    },
    "sample": {
        "count": ("int", 1000),
        "burn_in": ("int", -1),
    },
    "verify": {
        "functions": ("int", 3),
    },
}

# subcommand -> sections it accepts (config keys outside these are errors)
COMMAND_SECTIONS = {
    "spectrum": ("run", "model", "spectrum"),
    "majority-table": ("run", "majority"),
    "learn": ("run", "model", "learn"),
    "junta": ("run", "model", "junta"),
    "noise": ("run", "model", "noise"),
    "sample": ("run", "model", "sample"),
    "verify": ("run", "model", "verify"),
}


class ConfigError(Exception):
    pass


def _coerce(tag: str, raw: str, where: str):
    try:
        if tag == "int":
            return int(raw)
        if tag == "float":
            return float(raw)
        if tag == "str":
            return raw
        if tag == "ints":
            return tuple(int(v) for v in raw.split(",") if v.strip())
        if tag == "floats":
            return tuple(float(v) for v in raw.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"{where}: cannot parse {raw!r} as {tag}") from None
    raise ConfigError(f"{where}: unknown type tag {tag}")


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Flat sections of raw strings; structural validation only."""
    sections: dict = {}
    current = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        where = f"{source}:{lineno}"
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if not current:
                raise ConfigError(f"{where}: empty section name")
            sections.setdefault(current, {})
            continue
        if "=" not in line:
            raise ConfigError(f"{where}: expected key = value, got {line!r}")
        if current is None:
            raise ConfigError(f"{where}: key before any [section] header")
        key, _, value = line.partition("=")
        sections[current][key.strip()] = value.strip()
    return sections


def resolve_config(command: str, config_path: str | None,
                   flag_overrides: dict, environ=None) -> dict:
    """Defaults, then file, then MRF_* environment, then flags."""
    environ = os.environ if environ is None else environ
    allowed = COMMAND_SECTIONS[command]
    cfg = {s: {k: d for k, (_, d) in SCHEMA[s].items()} for s in allowed}

    def apply(section: str, key: str, raw: str, where: str):
        if section not in allowed:
            raise ConfigError(
                f"{where}: section [{section}] is not used by {command!r}"
            )
        if key not in SCHEMA[section]:
            raise ConfigError(f"{where}: unknown key {section}.{key}")
        cfg[section][key] = _coerce(SCHEMA[section][key][0], raw, where)

    if config_path is not None:
        path = Path(config_path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {config_path}")
        for section, kv in parse_config_text(path.read_text(), str(path)).items():
            for key, raw in kv.items():
                apply(section, key, raw, str(path))
    for section in allowed:
        for key in SCHEMA[section]:
            name = f"{ENV_PREFIX}_{section.upper()}_{key.upper()}"
            if name in environ:
                apply(section, key, environ[name], f"${name}")
    for (section, key), value in flag_overrides.items():
        if value is not None:
            cfg[section][key] = value
    return cfg


def build_model(mcfg: dict):
    kind = mcfg["graph"]
    if kind == "cube":
        return CubeWalkModel(n=mcfg["n"])
    params = {"n": mcfg["n"], "rows": mcfg["rows"], "cols": mcfg["cols"],
              "p": mcfg["er_p"], "seed": mcfg["er_seed"]}
    try:
        g = make_graph(kind, **params)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if mcfg["q"]:
        return ColoringModel(graph=g, q=mcfg["q"])
    return IsingModel(graph=g, beta=mcfg["beta"], external_field=mcfg["field"])


def _versions() -> list:
    import numba
    import scipy

    try:
        from importlib.metadata import version

        pkg = version("artifact")
    except Exception:
        pkg = "unknown"
    return [
        ("python", sys.version.split()[0]),
        ("numpy", np.__version__),
        ("scipy", scipy.__version__),
        ("numba", numba.__version__),
        ("artifact", pkg),
    ]


def write_manifest(out_dir: Path, command: str, cfg: dict,
                   wall_time: float) -> None:
    lines = [f"command = {command}", f"wall_time_s = {wall_time:.3f}"]
    lines += [f"{name} = {ver}" for name, ver in _versions()]
    for section in sorted(cfg):
        lines.append(f"[{section}]")
        for key in sorted(cfg[section]):
            value = cfg[section][key]
            if isinstance(value, tuple):
                value = ",".join(experiments.format_value(v) for v in value)
            else:
                value = experiments.format_value(value)
            lines.append(f"{key} = {value}")
    (out_dir / "manifest.txt").write_text("\n".join(lines) + "\n",
                                          encoding="ascii")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _out_dir(cfg: dict) -> Path:
    out = Path(cfg["run"]["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cache_dir(cfg: dict):
    return cfg["run"]["cache"] or None


def cmd_spectrum(cfg: dict) -> int:
    out = _out_dir(cfg)
    columns = experiments.spectrum_experiment(
        n=cfg["model"]["n"], betas=cfg["spectrum"]["betas"],
        cap_states=cfg["run"]["cap_states"], cache_dir=_cache_dir(cfg))
    experiments.save_rows_csv(out / "spectrum.csv",
                              experiments.CSV_HEADERS["spectrum"],
                              experiments.spectrum_rows(columns))
    return 0


def cmd_majority(cfg: dict) -> int:
    out = _out_dir(cfg)
    m = cfg["majority"]
    rows = experiments.majority_table(
        m["graph"], betas=m["betas"] or None, degrees=m["degrees"], n=m["n"],
        policy=m["policy"], er_seeds=m["er_seeds"],
        master_seed=cfg["run"]["master_seed"],
        cap_states=cfg["run"]["cap_states"], cache_dir=_cache_dir(cfg),
        workers=cfg["run"]["workers"])
    experiments.save_rows_csv(out / "majority.csv",
                              experiments.CSV_HEADERS["majority"],
                              experiments.majority_rows(rows))
    return 0


def cmd_learn(cfg: dict) -> int:
    out = _out_dir(cfg)
    L = cfg["learn"]
    trials = experiments.agnostic_experiment(
        model=build_model(cfg["model"]), seeds=tuple(range(L["seeds"])),
        basis_k=L["basis_k"], tau_max=L["tau_max"], eps2=L["eps2"],
        delta=L["delta"], train=L["train"], val=L["val"],
        budgets=L["budgets"], opt_k=L["opt_k"],
        master_seed=cfg["run"]["master_seed"],
        cap_states=cfg["run"]["cap_states"], cache_dir=_cache_dir(cfg),
        workers=cfg["run"]["workers"])
    experiments.save_rows_csv(out / "agnostic.csv",
                              experiments.CSV_HEADERS["agnostic"],
                              experiments.agnostic_rows(trials))
    return 0


def cmd_junta(cfg: dict) -> int:
    out = _out_dir(cfg)
    J = cfg["junta"]
    result = experiments.junta_experiment(
        build_model(cfg["model"]), k=J["k"], seeds=J["seeds"],
        master_seed=cfg["run"]["master_seed"], delta=J["delta"],
        walk_len=J["walk_len"] or None)
    experiments.save_rows_csv(out / "junta.csv",
                              experiments.CSV_HEADERS["junta"],
                              experiments.junta_rows(result))
    return 0


def cmd_noise(cfg: dict) -> int:
    out = _out_dir(cfg)
    N = cfg["noise"]
    model = build_model(cfg["model"])
    if N["function"] == "majority":
        f = majority_function(model.n)
    elif N["function"] == "halfspace":
        if len(N["weights"]) != model.n:
            raise ConfigError(
                f"halfspace needs {model.n} weights, got {len(N['weights'])}"
            )
        f = halfspace_function(np.array(N["weights"]))
    else:
        raise ConfigError(f"unknown noise.function {N['function']!r}")
    curve = experiments.stability_experiment(
        model, f=f, ts=tuple(range(N["t_max"] + 1)), pairs=N["pairs"],
        master_seed=cfg["run"]["master_seed"],
        cap_states=cfg["run"]["cap_states"], cache_dir=_cache_dir(cfg))
    experiments.save_rows_csv(out / "stability.csv",
                              experiments.CSV_HEADERS["stability"],
                              experiments.stability_rows(curve))
    return 0


def cmd_sample(cfg: dict) -> int:
    out = _out_dir(cfg)
    S = cfg["sample"]
    model = build_model(cfg["model"])
    burn = S["burn_in"] if S["burn_in"] >= 0 else None
    samples = sample_stationary_iid(ChainOracle(model), S["count"],
                                    RngStream(cfg["run"]["master_seed"]), burn)
    with open(out / "samples.csv", "w", encoding="ascii") as f:
        f.write("state\n")
        for row in samples:
            f.write(state_string(row, model.alphabet_size) + "\n")
    return 0


def cmd_verify(cfg: dict) -> int:
    """Invariant suite for one model; any failed check exits with code 3."""
    out = _out_dir(cfg)
    model = build_model(cfg["model"])
    cap = cfg["run"]["cap_states"]
    checks = []

    def record(name, value, threshold, ok):
        checks.append((name, float(value), float(threshold), int(bool(ok))))

    support = enumerate_support(model, cap)
    pi = stationary_exact(model, support)
    P = exact_transition_matrix(model, support, cap)
    db = detailed_balance_violation(P, pi)
    record("detailed_balance", db, DB_TOLERANCE, db <= DB_TOLERANCE)
    min_diag = float(np.min(np.diag(P)))
    record("laziness_min_diag", min_diag, 0.5, min_diag >= 0.5 - 1e-12)
    rowsum = float(np.max(np.abs(P.sum(axis=1) - 1.0)))
    record("rowsum_error", rowsum, 1e-12, rowsum <= 1e-12)
    pi_err = abs(float(pi.sum()) - 1.0)
    record("stationary_mass", pi_err, 1e-12, pi_err <= 1e-12)
    record("stationary_positive", float(pi.min()), 0.0, pi.min() > 0.0)
    failed_decompose = False
    try:
        spec = eigendecompose(P, pi, support)
    except NumericalValidationError:
        record("eigendecompose", 1.0, 0.0, False)
        failed_decompose = True
    else:
        top_err = abs(float(spec.eigenvalues[0]) - 1.0)
        record("top_eigenvalue", top_err, 1e-10, top_err <= 1e-10)
        lam_min = float(spec.eigenvalues[-1])
        record("eigenvalues_nonnegative", lam_min, 0.0, lam_min >= 0.0)
        rng = RngStream(cfg["run"]["master_seed"])
        worst = 0.0
        for _ in range(cfg["verify"]["functions"]):
            f = np.where(rng.floats(support.size) < 0.5, -1.0, 1.0)
            worst = max(worst, abs(float(np.sum(
                fourier_coefficients(f, spec) ** 2)) - 1.0))
        record("parseval", worst, 1e-9, worst <= 1e-9)
    experiments.save_rows_csv(out / "verify.csv",
                              ("check", "value", "threshold", "status"),
                              checks)
    for name, value, threshold, ok in checks:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {value:.3e} "
              f"(threshold {threshold:.3e})")
    if failed_decompose or any(not ok for *_, ok in checks):
        raise NumericalValidationError(
            "model failed the invariant suite; see verify.csv"
        )
    return 0


COMMANDS = {
    "spectrum": cmd_spectrum,
    "majority-table": cmd_majority,
    "learn": cmd_learn,
    "junta": cmd_junta,
    "noise": cmd_noise,
    "sample": cmd_sample,
    "verify": cmd_verify,
}


# ---------------------------------------------------------------------------
# argument parsing and entry point
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    # usage problems must exit 1, not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mrf", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=f"run the {name} task")
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--out", help="output directory")
        p.add_argument("--cache", help="spectrum cache directory")
        p.add_argument("--workers", type=int, help="worker thread bound")
        p.add_argument("--cap-states", type=int,
                       help="refuse supports larger than this")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    flags = {
        ("run", "master_seed"): args.seed,
        ("run", "out"): args.out,
        ("run", "cache"): args.cache,
        ("run", "workers"): args.workers,
        ("run", "cap_states"): args.cap_states,
    }
    start = time.perf_counter()
    try:
        cfg = resolve_config(args.command, args.config, flags)
        code = COMMANDS[args.command](cfg)
        write_manifest(_out_dir(cfg), args.command, cfg,
                       time.perf_counter() - start)
        return code
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except SizeCapExceeded as exc:
        print(f"size cap exceeded: {exc}", file=sys.stderr)
        return 2
    except NumericalValidationError as exc:
        print(f"numerical validation failed: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
