"""``fracpath`` command line: seeded experiments with reproducible outputs.

Usage::

    fracpath <command> [--config FILE] [--key value ...] --out DIR

Configuration comes from the command's defaults, then the config file
(flat ``key = value`` lines, or a ``manifest.json`` from an earlier run),
then ``FRACPATH_SEED`` for ``master_seed``, then ``--key value`` flags.
Every run writes its outputs and a ``manifest.json`` listing their SHA-256
digests into ``--out``. Only ``verify`` gates: it exits 1 when the summary
misses its thresholds.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .fbm_gen import METHODS, SeedSpec, sample_fbm
from .frac_calc import besov_refinement_diagnostic, gls_integral, integrand_besov_check
from .funcderiv import (
    EXP,
    BumpSpec,
    PathFunctional,
    check_horizontal_chain_rule,
    check_product_rule,
    check_vertical_chain_rule,
    horizontal_derivative,
    residual_sweep,
    second_vertical_derivative,
    sweep_to_csv,
    vertical_derivative,
)
from .grid import DomainError, TimeGrid, frame_to_csv, grid_function
from .path_model import PROCESSES, AveragePathBundle, increment_moments
from .payoffs import parse_payoff
from .representation import IDENTITIES, INTEGRATORS, IdentitySpec, arbitrage_experiment, verify_identity
from .riemann import TAGS, PartitionSpec, riemann_stieltjes

EXIT_OK, EXIT_GATE, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3

DEFAULTS: dict[str, dict[str, object]] = {
    "generate": {
        "H": 0.7, "T": 1.0, "n_steps": 1024, "n_paths": 2, "master_seed": 0,
        "method": "circulant", "bundle": False,
    },
    "verify": {
        "which": "prop_hedge1", "payoff": "call:1.05", "H": 0.7, "T": 1.0,
        "levels": "1024,2048,4096", "n_paths": 100, "master_seed": 0,
        "checkpoints": "0.25,0.5,0.75,1.0", "integrator": "riemann", "beta": 0.35,
        "tag": "trapezoid", "max_median": "auto", "require_monotone": True, "method": "circulant",
    },
    "fraccalc": {"f": "id", "g": "square", "beta": 0.35, "T": 1.0, "t": 1.0, "n_steps": 8192, "levels": 3},
    "besov": {
        "H": 0.7, "T": 1.0, "beta": 0.35, "w1_beta": "auto", "payoff": "call:1.0", "which": "geom",
        "n_steps": 4096, "n_paths": 10, "master_seed": 0,
    },
    "scaling": {"process": "fbm", "p": 2.0, "H": 0.7, "T": 1.0, "n_steps": 4096, "n_paths": 1000, "master_seed": 0},
    "funcderiv": {
        "functional": "paper_geom", "H": 0.7, "T": 1.0, "n_steps": 1024, "master_seed": 0,
        "path_index": 0, "t": 0.5, "h0": 0.1, "h0_steps": 16, "halvings": 4,
    },
    "arbitrage": {
        "K": 1.0, "H": 0.7, "T": 1.0, "t_obs": 0.5, "n_steps": 4096, "n_paths": 10000,
        "master_seed": 0, "tag": "left",
    },
}

DETERMINISTIC = {
    "one": lambda s: np.ones_like(s),
    "id": lambda s: s,
    "square": lambda s: s * s,
    "cube": lambda s: s**3,
    "exp": np.exp,
    "sin": np.sin,
}

SMOOTH_PAYOFFS = ("affine", "quadratic", "identity")


class ConfigError(ValueError):
    """A configuration value is missing, malformed or out of range."""


# ---------------------------------------------------------------------------
# Config handling
# ---------------------------------------------------------------------------


def parse_config(text: str) -> dict[str, str]:
    """Flat ``key = value`` (or ``key: value``) lines; ``#`` starts a comment."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        sep = "=" if "=" in line else ":"
        key, found, value = line.partition(sep)
        if not found or not key.strip():
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def serialize_config(cfg: dict) -> str:
    return "".join(f"{k} = {_to_text(cfg[k])}\n" for k in sorted(cfg))


def load_config_file(path: str) -> dict[str, str]:
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        data = json.loads(text)
        data = data.get("config", data)
        return {k: _to_text(v) for k, v in data.items()}
    return parse_config(text)


def _to_text(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _coerce(key: str, value, default):
    if not isinstance(value, str):
        return value
    try:
        if isinstance(default, bool):
            low = value.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(value)
            return low in ("true", "1", "yes")
        if isinstance(default, int):
            return int(value)
        if isinstance(default, float):
            return float(value)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {value!r} as {type(default).__name__}") from None
    return value


def _parse_overrides(tokens: list[str]) -> dict[str, str]:
    out: dict[str, str] = {}
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if not tok.startswith("--"):
            raise ConfigError(f"unexpected argument {tok!r}")
        key, eq, value = tok[2:].partition("=")
        if not eq:
            if i + 1 >= len(tokens):
                raise ConfigError(f"flag --{key} needs a value")
            value = tokens[i + 1]
            i += 1
        out[key.replace("-", "_")] = value
        i += 1
    return out


def resolve_config(command: str, file_cfg: dict, overrides: dict, env: dict | None = None) -> dict:
    """Merge defaults, file, environment and flags; coerce to the default types."""
    env = os.environ if env is None else env
    defaults = DEFAULTS[command]
    merged: dict = dict(defaults)
    for source in (file_cfg, overrides):
        unknown = sorted(set(source) - set(defaults))
        if unknown:
            raise ConfigError(f"unknown key(s) for {command}: {', '.join(unknown)}")
    merged.update(file_cfg)
    if "master_seed" in defaults and env.get("FRACPATH_SEED"):
        merged["master_seed"] = env["FRACPATH_SEED"]
    merged.update(overrides)
    return {k: _coerce(k, v, defaults[k]) for k, v in merged.items()}


def _floats(text: str, key: str) -> list[float]:
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"{key}: expected comma-separated numbers, got {text!r}") from None


def _require(cond: bool, key: str, message: str) -> None:
    if not cond:
        raise ConfigError(f"{key}: {message}")


def _validate(command: str, cfg: dict) -> None:
    if "H" in cfg:
        strict = command in ("verify", "arbitrage")
        lo = 0.5 if strict else 0.0
        _require(lo < cfg["H"] < 1.0, "H", f"must lie in ({'1/2' if strict else '0'}, 1), got {cfg['H']}")
    for key in ("n_paths", "n_steps"):
        if key in cfg:
            _require(cfg[key] >= 1, key, f"must be >= 1, got {cfg[key]}")
    if "T" in cfg:
        _require(cfg["T"] > 0, "T", "must be positive")
    if "beta" in cfg:
        _require(0 < cfg["beta"] < 1, "beta", f"must lie in (0, 1), got {cfg['beta']}")
    if "method" in cfg:
        _require(cfg["method"] in METHODS, "method", f"must be one of {METHODS}")
    if "tag" in cfg:
        _require(cfg["tag"] in TAGS, "tag", f"must be one of {TAGS}")
    if command == "verify":
        _require(cfg["which"] in IDENTITIES, "which", f"must be one of {IDENTITIES}")
        _require(cfg["integrator"] in INTEGRATORS, "integrator", f"must be one of {INTEGRATORS}")
        if cfg["integrator"] == "gls":
            _require(1 - cfg["H"] < cfg["beta"] < 0.5, "beta", "gls needs 1 - H < beta < 1/2")
    if command == "besov":
        _require(1 - cfg["H"] < cfg["beta"] < 0.5, "beta", "integrand check needs 1 - H < beta < 1/2")
        _require(cfg["which"] in ("geom", "arith"), "which", "must be geom or arith")
    if command == "scaling":
        _require(cfg["process"] in PROCESSES, "process", f"must be one of {PROCESSES}")
        _require(1 <= cfg["p"] <= 4, "p", "must lie in [1, 4]")
    if command == "fraccalc":
        for key in ("f", "g"):
            _require(cfg[key] in DETERMINISTIC, key, f"must be one of {sorted(DETERMINISTIC)}")
    if command == "arbitrage":
        _require(0 < cfg["t_obs"] < cfg["T"], "t_obs", "must lie in (0, T)")


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------


class OutputDir:
    """Collects files written atomically and records their digests."""

    def __init__(self, path: str):
        self.path = Path(path)
        self.path.mkdir(parents=True, exist_ok=True)
        if not os.access(self.path, os.W_OK):
            raise PermissionError(f"output directory {self.path} is not writable")
        self.digests: dict[str, str] = {}

    def write(self, name: str, text: str) -> None:
        data = text.encode()
        _atomic_write(self.path / name, data)
        self.digests[name] = hashlib.sha256(data).hexdigest()

    def write_json(self, name: str, obj) -> None:
        self.write(name, json.dumps(_jsonable(obj), sort_keys=True, indent=1) + "\n")

    def finish(self, command: str, cfg: dict) -> dict:
        manifest = {
            "command": command,
            "config": {k: _to_text(v) for k, v in sorted(cfg.items())},
            "version": __version__,
            "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
            "files": dict(sorted(self.digests.items())),
        }
        _atomic_write(self.path / "manifest.json", (json.dumps(manifest, indent=1) + "\n").encode())
        return manifest


def _atomic_write(path: Path, data: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def verify_manifest(directory: str) -> bool:
    """True when every file listed in the manifest exists and matches its digest."""
    d = Path(directory)
    manifest = json.loads((d / "manifest.json").read_text())
    for name, digest in manifest["files"].items():
        p = d / name
        if not p.exists() or hashlib.sha256(p.read_bytes()).hexdigest() != digest:
            return False
    return True


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_generate(cfg: dict, out: OutputDir) -> int:
    grid = TimeGrid(cfg["T"], cfg["n_steps"])
    width = max(5, len(str(cfg["n_paths"] - 1)))
    for i in range(cfg["n_paths"]):
        b = sample_fbm(grid, cfg["H"], SeedSpec(cfg["master_seed"], i), cfg["method"])
        out.write(f"path_{i:0{width}d}.csv", b.to_csv())
        if cfg["bundle"]:
            out.write(f"bundle_{i:0{width}d}.csv", AveragePathBundle.from_fbm(b).to_csv())
    return EXIT_OK


def default_threshold(which: str, payoff: str) -> float:
    """Gate on the top-level median relative residual used by ``verify``."""
    if which.startswith("prop"):
        return 0.005
    kind = payoff.split(":", 1)[0]
    return 0.01 if kind in SMOOTH_PAYOFFS else 0.02


def cmd_verify(cfg: dict, out: OutputDir) -> int:
    spec = IdentitySpec(
        cfg["which"],
        parse_payoff(cfg["payoff"]),
        tuple(_floats(cfg["checkpoints"], "checkpoints")),
        cfg["integrator"],
        cfg["beta"],
        cfg["tag"],
    )
    levels = [int(v) for v in _floats(cfg["levels"], "levels")]
    report = verify_identity(
        spec, cfg["H"], cfg["master_seed"], range(cfg["n_paths"]), levels, cfg["T"], cfg["method"]
    )
    threshold = (
        default_threshold(cfg["which"], cfg["payoff"])
        if cfg["max_median"] == "auto"
        else _floats(cfg["max_median"], "max_median")[0]
    )
    ok = report.passes(threshold, cfg["require_monotone"])
    out.write("report.json", report.to_json() + "\n")
    out.write("report.csv", report.to_csv())
    s = report.summary
    meds = ", ".join(f"{p['n_steps']}: {p['median']:.3e}" for p in s["per_level"])
    print(
        f"{'PASS' if ok else 'FAIL'} {cfg['which']} median |rel| by level [{meds}] "
        f"threshold {threshold:g} monotone={s['monotone_decreasing']}"
    )
    return EXIT_OK if ok else EXIT_GATE


def cmd_fraccalc(cfg: dict, out: OutputDir) -> int:
    f = grid_function(DETERMINISTIC[cfg["f"]], cfg["T"], cfg["n_steps"])
    g = grid_function(DETERMINISTIC[cfg["g"]], cfg["T"], cfg["n_steps"])
    gls = gls_integral(f, g, cfg["beta"], t=cfg["t"], levels=cfg["levels"])
    part = PartitionSpec.dyadic(cfg["n_steps"], cfg["levels"])
    rs = riemann_stieltjes(f, g, part, tag="trapezoid", t=cfg["t"])
    out.write("integral.json", gls.to_json() + "\n")
    out.write("riemann.json", rs.to_json() + "\n")
    print(f"gls {gls.value:.12g}  riemann {rs.value:.12g}")
    return EXIT_OK


def cmd_besov(cfg: dict, out: OutputDir) -> int:
    grid = TimeGrid(cfg["T"], cfg["n_steps"])
    f = parse_payoff(cfg["payoff"])
    w1_beta = cfg["H"] - 0.05 if cfg["w1_beta"] == "auto" else _floats(cfg["w1_beta"], "w1_beta")[0]
    rows = []
    for i in range(cfg["n_paths"]):
        b = sample_fbm(grid, cfg["H"], SeedSpec(cfg["master_seed"], i))
        integ = integrand_besov_check(AveragePathBundle.from_fbm(b), f, cfg["which"], cfg["beta"])
        w1 = besov_refinement_diagnostic(b, w1_beta, norm="1", trajectory=False)
        rows.append([i, *integ.trajectory, float(integ.finite), w1.octave_slope, float(w1.finite)])
    cols = np.array(rows, dtype=float).T
    header = ["path", "norm2_coarse", "norm2_mid", "norm2_fine", "norm2_finite", "w1_octave_slope", "w1_finite"]
    text = frame_to_csv(header, cols)
    lines = text.splitlines()
    lines[1:] = [",".join([str(int(float(l.split(",")[0])))] + l.split(",")[1:]) for l in lines[1:]]
    out.write("besov.csv", "\n".join(lines) + "\n")
    summary = {
        "integrand_finite_fraction": float(np.mean(cols[4])),
        "w1_beta": w1_beta,
        "w1_finite_fraction": float(np.mean(cols[6])),
        "n_paths": cfg["n_paths"],
    }
    out.write_json("besov.json", summary)
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def cmd_scaling(cfg: dict, out: OutputDir) -> int:
    grid = TimeGrid(cfg["T"], cfg["n_steps"])
    lag_t, mom = increment_moments(cfg["process"], cfg["p"], cfg["H"], cfg["n_paths"], grid, cfg["master_seed"])
    slope = float(np.polyfit(np.log(lag_t), np.log(mom), 1)[0])
    result = {
        "process": cfg["process"], "p": cfg["p"], "H": cfg["H"], "slope": slope,
        "predicted": cfg["p"] * cfg["H"], "lags": lag_t.tolist(), "moments": mom.tolist(),
    }
    out.write_json("scaling.json", result)
    print(f"slope {slope:.4f} (pH = {cfg['p'] * cfg['H']:.4f})")
    return EXIT_OK


def cmd_funcderiv(cfg: dict, out: OutputDir) -> int:
    grid = TimeGrid(cfg["T"], cfg["n_steps"])
    x = sample_fbm(grid, cfg["H"], SeedSpec(cfg["master_seed"], cfg["path_index"]))
    t = cfg["t"]
    kinds = {
        "paper_geom": PathFunctional.paper_geom(cfg["T"]),
        "paper_arith": PathFunctional.paper_arith(cfg["T"]),
        "running_integral": PathFunctional.running_integral(),
        "endpoint_square": PathFunctional.endpoint_square(),
    }
    if cfg["functional"] not in kinds:
        raise ConfigError(f"functional: must be one of {sorted(kinds)}")
    F = kinds[cfg["functional"]]
    other = kinds["paper_arith"] if cfg["functional"] != "paper_arith" else kinds["paper_geom"]
    h0, hh0 = cfg["h0"], cfg["h0_steps"] * grid.dt
    sweeps = {
        "vertical_chain": residual_sweep(lambda s: check_vertical_chain_rule(EXP, F, x, t, s), h0, cfg["halvings"]),
        "product": residual_sweep(lambda s: check_product_rule(F, other, x, t, s), h0, cfg["halvings"]),
        "horizontal_chain": residual_sweep(
            lambda s: check_horizontal_chain_rule(EXP, F, x, t, s), hh0, cfg["halvings"], horizontal=True
        ),
    }
    for name, (hs, res) in sweeps.items():
        out.write(f"{name}.csv", sweep_to_csv(hs, res))
    spec = BumpSpec(h_vertical=h0 / 2 ** cfg["halvings"], h_horizontal=grid.dt)
    derivs = {
        "functional": F.describe(),
        "t": t,
        "value": F(x, t),
        "vertical": vertical_derivative(F, x, t, spec),
        "second_vertical": second_vertical_derivative(F, x, t, spec),
        "horizontal": horizontal_derivative(F, x, t, spec),
    }
    out.write_json("derivatives.json", derivs)
    print(json.dumps(_jsonable(derivs), sort_keys=True))
    return EXIT_OK


def cmd_arbitrage(cfg: dict, out: OutputDir) -> int:
    grid = TimeGrid(cfg["T"], cfg["n_steps"])
    rep = arbitrage_experiment(cfg["K"], cfg["H"], cfg["t_obs"], cfg["n_paths"], grid, cfg["master_seed"], cfg["tag"])
    out.write_json("arbitrage.json", rep.to_dict())
    out.write("residuals.csv", frame_to_csv(["residual"], [np.asarray(rep.replication_residuals)]))
    print(json.dumps(_jsonable(rep.to_dict()), sort_keys=True))
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "verify": cmd_verify,
    "fraccalc": cmd_fraccalc,
    "besov": cmd_besov,
    "scaling": cmd_scaling,
    "funcderiv": cmd_funcderiv,
    "arbitrage": cmd_arbitrage,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracpath",
        description="Simulate fBm and verify pathwise integral representations numerically.",
        epilog="Any other --key value pair overrides a configuration key of the command.",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="flat key = value file or a previous manifest.json")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--version", action="version", version=f"fracpath {__version__}")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args, rest = parser.parse_known_args(argv)
    try:
        file_cfg = load_config_file(args.config) if args.config else {}
        cfg = resolve_config(args.command, file_cfg, _parse_overrides(rest))
        _validate(args.command, cfg)
        out = OutputDir(args.out)
    except (ConfigError, DomainError, OSError, json.JSONDecodeError) as exc:
        print(f"fracpath {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        status = COMMANDS[args.command](cfg, out)
    except (ConfigError, DomainError) as exc:
        print(f"fracpath {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        print(f"fracpath {args.command}: internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL
    out.finish(args.command, cfg)
    return status


if __name__ == "__main__":
    sys.exit(main())
