"""Batch front end: JSON run configs in, CSV tables and JSON records out.

Usage::

    qnd-sim channel  [--config FILE] [--set path=value ...] [--out DIR]
    qnd-sim sweep    ...
    qnd-sim wigner   ...
    qnd-sim montecarlo ...
    qnd-sim validate ...

A config holds a ``params`` block, exactly one command block named after the
subcommand and an optional ``output`` block. Exit codes: 0 success, 1 config
error, 2 domain error, 3 validation failure.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .channel import compute_channel
from .errors import ConfigError, ParameterDomainError, QndSimError
from .nongaussian import channel_wigner, make_grid, negativity_boundary_scan, wigner_at_origin
from .params import InterfaceParams, ModelTier, db_to_gain

__all__ = [
    "COMMANDS",
    "SWEEP_COLUMNS",
    "CHANNEL_COLUMNS",
    "ORIGIN_COLUMNS",
    "BOUNDARY_COLUMNS",
    "RunConfig",
    "load_preset",
    "parse_config",
    "apply_overrides",
    "sweep_values",
    "run_channel",
    "run_sweep",
    "resolve_point",
    "run_wigner",
    "run_montecarlo",
    "run_validate",
    "main",
]

COMMANDS = ("channel", "sweep", "wigner", "montecarlo", "validate")
EXIT_OK, EXIT_CONFIG, EXIT_DOMAIN, EXIT_VALIDATION = 0, 1, 2, 3

CHANNEL_COLUMNS = ("tier", "T", "V_XN", "V_YN", "V_N", "gain", "gain_policy", "sym_factor", "mismatch")
SWEEP_COLUMNS = ("variable", "value", "T", "V_XN", "V_YN", "V_N", "gain", "tier", "marker")
ORIGIN_COLUMNS = ("point", "tier", "T", "V_XN", "V_YN", "V_N", "W00", "negative")
BOUNDARY_COLUMNS = ("T", "V_boundary", "V_quoted", "disagree")
CONVENTION_NOTE = "quadratures with vacuum variance 1; W integrates to 1; axes are (q_f, p_f) unless frame=input"

PARAM_FIELDS = ("kappa", "g", "gamma", "tau", "S", "n_th", "n_0", "n_cav0", "angular_convention")

_SWEEP_DEFAULT_RANGE = {"S": (1.0, db_to_gain(12.0)), "g": (1.0e6, 1.0e6 * db_to_gain(12.0)), "tau": (4e-5, 4e-4)}

DEFAULT_BLOCKS = {
    "channel": {"tier": "FULL", "gain": "optimal", "opo_variance": 0.0},
    "sweep": {
        "variable": "S",
        "start": None,
        "stop": None,
        "steps": 40,
        "tiers": ["ADIABATIC_NO_BATH", "ADIABATIC_BATH", "FULL"],
        "gain": "optimal",
        "marker_db": 3.0,
    },
    "wigner": {
        "points": ["O", "A", "B", "C"],
        "n": 1,
        "grid": {"extent": 5.0, "n": 101},
        "frame": "mechanical",
        "gain": "optimal",
        "boundary": {"T_start": 0.5, "T_stop": 0.95, "steps": 10},
    },
    "montecarlo": {
        "tier": "FULL",
        "n_traj": 100000,
        "dt": None,
        "seed": 1,
        "signal_sigma": 5.0,
        "increments": "rademacher",
        "integrator": "euler",
        "batches": 50,
        "sigma_level": 5.0,
        "gain": None,
        "gain_scale": 1.0,
    },
    "validate": {
        "tiers": ["FULL"],
        "montecarlo": {},
        "fock": {
            "n": [0, 1, 2],
            "channels": [[0.5, 1.0, 1.0], [0.85129, 1.3755, 1.3755], [0.9, 2.0, 2.0]],
            "truncation": 60,
            "grid": {"extent": 5.0, "n": 101},
            "tol": 1e-6,
            "boundary_T": [0.5, 0.6, 0.7],
            "boundary_tol": 1e-6,
        },
    },
}


# presets and config ----------------------------------------------------------------

def load_preset(name: str = "points") -> dict:
    """Shipped preset file ``presets/<name>.json``."""
    try:
        text = resources.files("qndsim").joinpath("presets", f"{name}.json").read_text()
    except FileNotFoundError:
        raise ConfigError(f"unknown preset {name!r}") from None
    return json.loads(text)


def _field_error(path, msg):
    return ConfigError(f"{path}: {msg}")


def _number(value, path, allow_none=False):
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise _field_error(path, f"expected a number, got {value!r}")
    return float(value)


def _integer(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
        raise _field_error(path, f"expected an integer, got {value!r}")
    return int(value)


def _tier(value, path):
    try:
        return ModelTier.parse(value).value
    except ParameterDomainError:
        raise _field_error(path, f"unknown tier {value!r}; expected one of {[t.value for t in ModelTier]}") from None


def _gain(value, path):
    if value in ("optimal", "adiabatic"):
        return value
    return _number(value, path)


def _merge_block(defaults: dict, given: dict, path: str) -> dict:
    if not isinstance(given, dict):
        raise _field_error(path, "expected an object")
    unknown = sorted(set(given) - set(defaults))
    if unknown:
        raise _field_error(f"{path}.{unknown[0]}", f"unknown field; expected one of {sorted(defaults)}")
    out = copy.deepcopy(defaults)
    for k, v in given.items():
        if isinstance(defaults[k], dict) and defaults[k]:
            out[k] = _merge_block(defaults[k], v, f"{path}.{k}")
        else:
            out[k] = copy.deepcopy(v)
    return out


def _normalize_params(given) -> dict:
    if not isinstance(given, dict):
        raise _field_error("params", "expected an object")
    given = dict(given)
    preset = given.pop("preset", "reference")
    if preset == "reference":
        base = dict(load_preset()["params"])
    elif preset is None or preset == "none":
        base = {"n_th": 0.0, "n_0": 0.0, "n_cav0": 0.0, "S": 1.0, "angular_convention": False}
    else:
        raise _field_error("params.preset", f"unknown preset {preset!r}")
    if "S_db" in given:
        given["S"] = db_to_gain(_number(given.pop("S_db"), "params.S_db"))
    unknown = sorted(set(given) - set(PARAM_FIELDS))
    if unknown:
        raise _field_error(f"params.{unknown[0]}", f"unknown field; expected one of {list(PARAM_FIELDS)}")
    base.update(given)
    missing = [k for k in PARAM_FIELDS if k not in base]
    if missing:
        raise _field_error(f"params.{missing[0]}", "missing")
    out = {}
    for k in PARAM_FIELDS:
        if k == "angular_convention":
            if not isinstance(base[k], bool):
                raise _field_error("params.angular_convention", f"expected true or false, got {base[k]!r}")
            out[k] = base[k]
        else:
            out[k] = _number(base[k], f"params.{k}")
    return out


def _normalize_block(command: str, block: dict) -> dict:
    path = command
    b = _merge_block(DEFAULT_BLOCKS[command], block, path)
    if command == "channel":
        b["tier"] = _tier(b["tier"], f"{path}.tier")
        b["gain"] = _gain(b["gain"], f"{path}.gain")
        b["opo_variance"] = _number(b["opo_variance"], f"{path}.opo_variance")
    elif command == "sweep":
        var = b["variable"]
        if var not in _SWEEP_DEFAULT_RANGE:
            raise _field_error(f"{path}.variable", f"expected one of {sorted(_SWEEP_DEFAULT_RANGE)}, got {var!r}")
        lo, hi = _SWEEP_DEFAULT_RANGE[var]
        b["start"] = lo if b["start"] is None else _number(b["start"], f"{path}.start")
        b["stop"] = hi if b["stop"] is None else _number(b["stop"], f"{path}.stop")
        if not b["start"] < b["stop"]:
            raise _field_error(f"{path}.stop", f"range must be nonempty and ordered, got [{b['start']}, {b['stop']}]")
        b["steps"] = _integer(b["steps"], f"{path}.steps")
        if b["steps"] < 2:
            raise _field_error(f"{path}.steps", "need at least 2 steps")
        if not isinstance(b["tiers"], list) or not b["tiers"]:
            raise _field_error(f"{path}.tiers", "expected a nonempty list")
        b["tiers"] = [_tier(t, f"{path}.tiers[{i}]") for i, t in enumerate(b["tiers"])]
        b["gain"] = _gain(b["gain"], f"{path}.gain")
        b["marker_db"] = _number(b["marker_db"], f"{path}.marker_db", allow_none=True)
        if b["marker_db"] is not None and b["marker_db"] <= 0:
            raise _field_error(f"{path}.marker_db", "must be > 0")
    elif command == "wigner":
        pts = b["points"]
        if not isinstance(pts, list) or not pts:
            raise _field_error(f"{path}.points", "expected a nonempty list")
        for i, pt in enumerate(pts):
            if isinstance(pt, str):
                continue
            if not isinstance(pt, dict) or set(pt) - {"name", "T", "V_XN", "V_YN"} or not {"T", "V_XN", "V_YN"} <= set(pt):
                raise _field_error(f"{path}.points[{i}]", "expected a point name or {name, T, V_XN, V_YN}")
            for k in ("T", "V_XN", "V_YN"):
                pt[k] = _number(pt[k], f"{path}.points[{i}].{k}")
            pt.setdefault("name", f"P{i}")
        b["n"] = _integer(b["n"], f"{path}.n")
        b["grid"]["extent"] = _number(b["grid"]["extent"], f"{path}.grid.extent")
        b["grid"]["n"] = _integer(b["grid"]["n"], f"{path}.grid.n")
        if b["frame"] not in ("mechanical", "input"):
            raise _field_error(f"{path}.frame", f"expected 'mechanical' or 'input', got {b['frame']!r}")
        b["gain"] = _gain(b["gain"], f"{path}.gain")
        bd = b["boundary"]
        bd["T_start"] = _number(bd["T_start"], f"{path}.boundary.T_start")
        bd["T_stop"] = _number(bd["T_stop"], f"{path}.boundary.T_stop")
        bd["steps"] = _integer(bd["steps"], f"{path}.boundary.steps")
        if not 0 < bd["T_start"] <= bd["T_stop"] < 1 or bd["steps"] < 1:
            raise _field_error(f"{path}.boundary", "need 0 < T_start <= T_stop < 1 and steps >= 1")
    elif command == "montecarlo":
        b = _normalize_mc(b, path)
    elif command == "validate":
        if not isinstance(b["tiers"], list):
            raise _field_error(f"{path}.tiers", "expected a list")
        b["tiers"] = [_tier(t, f"{path}.tiers[{i}]") for i, t in enumerate(b["tiers"])]
        mc = {k: v for k, v in DEFAULT_BLOCKS["montecarlo"].items() if k != "tier"}
        b["montecarlo"] = _normalize_mc(_merge_block(mc, b["montecarlo"], f"{path}.montecarlo"), f"{path}.montecarlo")
        fk = b["fock"]
        fk["n"] = [_integer(v, f"{path}.fock.n[{i}]") for i, v in enumerate(fk["n"])]
        chans = []
        for i, ch in enumerate(fk["channels"]):
            if not isinstance(ch, list) or len(ch) != 3:
                raise _field_error(f"{path}.fock.channels[{i}]", "expected [T, V_XN, V_YN]")
            chans.append([_number(v, f"{path}.fock.channels[{i}]") for v in ch])
        fk["channels"] = chans
        fk["truncation"] = _integer(fk["truncation"], f"{path}.fock.truncation")
        fk["grid"]["extent"] = _number(fk["grid"]["extent"], f"{path}.fock.grid.extent")
        fk["grid"]["n"] = _integer(fk["grid"]["n"], f"{path}.fock.grid.n")
        fk["tol"] = _number(fk["tol"], f"{path}.fock.tol")
        fk["boundary_T"] = [_number(v, f"{path}.fock.boundary_T[{i}]") for i, v in enumerate(fk["boundary_T"])]
        fk["boundary_tol"] = _number(fk["boundary_tol"], f"{path}.fock.boundary_tol")
    return b


def _normalize_mc(b, path):
    from .oracles.montecarlo import MonteCarloConfig

    if "tier" in b:
        b["tier"] = _tier(b["tier"], f"{path}.tier")
    for k in ("n_traj", "seed", "batches"):
        b[k] = _integer(b[k], f"{path}.{k}")
    for k in ("signal_sigma", "sigma_level", "gain_scale"):
        b[k] = _number(b[k], f"{path}.{k}")
    for k in ("dt", "gain"):
        b[k] = _number(b[k], f"{path}.{k}", allow_none=True)
    MonteCarloConfig(**{k: v for k, v in b.items() if k != "tier"})  # validates ranges
    return b


@dataclass
class RunConfig:
    """Normalized run configuration: parameters, one command block and output settings."""

    command: str
    params: dict
    block: dict
    output: dict = field(default_factory=lambda: {"dir": "qnd_out"})

    @classmethod
    def from_dict(cls, data: dict, command: str | None = None) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        unknown = sorted(set(data) - {"params", "output", *COMMANDS})
        if unknown:
            raise _field_error(unknown[0], f"unknown top-level field; expected params, output and one of {list(COMMANDS)}")
        blocks = [c for c in COMMANDS if c in data]
        if len(blocks) > 1:
            raise ConfigError(f"config has {len(blocks)} command blocks ({', '.join(blocks)}); exactly one is allowed")
        if command is None:
            if not blocks:
                raise ConfigError("config has no command block")
            command = blocks[0]
        elif command not in COMMANDS:
            raise ConfigError(f"unknown command {command!r}")
        elif blocks and blocks[0] != command:
            raise ConfigError(f"config holds a {blocks[0]!r} block but the command is {command!r}")
        params = _normalize_params(data.get("params", {}))
        block = _normalize_block(command, data.get(command, {}) or {})
        output = data.get("output", {}) or {}
        if not isinstance(output, dict) or set(output) - {"dir"}:
            raise _field_error("output", "expected an object with a 'dir' field")
        out = {"dir": str(output.get("dir", "qnd_out"))}
        return cls(command, params, block, out)

    def to_dict(self) -> dict:
        return {"params": copy.deepcopy(self.params), self.command: copy.deepcopy(self.block), "output": dict(self.output)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def interface_params(self) -> InterfaceParams:
        return InterfaceParams.from_dict(self.params)


def parse_config(text: str, source: str = "<config>") -> dict:
    """Parse JSON text; syntax errors report ``source:line:column``."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be a JSON object")
    return data


def apply_overrides(data: dict, assignments) -> dict:
    """Apply ``path=value`` overrides; values are read as JSON when possible, else as strings."""
    data = copy.deepcopy(data)
    for item in assignments or ():
        if "=" not in item:
            raise ConfigError(f"--set expects path=value, got {item!r}")
        path, raw = item.split("=", 1)
        keys = [k for k in path.strip().split(".") if k]
        if not keys:
            raise ConfigError(f"--set has an empty path in {item!r}")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = data
        for k in keys[:-1]:
            nxt = node.setdefault(k, {})
            if not isinstance(nxt, dict):
                raise ConfigError(f"--set {path}: {k!r} is not an object")
            node = nxt
        node[keys[-1]] = value
    return data


# computations -------------------------------------------------------------------------

def _channel_record(ch, policy) -> dict:
    d = ch.to_dict()
    return {
        "tier": d["model_tier"],
        "T": d["T"],
        "V_XN": d["V_XN"],
        "V_YN": d["V_YN"],
        "V_N": d["V_N"],
        "gain": d["gain"],
        "gain_policy": policy if isinstance(policy, str) else "fixed",
        "sym_factor": d["sym_factor"],
        "mismatch": d["mismatch"],
    }


def run_channel(cfg: RunConfig) -> dict:
    b = cfg.block
    params = cfg.interface_params()
    ch = compute_channel(params, b["tier"], gain=b["gain"], opo_variance=b["opo_variance"])
    rec = _channel_record(ch, b["gain"])
    rec.update({f"param_{k}": v for k, v in cfg.params.items()})
    return rec


def sweep_values(variable: str, start: float, stop: float, steps: int, marker_db: float | None = None):
    """Evenly spaced values plus, for ``S``, exact marker values every ``marker_db`` dB from S = 1.

    Returns ``(values, marker_flags)`` sorted by value.
    """
    vals = list(np.linspace(start, stop, steps))
    markers = []
    if variable == "S" and marker_db:
        k = 0
        while True:
            s = db_to_gain(k * marker_db)
            if s > stop * (1 + 1e-12):
                break
            if s >= start * (1 - 1e-12):
                markers.append(s)
            k += 1
    merged = []
    for v in sorted(vals + markers):
        is_marker = any(math.isclose(v, m, rel_tol=1e-9) for m in markers)
        if merged and math.isclose(v, merged[-1][0], rel_tol=1e-9):
            if is_marker and not merged[-1][1]:
                merged[-1] = (v, True)
            continue
        merged.append((v, is_marker))
    return np.array([m[0] for m in merged]), np.array([m[1] for m in merged])


def run_sweep(cfg: RunConfig) -> dict:
    """One list of rows per tier, ordered by swept value."""
    b = cfg.block
    base = cfg.interface_params()
    values, flags = sweep_values(b["variable"], b["start"], b["stop"], b["steps"], b["marker_db"])
    out = {}
    for tier in b["tiers"]:
        rows = []
        for v, mk in zip(values, flags):
            ch = compute_channel(base.replace(**{b["variable"]: float(v)}), tier, gain=b["gain"])
            rows.append({
                "variable": b["variable"],
                "value": float(v),
                "T": ch.T,
                "V_XN": ch.V_XN,
                "V_YN": ch.V_YN,
                "V_N": ch.V_N,
                "gain": ch.gain,
                "tier": tier,
                "marker": bool(mk),
            })
        out[tier] = rows
    return out


def resolve_point(name: str, params: InterfaceParams, gain="optimal", preset: dict | None = None, _seen=()) -> dict:
    """Channel of a named Wigner point (O, A, B, C) from the shipped preset."""
    preset = preset or load_preset()
    spec = preset["points"].get(name)
    if spec is None:
        raise ConfigError(f"unknown point {name!r}; presets define {sorted(preset['points'])}")
    if "T_from" in spec:
        if spec["T_from"] in _seen:
            raise ConfigError(f"point {name!r} refers to itself")
        src = resolve_point(spec["T_from"], params, gain, preset, (*_seen, name))
        return {"point": name, "tier": None, "T": src["T"], "V_XN": spec["V_XN"], "V_YN": spec["V_YN"],
                "V_N": math.sqrt(spec["V_XN"] * spec["V_YN"]), "source": spec["T_from"]}
    ch = compute_channel(params.replace(S=db_to_gain(spec["S_db"])), spec["tier"], gain=gain)
    rec = _channel_record(ch, gain)
    rec.update({"point": name, "S_db": spec["S_db"]})
    return rec


def run_wigner(cfg: RunConfig) -> dict:
    """Grids and origin values for every requested point plus the negativity-boundary table."""
    b = cfg.block
    params = cfg.interface_params()
    preset = load_preset()
    x, p = make_grid(b["grid"]["extent"], b["grid"]["n"])
    grids, origin = {}, []
    for pt in b["points"]:
        if isinstance(pt, str):
            rec = resolve_point(pt, params, b["gain"], preset)
        else:
            rec = {"point": pt["name"], "tier": None, "T": pt["T"], "V_XN": pt["V_XN"], "V_YN": pt["V_YN"],
                   "V_N": math.sqrt(pt["V_XN"] * pt["V_YN"])}
        chan = (rec["T"], rec["V_XN"], rec["V_YN"])
        grid = channel_wigner(b["n"], chan, x, p, frame=b["frame"])
        grid.meta.update({"point": rec["point"], "record": rec, "convention": CONVENTION_NOTE})
        w00 = wigner_at_origin(b["n"], chan)
        grids[rec["point"]] = grid
        origin.append({"point": rec["point"], "tier": rec.get("tier"), "T": rec["T"], "V_XN": rec["V_XN"],
                       "V_YN": rec["V_YN"], "V_N": rec["V_N"], "W00": w00, "negative": w00 < 0})
    bd = b["boundary"]
    Ts = np.round(np.linspace(bd["T_start"], bd["T_stop"], bd["steps"]), 12)
    boundary = negativity_boundary_scan(Ts, n=1)
    return {"grids": grids, "origin": origin, "boundary": boundary}


def _mc_config(block: dict):
    from .oracles.montecarlo import MonteCarloConfig

    return MonteCarloConfig(**{k: v for k, v in block.items() if k != "tier"})


def run_montecarlo(cfg: RunConfig):
    from .oracles.montecarlo import mc_channel

    return mc_channel(cfg.interface_params(), cfg.block["tier"], _mc_config(cfg.block))


def run_validate(cfg: RunConfig) -> dict:
    """Monte Carlo and Fock-basis suites; ``ok`` is true iff every check passes."""
    from .oracles.fock import fock_channel_oracle, oracle_negativity_boundary, wigner_from_density
    from .oracles.montecarlo import mc_channel
    from .nongaussian import negativity_boundary

    b = cfg.block
    params = cfg.interface_params()
    failures = []
    mc = {}
    mcfg = _mc_config(b["montecarlo"])
    for tier in b["tiers"]:
        rep = mc_channel(params, tier, mcfg)
        mc[tier] = rep.to_dict()
        failures += [f"montecarlo.{tier}.{k}" for k in rep.failures()]
    fk = b["fock"]
    x, p = make_grid(fk["grid"]["extent"], fk["grid"]["n"])
    fock_rows = []
    for n in fk["n"]:
        for T, vx, vy in fk["channels"]:
            rho = fock_channel_oracle(n, T, vx, vy, fk["truncation"])
            diff = float(np.max(np.abs(wigner_from_density(rho, x, p).W - channel_wigner(n, (T, vx, vy), x, p).W)))
            ok = diff <= fk["tol"]
            fock_rows.append({"n": n, "T": T, "V_XN": vx, "V_YN": vy, "sup_diff": diff, "tol": fk["tol"], "passed": ok})
            if not ok:
                failures.append(f"fock.n{n}.T{T:g}")
    bound_rows = []
    for T in fk["boundary_T"]:
        v_oracle = oracle_negativity_boundary(T, truncation=fk["truncation"], tol=fk["boundary_tol"])
        v_closed = negativity_boundary(T)
        ok = abs(v_oracle - v_closed) <= 2 * fk["boundary_tol"] * max(1.0, v_closed)
        bound_rows.append({"T": T, "V_oracle": v_oracle, "V_closed_form": v_closed, "passed": ok})
        if not ok:
            failures.append(f"boundary.T{T:g}")
    return {
        "ok": not failures,
        "failures": failures,
        "montecarlo": mc,
        "fock": fock_rows,
        "boundary": bound_rows,
        "config": {k: v for k, v in cfg.to_dict().items() if k != "output"},
    }


# output -------------------------------------------------------------------------------

def _fmt(v):
    if isinstance(v, np.generic):
        v = v.item()
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return ""
    return str(v)


def _write_csv(path: Path, columns, rows, header_lines=()):
    buf = io.StringIO()
    for line in header_lines:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    path.write_text(buf.getvalue())


def _json_text(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_json_default) + "\n"


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _write_grid(path: Path, grid):
    buf = io.StringIO()
    buf.write(f"# {json.dumps(grid.meta, sort_keys=True, default=_json_default)}\n")
    buf.write("x,p,W\n")
    for xv, pv, wv in grid.triples():
        buf.write(f"{xv!r},{pv!r},{wv!r}\n")
    path.write_text(buf.getvalue())


def _emit(stream, rec: dict):
    for k, v in rec.items():
        stream.write(f"{k} = {_fmt(v)}\n")


def _execute(cfg: RunConfig, stdout) -> int:
    out_dir = Path(cfg.output["dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    if cfg.command == "channel":
        rec = run_channel(cfg)
        _emit(stdout, rec)
        with open(out_dir / "channel.jsonl", "a") as fh:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
        return EXIT_OK
    if cfg.command == "sweep":
        tables = run_sweep(cfg)
        var = cfg.block["variable"]
        for tier, rows in tables.items():
            path = out_dir / f"sweep_{var}_{tier}.csv"
            _write_csv(path, SWEEP_COLUMNS, rows)
            stdout.write(f"wrote {path} ({len(rows)} rows)\n")
        return EXIT_OK
    if cfg.command == "wigner":
        res = run_wigner(cfg)
        for name, grid in res["grids"].items():
            path = out_dir / f"wigner_{name}.csv"
            _write_grid(path, grid)
            stdout.write(f"wrote {path}\n")
        _write_csv(out_dir / "wigner_origin.csv", ORIGIN_COLUMNS, res["origin"], [CONVENTION_NOTE])
        _write_csv(out_dir / "negativity_boundary.csv", BOUNDARY_COLUMNS, res["boundary"],
                   ["V_boundary: largest symmetric noise with W(0,0) < 0 for Fock 1",
                    "V_quoted: sqrt(T / (1 - T)) from the quoted bound V_N^2 < T / (1 - T)"])
        for row in res["origin"]:
            stdout.write(f"{row['point']}: T = {row['T']:.6f}, V_N = {row['V_N']:.6f}, W(0,0) = {row['W00']:.6g}\n")
        n_dis = sum(r["disagree"] for r in res["boundary"])
        if n_dis:
            stdout.write(f"note: negativity boundary disagrees with the quoted bound at {n_dis} of "
                         f"{len(res['boundary'])} transmittivities (see negativity_boundary.csv)\n")
        return EXIT_OK
    if cfg.command == "montecarlo":
        rep = run_montecarlo(cfg)
        (out_dir / "montecarlo_report.json").write_text(rep.to_json())
        for k in ("T", "V_XN", "V_YN", "V_N"):
            stdout.write(f"{k} = {rep.estimates[k]!r} +- {rep.std_errors[k]!r} (analytic {rep.analytic[k]!r})\n")
        return EXIT_OK
    if cfg.command == "validate":
        rep = run_validate(cfg)
        (out_dir / "validation_report.json").write_text(_json_text(rep))
        if rep["ok"]:
            stdout.write("validation passed\n")
            return EXIT_OK
        for f in rep["failures"]:
            stdout.write(f"FAILED {f}\n")
        return EXIT_VALIDATION
    raise ConfigError(f"unknown command {cfg.command!r}")


class _Parser(argparse.ArgumentParser):
    """Reports usage errors as :class:`ConfigError` instead of exiting with status 2."""

    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="qnd-sim", description="Pulsed optomechanical QND interface simulator.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", "-c", help="JSON run configuration")
    ap.add_argument("--set", dest="overrides", action="append", default=[], metavar="PATH=VALUE",
                    help="override a config field, e.g. --set params.S=2")
    ap.add_argument("--out", help="output directory (overrides output.dir)")
    ap.add_argument("--print-config", action="store_true", help="print the normalized config and exit")
    return ap


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        data = {}
        if args.config:
            try:
                text = Path(args.config).read_text()
            except OSError as exc:
                raise ConfigError(f"cannot read config {args.config}: {exc.strerror}") from None
            data = parse_config(text, args.config)
        data = apply_overrides(data, args.overrides)
        if args.out:
            data.setdefault("output", {})["dir"] = args.out
        cfg = RunConfig.from_dict(data, args.command)
        if args.print_config:
            stdout.write(cfg.to_json())
            return EXIT_OK
        from .oracles.montecarlo import set_threads

        set_threads()
        return _execute(cfg, stdout)
    except ConfigError as exc:
        stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    except ParameterDomainError as exc:
        name = f" (parameter {exc.parameter})" if exc.parameter else ""
        stderr.write(f"domain error{name}: {exc}\n")
        return EXIT_DOMAIN
    except QndSimError as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_DOMAIN


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
