"""Run configuration: a sectioned ``key = value`` file.

Grammar (INI, ``#`` or ``;`` comments, keys case-insensitive)::

    [constants]  hbar, v                              (both optional)
    [packet]     Q, P, dQ, dP                         comma lists, one entry per dof
    [potential]  mu, coeffs                           coeffs = V_0, V_1, ... with V = sum V_k q^k / k!
    [evolve]     t_max, n_out, method, taylor_order, mc_samples, seed, trunc_dim, tol, engine
    [scan]       s_min, s_max, n_points, t_probe, taylor_order
    [chain]      nparticles, mu, kappa, xi, and exactly one of E or lambda
    [output]     path, format (csv)

Each subcommand requires its own sections; anything else is rejected.
Syntax problems and malformed or missing fields raise ``ConfigError`` (a parse
failure); physically invalid values raise the ``ValidationError`` of the
domain type that rejects them.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field

from .chain import ChainModel
from .core import Constants, Dof, PacketParams
from .dynamics import PolynomialPotential
from .errors import ValidationError

METHODS = ("closed", "taylor", "mc", "matrix")


class ConfigError(Exception):
    """The configuration could not be parsed into the expected fields."""


REQUIRED = {
    "packet": {"packet"},
    "evolve": {"packet", "potential", "evolve"},
    "scan": {"packet", "potential", "scan"},
    "chain": {"chain"},
    "verify": set(),
}
OPTIONAL = {"constants", "output"}

KEYS = {
    "constants": ({}, {"hbar": float, "v": float}),
    "packet": ({"q": "list", "p": "list", "dq": "list", "dp": "list"}, {}),
    "potential": ({"mu": float, "coeffs": "list"}, {}),
    "evolve": (
        {"t_max": float, "n_out": int, "method": str},
        {"taylor_order": int, "mc_samples": int, "seed": int, "trunc_dim": int, "tol": float,
         "engine": str, "mc_steps": int},
    ),
    "scan": ({"s_min": float, "s_max": float, "n_points": int, "t_probe": float}, {"taylor_order": int}),
    "chain": ({"nparticles": int, "mu": float, "kappa": float, "xi": float}, {"e": float, "lambda": float}),
    "output": ({}, {"path": str, "format": str}),
}


@dataclass
class EvolveConfig:
    t_max: float
    n_out: int
    method: str
    taylor_order: int = 8
    mc_samples: int = 100_000
    seed: int = 0
    trunc_dim: int | None = None
    tol: float = 1e-8
    engine: str = "quantum"
    mc_steps: int = 4096


@dataclass
class ScanConfig:
    s_min: float
    s_max: float
    n_points: int
    t_probe: float
    taylor_order: int = 10


@dataclass
class ChainConfig:
    model: ChainModel
    E: float | None = None
    lam: float | None = None


@dataclass
class RunConfig:
    constants: Constants = field(default_factory=Constants)
    packet: PacketParams | None = None
    potential: PolynomialPotential | None = None
    evolve: EvolveConfig | None = None
    scan: ScanConfig | None = None
    chain: ChainConfig | None = None
    output_path: str | None = None
    output_format: str = "csv"


def _convert(section: str, key: str, raw: str, kind):
    try:
        if kind == "list":
            items = [x.strip() for x in raw.split(",")]
            if not items or any(x == "" for x in items):
                raise ValueError("empty entry")
            return [float(x) for x in items]
        if kind is int:
            value = float(raw)
            if value != int(value):
                raise ValueError("not an integer")
            return int(value)
        if kind is float:
            return float(raw)
        return raw.strip()
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key} = {raw!r}: expected {getattr(kind, '__name__', kind)} ({exc})") from None


def _read_section(cp: configparser.ConfigParser, name: str) -> dict:
    required, optional = KEYS[name]
    sec = cp[name]
    present = set(sec.keys())
    unknown = present - set(required) - set(optional)
    if unknown:
        raise ConfigError(f"[{name}] unknown key(s): {', '.join(sorted(unknown))}")
    missing = set(required) - present
    if missing:
        raise ConfigError(f"[{name}] missing key(s): {', '.join(sorted(missing))}")
    kinds = {**required, **optional}
    return {k: _convert(name, k, sec[k], kinds[k]) for k in present}


def parse_text(text: str, command: str) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config syntax: {exc}") from None
    sections = set(cp.sections())
    need = REQUIRED[command]
    missing = need - sections
    if missing:
        raise ConfigError(f"'{command}' needs section(s): {', '.join(sorted(missing))}")
    extra = sections - need - OPTIONAL
    if extra:
        raise ConfigError(f"'{command}' does not take section(s): {', '.join(sorted(extra))}")
    data = {name: _read_section(cp, name) for name in sections}
    return _build(data)


def load(path: str, command: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc.strerror}") from None
    return parse_text(text, command)


def _build(data: dict) -> RunConfig:
    cfg = RunConfig()
    c = data.get("constants", {})
    cfg.constants = Constants(hbar=c.get("hbar", 1.0), v=c.get("v"))
    if "packet" in data:
        pk = data["packet"]
        lengths = {len(pk[k]) for k in ("q", "p", "dq", "dp")}
        if len(lengths) != 1:
            raise ConfigError("[packet] Q, P, dQ, dP must list the same number of dofs")
        dofs = tuple(Dof(*vals) for vals in zip(pk["q"], pk["p"], pk["dq"], pk["dp"]))
        cfg.packet = PacketParams(dofs, cfg.constants)
    if "potential" in data:
        pt = data["potential"]
        cfg.potential = PolynomialPotential(pt["mu"], tuple(pt["coeffs"]))
    if "evolve" in data:
        ev = data["evolve"]
        cfg.evolve = EvolveConfig(**ev)
        if cfg.evolve.method not in METHODS:
            raise ConfigError(f"[evolve] method = {cfg.evolve.method!r}: expected one of {', '.join(METHODS)}")
        if cfg.evolve.engine not in ("quantum", "classical"):
            raise ConfigError(f"[evolve] engine = {cfg.evolve.engine!r}: expected quantum or classical")
        if not cfg.evolve.t_max >= 0:
            raise ValidationError(f"[evolve] t_max must be >= 0, got {cfg.evolve.t_max}")
        if cfg.evolve.n_out < 1:
            raise ValidationError(f"[evolve] n_out must be >= 1, got {cfg.evolve.n_out}")
    if "scan" in data:
        sc = ScanConfig(**data["scan"])
        if not 0 < sc.s_min <= sc.s_max or sc.n_points < 1:
            raise ValidationError("[scan] need 0 < s_min <= s_max and n_points >= 1")
        cfg.scan = sc
    if "chain" in data:
        ch = data["chain"]
        has_e, has_l = "e" in ch, "lambda" in ch
        if has_e == has_l:
            raise ConfigError("[chain] give exactly one of E or lambda")
        model = ChainModel(ch["nparticles"] - 1, ch["mu"], ch["kappa"], ch["xi"], cfg.constants.hbar)
        cfg.chain = ChainConfig(model, ch.get("e"), ch.get("lambda"))
    if "output" in data:
        out = data["output"]
        cfg.output_path = out.get("path")
        cfg.output_format = out.get("format", "csv")
        if cfg.output_format != "csv":
            raise ConfigError(f"[output] format = {cfg.output_format!r}: only csv is supported")
    return cfg
