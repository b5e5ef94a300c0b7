"""Flat ``key = value`` run configuration shared by the config file and the CLI.

Keys mirror the command-line flag names (``max-evals``, ``cf`` ...);
underscores are accepted in place of dashes. Command-line flags override
the config file, and the file overrides built-in defaults.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Optional

from .driver import MastaConfig
from .rules import CommPolicy, RatePolicy
from .sta import StaParams


class ConfigError(ValueError):
    """A configuration value or file could not be interpreted."""


POLICY_KINDS = {
    "fixed": "fixed",
    "varying": "varying-linear",
    "varying-linear": "varying-linear",
    "stochastic": "stochastic-uniform",
    "stochastic-uniform": "stochastic-uniform",
    "gaussian": "stochastic-gaussian",
    "stochastic-gaussian": "stochastic-gaussian",
}


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _opt_int(s: str) -> Optional[int]:
    if s.strip().lower() in ("none", ""):
        return None
    try:
        return int(s)
    except ValueError:
        pass
    try:
        v = float(s)
    except ValueError:
        raise ValueError(f"expected an integer, got {s!r}") from None
    if not v.is_integer():
        raise ValueError(f"expected an integer, got {s!r}")
    return int(v)


def _int(s: str) -> int:
    v = _opt_int(s)
    if v is None:
        raise ValueError("a value is required")
    return v


def _pair(s: str) -> tuple[float, float]:
    parts = [p for p in s.replace(" ", "").split(",") if p]
    if len(parts) != 2:
        raise ValueError(f"expected two comma-separated numbers, got {s!r}")
    return float(parts[0]), float(parts[1])


def _opt_pair(s: str) -> Optional[tuple[float, float]]:
    if s.strip().lower() in ("none", ""):
        return None
    return _pair(s)


def _policy(s: str) -> str:
    if s not in POLICY_KINDS:
        raise ValueError(f"unknown policy {s!r}; choose from fixed, varying, stochastic, gaussian")
    return s


def parse_cases(s: str) -> list[tuple[str, int]]:
    """``"spherical:2, rastrigin:10"`` -> ``[("spherical", 2), ("rastrigin", 10)]``."""
    cases = []
    for item in s.replace("\n", ",").split(","):
        item = item.strip()
        if not item:
            continue
        name, sep, dim = item.rpartition(":")
        if not sep or not name:
            raise ValueError(f"case {item!r} must look like name:dim")
        cases.append((name.strip(), int(dim)))
    if not cases:
        raise ValueError("no cases given")
    return cases


@dataclass(frozen=True)
class Option:
    key: str
    parse: Callable[[str], Any]
    default: Any
    help: str
    is_flag: bool = False

    @property
    def dest(self) -> str:
        return self.key.replace("-", "_")


MASTA_OPTIONS = [
    Option("pop", _int, 30, "population size N"),
    Option("se", _int, 20, "candidates sampled per operator application"),
    Option("cf", _int, 50, "communication period in generations"),
    Option("patience", _int, 100, "stagnant generations before stopping"),
    Option("improvement-tol", float, 0.0, "minimum best-fitness decrease counted as improvement"),
    Option("max-generations", _opt_int, None, "generation cap (none = unlimited)"),
    Option("max-evals", _opt_int, 1_000_000, "evaluation cap per run (none = unlimited)"),
    Option("seed", _int, 0, "master seed"),
    Option("comm-burst", _bool, False, "run cf communication rounds every generation", True),
    Option("alpha-max", float, 1.0, "rotation factor upper bound and reset value"),
    Option("alpha-min", float, 1e-4, "rotation factor lower bound"),
    Option("decay-base", float, 2.0, "rotation factor decay base"),
    Option("beta", float, 1.0, "translation factor"),
    Option("gamma", float, 1.0, "expansion factor"),
    Option("delta", float, 1.0, "axesion factor"),
    Option("policy", _policy, "stochastic", "rate policy: fixed, varying, stochastic, gaussian"),
    Option("eta", float, -0.5, "fixed rate of convergence"),
    Option("eta-start", float, -0.9, "varying rate at generation 0"),
    Option("eta-end", float, -0.1, "varying rate at the schedule horizon"),
    Option("rate-interval", _pair, (-2.0, 2.0), "stochastic rate interval a,b"),
    Option("rate-factors", _int, 1, "number L of random factors in a stochastic rate"),
    Option("elementwise", _bool, False, "draw an independent rate per dimension", True),
    Option("symmetry", _bool, True, "add the mirror image about the leader", True),
    Option("convex", _bool, False, "add a convex combination with a random peer", True),
    Option("zeta-source", str, "simplex", "convex weights: simplex or fixed"),
    Option("ma-rotation", _bool, True, "add the contracting rotation about the leader", True),
    Option("ma-eta", float, 1.0, "contraction factor of the multiagent rotation"),
]

EXPERIMENT_OPTIONS = [
    Option("cases", parse_cases, None, "benchmark cases as name:dim, comma separated"),
    Option("runs", _int, 30, "independent runs per case"),
    Option("out-dir", str, "results", "directory for stats and curve CSVs"),
    Option("workers", _int, 1, "worker processes for independent runs"),
    Option("curve-stride", _int, 1, "write every k-th generation to curve CSVs"),
]

RUN_OPTIONS = [
    Option("function", str, None, "benchmark name"),
    Option("dim", _int, 2, "problem dimension"),
    Option("out", str, None, "path of the run history JSON"),
]

TRACE_OPTIONS = [
    Option("n-agents", _int, 20, "number of agents"),
    Option("iters", _int, 50, "iterations"),
    Option("leader", _opt_pair, None, "fixed leader x1,x2 (default: re-elect the best agent)"),
]

ALL_OPTIONS = {o.key: o for o in MASTA_OPTIONS + EXPERIMENT_OPTIONS + RUN_OPTIONS + TRACE_OPTIONS}


def defaults(options) -> dict:
    return {o.key: o.default for o in options}


def read_config_file(path) -> dict:
    """Parse a flat key/value file. Errors name the offending key and line."""
    path = Path(path)
    if not path.exists():
        bundled = bundled_config(str(path))
        if bundled is None:
            raise FileNotFoundError(f"config file not found: {path}")
        text, label = bundled, str(path)
    else:
        text, label = path.read_text(encoding="utf-8"), str(path)
    values: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("_", "-")
        if not sep:
            raise ConfigError(f"{label}, line {lineno}: expected 'key = value', got {raw.strip()!r}")
        opt = ALL_OPTIONS.get(key)
        if opt is None:
            raise ConfigError(f"{label}, line {lineno}: unknown key {key!r}")
        try:
            values[key] = opt.parse(value.strip())
        except ValueError as exc:
            raise ConfigError(f"{label}, line {lineno}: key {key!r}: {exc}") from None
    return values


def bundled_config(name: str) -> Optional[str]:
    """Text of a config shipped with the package (``paper2d.cfg`` ...), if any."""
    stem = Path(name).name
    candidates = [stem] if stem.endswith(".cfg") else [stem, stem + ".cfg"]
    base = resources.files("masta") / "configs"
    for c in candidates:
        res = base / c
        if res.is_file():
            return res.read_text(encoding="utf-8")
    return None


def build_masta_config(values: dict) -> MastaConfig:
    """Turn merged option values into a validated :class:`MastaConfig`."""
    v = {**defaults(MASTA_OPTIONS), **{k: x for k, x in values.items() if k in ALL_OPTIONS}}
    try:
        rate = RatePolicy(kind=POLICY_KINDS[v["policy"]], eta=v["eta"], eta_start=v["eta-start"],
                          eta_end=v["eta-end"], interval=v["rate-interval"],
                          L=v["rate-factors"], elementwise=v["elementwise"])
        comm = CommPolicy(rate=rate, use_symmetry=v["symmetry"], use_convex=v["convex"],
                          zeta_source=v["zeta-source"], use_ma_rotation=v["ma-rotation"],
                          ma_eta=v["ma-eta"])
        sta = StaParams(alpha=v["alpha-max"], alpha_max=v["alpha-max"], alpha_min=v["alpha-min"],
                        beta=v["beta"], gamma=v["gamma"], delta=v["delta"], se=v["se"],
                        decay_base=v["decay-base"])
        return MastaConfig(N=v["pop"], cf=v["cf"], sta=sta, comm=comm, patience=v["patience"],
                           improvement_tol=v["improvement-tol"],
                           max_generations=v["max-generations"], max_evals=v["max-evals"],
                           seed=v["seed"], comm_burst=v["comm-burst"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def rate_policy(values: dict) -> RatePolicy:
    v = {**defaults(MASTA_OPTIONS), **values}
    try:
        return RatePolicy(kind=POLICY_KINDS[v["policy"]], eta=v["eta"], eta_start=v["eta-start"],
                          eta_end=v["eta-end"], interval=v["rate-interval"],
                          L=v["rate-factors"], elementwise=v["elementwise"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
