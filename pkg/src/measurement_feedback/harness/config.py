"""Scenario files: INI sections whose values are small arithmetic expressions.

Values may use numbers, ``+ - * / **``, parentheses, the constants ``pi``,
``ns``, ``us``, ``kHz``, ``MHz``, ``GHz`` (time unit ns, frequencies in
cycles per ns, so ``2*pi*15*MHz`` is an angular frequency in rad/ns), the
functions ``sqrt``, ``sin``, ``cos``, ``linspace``, and the name of any
other scalar key in the file.  A comma makes a list.  Names resolve lazily,
so an override of ``omega0`` also moves every key defined from it.
"""

from __future__ import annotations

import ast
import configparser
import math
import operator
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from ..dynamics import HamiltonianSpec, NoiseProcess
from ..measurement import KrausFamily, block_probabilities, kraus_nlevel, kraus_qubit
from ..qmath import SIGMA_Z
from ..systems import (
    T_STATE,
    DilationParams,
    DrivenQubitParams,
    RydbergParams,
    SpinFieldParams,
    driven_qubit_hamiltonians,
    pair_state,
    ramsey_dilation,
    rydberg_hamiltonian,
    spin_hamiltonians,
)
from .engine import ControlSchedule

SECTIONS = ("system", "noise", "measurement", "schedule", "output", "sweep")

_CONSTANTS = {
    "pi": math.pi,
    "ns": 1.0,
    "us": 1e3,
    "kHz": 1e-6,
    "MHz": 1e-3,
    "GHz": 1.0,
}
_FUNCS = {"sqrt": math.sqrt, "sin": math.sin, "cos": math.cos, "exp": math.exp, "linspace": None}
_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}


class ConfigError(ValueError):
    pass


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    try:
        return float(low) != 0.0
    except ValueError:
        pass
    raise ConfigError(f"not a boolean: {text!r}")


class Scenario:
    """A parsed scenario file plus any ``key=value`` overrides."""

    def __init__(self, name: str, sections: dict[str, dict[str, str]], source: str | None = None):
        self.name = name
        self.source = source
        self.sections = {s: dict(v) for s, v in sections.items()}
        unknown = set(self.sections) - set(SECTIONS)
        if unknown:
            raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")
        self._owner: dict[str, str] = {}
        self._ambiguous: set[str] = set()
        for sec, items in self.sections.items():
            if sec == "sweep":
                continue
            for key in items:
                if key in self._owner:
                    self._ambiguous.add(key)
                self._owner.setdefault(key, sec)
        for key in self._ambiguous:
            del self._owner[key]
        self._cache: dict[tuple[str, str], object] = {}

    # --- loading ------------------------------------------------------------------------

    @classmethod
    def from_text(cls, text: str, name: str = "custom", source: str | None = None) -> "Scenario":
        parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
        parser.optionxform = str
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from exc
        return cls(name, {s: dict(parser.items(s)) for s in parser.sections()}, source)

    @classmethod
    def load(cls, name_or_path: str) -> "Scenario":
        path = Path(name_or_path)
        if path.suffix == ".ini" or path.exists():
            if not path.exists():
                raise ConfigError(f"scenario file not found: {path}")
            return cls.from_text(path.read_text(encoding="utf-8"), path.stem, str(path))
        if name_or_path not in preset_names():
            raise ConfigError(f"unknown scenario {name_or_path!r}; presets: {', '.join(preset_names())}")
        text = resources.files("measurement_feedback.scenarios").joinpath(f"{name_or_path}.ini").read_text("utf-8")
        return cls.from_text(text, name_or_path, f"preset:{name_or_path}")

    def with_overrides(self, overrides: dict[str, object]) -> "Scenario":
        sections = {s: dict(v) for s, v in self.sections.items()}
        for key, value in overrides.items():
            sec, _, bare = key.rpartition(".")
            if not sec:
                if bare in self._ambiguous:
                    raise ConfigError(f"key {bare!r} appears in several sections; use section.key")
                sec = self._owner.get(bare)
                if sec is None:
                    raise ConfigError(f"override {key!r} matches no key; use section.key to add one")
            if sec not in SECTIONS:
                raise ConfigError(f"unknown section {sec!r} in override {key!r}")
            sections.setdefault(sec, {})[bare] = value if isinstance(value, str) else repr(value)
        return Scenario(self.name, sections, self.source)

    # --- evaluation ---------------------------------------------------------------------

    def has(self, key: str, section: str | None = None) -> bool:
        sec = section or self._owner.get(key)
        return sec is not None and key in self.sections.get(sec, {})

    def raw(self, key: str, section: str | None = None) -> str:
        sec = section or self._owner.get(key)
        if sec is None or key not in self.sections.get(sec, {}):
            where = f"[{section}]" if section else "any section"
            raise ConfigError(f"missing key {key!r} in {where}")
        return self.sections[sec][key]

    def string(self, key: str, section: str | None = None, default: str | None = None) -> str:
        if not self.has(key, section):
            if default is None:
                self.raw(key, section)
            return default
        return self.raw(key, section).strip()

    def flag(self, key: str, section: str, default: bool) -> bool:
        if not self.has(key, section):
            return default
        return _parse_bool(self.raw(key, section))

    def value(self, key: str, section: str | None = None, default=None, _stack: tuple = ()):
        """Evaluate ``key`` to a float or a list of floats."""
        sec = section or self._owner.get(key)
        if sec is None or key not in self.sections.get(sec, {}):
            if default is not None:
                return default
            self.raw(key, section)
        if (sec, key) in self._cache:
            return self._cache[(sec, key)]
        if key in _stack:
            raise ConfigError(f"circular definition: {' -> '.join(_stack + (key,))}")
        text = self.sections[sec][key]
        try:
            tree = ast.parse(text.strip(), mode="eval")
        except SyntaxError as exc:
            raise ConfigError(f"cannot parse [{sec}] {key} = {text!r}") from exc
        result = self._eval(tree.body, _stack + (key,), f"[{sec}] {key}")
        if isinstance(result, tuple):
            result = [float(x) for x in result]
        elif isinstance(result, np.ndarray):
            result = [float(x) for x in result]
        elif isinstance(result, bool):
            result = float(result)
        self._cache[(sec, key)] = result
        return result

    def scalar(self, key: str, section: str | None = None, default: float | None = None) -> float:
        v = self.value(key, section, default)
        if isinstance(v, list):
            raise ConfigError(f"{key} must be a single number, got a list")
        return float(v)

    def _eval(self, node, stack, where):
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return node.value
        if isinstance(node, ast.Constant) and isinstance(node.value, bool):
            return float(node.value)
        if isinstance(node, ast.Name):
            if node.id in ("true", "True"):
                return 1.0
            if node.id in ("false", "False"):
                return 0.0
            if node.id in _CONSTANTS:
                return _CONSTANTS[node.id]
            if node.id in self._owner:
                return self.value(node.id, _stack=stack)
            raise ConfigError(f"unknown name {node.id!r} in {where}")
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = self._eval(node.operand, stack, where)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](self._eval(node.left, stack, where), self._eval(node.right, stack, where))
        if isinstance(node, (ast.Tuple, ast.List)):
            out = []
            for elt in node.elts:
                v = self._eval(elt, stack, where)
                out.extend(v if isinstance(v, (list, tuple, np.ndarray)) else [v])
            return tuple(out)
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS and not node.keywords:
            args = [self._eval(a, stack, where) for a in node.args]
            if node.func.id == "linspace":
                if len(args) != 3:
                    raise ConfigError(f"linspace takes (start, stop, count) in {where}")
                return tuple(np.linspace(args[0], args[1], int(args[2])))
            return _FUNCS[node.func.id](*args)
        raise ConfigError(f"unsupported expression in {where}: {ast.dump(node)[:60]}")

    # --- building -----------------------------------------------------------------------

    def sweep_axes(self) -> dict[str, list[float]]:
        axes = {}
        for key in self.sections.get("sweep", {}):
            v = self.value(key, "sweep")
            axes[key] = v if isinstance(v, list) else [v]
        return axes

    def build(self) -> "BuiltScenario":
        try:
            return _build(self)
        except ConfigError:
            raise
        except (ValueError, KeyError, TypeError, ZeroDivisionError) as exc:
            raise ConfigError(f"scenario {self.name!r}: {exc}") from exc


@dataclass
class BuiltScenario:
    name: str
    model: str
    spec: HamiltonianSpec
    psi0: np.ndarray
    schedule: ControlSchedule
    family: KrausFamily | None
    observable: np.ndarray | None
    target: np.ndarray | None
    runs: int
    seed: int
    final_only: bool
    t_F: float
    description: str

    def simulation_kwargs(self) -> dict:
        return {"observable": self.observable, "target": self.target}


_INITIAL_QUBIT = {
    "plus": np.array([1, 0], dtype=complex),
    "minus": np.array([0, 1], dtype=complex),
    "x": np.array([1, 1], dtype=complex) / math.sqrt(2),
}


def _initial_state(sc: Scenario, model: str) -> np.ndarray:
    name = sc.string("initial", "system", "gg" if model == "rydberg" else "plus")
    if model == "rydberg":
        if name == "T":
            return T_STATE.copy()
        try:
            return pair_state(name)
        except KeyError:
            raise ConfigError(f"unknown two-atom state {name!r}") from None
    if name not in _INITIAL_QUBIT:
        raise ConfigError(f"unknown qubit state {name!r}; expected one of {sorted(_INITIAL_QUBIT)}")
    return _INITIAL_QUBIT[name]


def _noise(sc: Scenario, schedule_tau: float) -> NoiseProcess:
    kind = sc.string("kind", "noise", "none")
    if kind in ("none", "static"):
        return NoiseProcess(kind)
    scale = sc.scalar("scale", "noise", 1.0)
    return NoiseProcess(
        kind,
        mu=sc.scalar("mu", "noise", 0.0),
        sigma=sc.scalar("sigma", "noise", 0.0),
        resample_dt=sc.scalar("resample_dt", "noise", schedule_tau / 10),
        scale=scale,
    )


def _family(sc: Scenario, dim: int) -> KrausFamily | None:
    if "measurement" not in sc.sections:
        return None
    kind = sc.string("kind", "measurement", "qubit" if dim == 2 else "nlevel")
    if kind == "qubit":
        return kraus_qubit(sc.scalar("p0", "measurement"))
    if kind == "dilation":
        params = DilationParams(
            g=sc.scalar("g", "measurement"),
            omega_L=sc.scalar("omega_L", default=0.0),
            t_int=sc.scalar("t_int", "measurement"),
        )
        return ramsey_dilation(params).family
    if kind == "nlevel":
        if sc.has("p_block", "measurement"):
            p = block_probabilities(sc.scalar("p_block", "measurement"), sc.scalar("p_last", "measurement", 1.0 / 9.0))
        else:
            p = sc.value("p", "measurement")
        if not isinstance(p, (list, np.ndarray)) or len(p) != dim:
            raise ConfigError(f"measurement p must list {dim} probabilities")
        return kraus_nlevel(p)
    raise ConfigError(f"unknown measurement kind {kind!r}")


def _build(sc: Scenario) -> BuiltScenario:
    model = sc.string("model", "system")
    tau = sc.scalar("tau", "schedule")
    if model == "spin":
        spec = spin_hamiltonians(
            SpinFieldParams(
                omega_L=sc.scalar("omega_L", "system"),
                theta=sc.scalar("theta", "system"),
                phi=sc.scalar("phi", "system"),
                omega_eps=sc.scalar("omega_eps", "system", 0.0),
                theta_p=sc.scalar("theta_p", "system") if sc.has("theta_p", "system") else None,
                phi_p=sc.scalar("phi_p", "system") if sc.has("phi_p", "system") else None,
            )
        )
    elif model == "driven_qubit":
        spec = driven_qubit_hamiltonians(
            DrivenQubitParams(
                omega0=sc.scalar("omega0", "system"),
                beta0=sc.scalar("beta0", "system"),
                d_eps=sc.scalar("d_eps", "system", 0.0),
                d_beta=sc.scalar("d_beta", "system", 0.0),
            )
        )
    elif model == "rydberg":
        spec = rydberg_hamiltonian(
            RydbergParams(
                omega1=sc.scalar("omega1", "system"),
                omega2=sc.scalar("omega2", "system"),
                delta=sc.scalar("delta", "system"),
                V=sc.scalar("V", "system"),
                noise=_noise(sc, tau),
            )
        )
    else:
        raise ConfigError(f"unknown model {model!r}; expected spin, driven_qubit or rydberg")

    step_dt = sc.scalar("step_dt", "schedule", tau / 50)
    schedule = ControlSchedule(
        tau=tau,
        K=int(round(sc.scalar("K", "schedule"))),
        step_dt=step_dt,
        feedback=sc.flag("feedback", "schedule", True),
        measurement=sc.flag("measurement", "schedule", True),
    )
    family = _family(sc, spec.dim)
    qubit = spec.dim == 2
    obs_name = sc.string("observable", "output", "sz" if qubit else "none")
    target_name = sc.string("target", "output", "none" if qubit else "T")
    if obs_name not in ("sz", "none") or (obs_name == "sz" and not qubit):
        raise ConfigError(f"unsupported observable {obs_name!r}")
    if target_name not in ("T", "none") or (target_name == "T" and qubit):
        raise ConfigError(f"unsupported target {target_name!r}")
    return BuiltScenario(
        name=sc.name,
        model=model,
        spec=spec,
        psi0=_initial_state(sc, model),
        schedule=schedule,
        family=family,
        observable=SIGMA_Z if obs_name == "sz" else None,
        target=T_STATE if target_name == "T" else None,
        runs=int(round(sc.scalar("runs", "output", 1))),
        seed=int(round(sc.scalar("seed", "output", 0))),
        final_only=sc.flag("final_only", "output", False),
        t_F=sc.scalar("t_F", "schedule", 1.0),
        description=sc.string("description", "output", ""),
    )


def preset_names() -> list[str]:
    root = resources.files("measurement_feedback.scenarios")
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".ini"))


def parse_override(text: str) -> tuple[str, str]:
    key, sep, value = text.partition("=")
    if not sep or not key.strip():
        raise ConfigError(f"--set expects key=value, got {text!r}")
    return key.strip(), value.strip()
