"""INI experiment configs.

Schema (sections and keys; values in brackets are defaults)::

    [experiment]  name, output_dir [out/<name>], workers [1]
    [grid]        x_min, x_max, M, boundary [dirichlet], T, N, mass [1], hbar [1]
    [potential]   kind = free | harmonic | quartic | time_linear | tabulated, plus
                  omega / a / g / values_file
    [ansatz]      kind = coherent | gaussian, q0 [1], p0 [0], sigma [ground width],
                  s_offset [0.1], line_file, functionals [20], n_max [8], seed [0]
    [sweep]       pairs = 16x256, 32x256, ...
    [tolerances]  any key of DEFAULT_TOLERANCES
    [convergence] target, metric   (only for name = convergence)

Every error message carries ``path:line``.
"""
from __future__ import annotations

import configparser
import os
import re
from dataclasses import dataclass, field

from .errors import ValidationError
from .grid import make_grids, potential_from_config
from .oracle import ORACLE_CAP

EXPERIMENTS = ("evolve", "action_equivalence", "backshift", "commutator", "spectrum",
               "classical", "variational", "convergence")

# sections each experiment cannot run without
REQUIRED = {name: ("experiment", "grid", "potential") for name in EXPERIMENTS}
REQUIRED["commutator"] = ("experiment", "grid")
REQUIRED["convergence"] = ("experiment", "grid", "potential", "sweep", "convergence")

DEFAULT_TOLERANCES = {
    "norm_drift": 1e-12,
    "commutator_abs": 1e-12,
    "oracle_abs": 1e-12,
    "line_residual": 1e-12,
    "bracket_scaled": 1e-8,
    "center_error": 5e-3,
    "gradient": 1e-7,
    "order_min": None,  # per-experiment default in experiments.SWEEP_CHECKS
}

ENV_OUTPUT_DIR = "WFQ_OUTPUT_DIR"
ENV_WORKERS = "WFQ_WORKERS"

_PAIR = re.compile(r"^\s*(\d+)\s*[xX]\s*(\d+)\s*$")


@dataclass
class ExperimentConfig:
    name: str
    grid: dict
    potential: dict = field(default_factory=dict)
    ansatz: dict = field(default_factory=dict)
    sweep: list = field(default_factory=list)  # (N, M) pairs, ordered by decreasing eps
    tolerances: dict = field(default_factory=dict)
    convergence: dict = field(default_factory=dict)
    output_dir: str = ""
    workers: int = 1
    source: str = "<config>"

    def tolerance(self, key, default=None):
        if key in self.tolerances:
            return self.tolerances[key]
        value = DEFAULT_TOLERANCES.get(key)
        return default if value is None else value

    def grids(self, N=None, M=None):
        space = {k: self.grid[k] for k in ("x_min", "x_max", "M", "boundary") if k in self.grid}
        time = {k: self.grid[k] for k in ("T", "N") if k in self.grid}
        if N is not None:
            time["N"] = N
        if M is not None:
            space["M"] = M
        physical = {k: self.grid[k] for k in ("mass", "hbar") if k in self.grid}
        return make_grids(space, time, physical)

    def echo(self) -> dict:
        """Sections as plain strings; ``from_echo`` turns this back into a config."""
        out = {"experiment": {"name": self.name, "workers": str(self.workers)}}
        if self.output_dir:
            out["experiment"]["output_dir"] = self.output_dir
        out["grid"] = {k: str(v) for k, v in self.grid.items()}
        for section in ("potential", "ansatz", "tolerances", "convergence"):
            values = getattr(self, section)
            if values:
                out[section] = {k: str(v) for k, v in values.items()}
        if self.sweep:
            out["sweep"] = {"pairs": ", ".join(f"{n}x{m}" for n, m in self.sweep)}
        return out


def _line_index(text: str) -> dict:
    """(section, key) -> line number; (section, None) -> header line."""
    index, section = {}, None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            index[(section, None)] = lineno
        elif section is not None:
            key = re.split(r"[=:]", line, maxsplit=1)[0].strip().lower()
            index[(section, key)] = lineno
    return index


class _Locator:
    def __init__(self, source, index):
        self.source, self.index = source, index

    def line(self, section, key=None) -> int:
        return self.index.get((section, key), self.index.get((section, None), 1))

    def error(self, section, key, message) -> ValidationError:
        return ValidationError(f"{self.source}:{self.line(section, key)}: {message}")


def _number(loc, section, values, key, kind=float, default=None):
    if key not in values:
        if default is None:
            raise loc.error(section, None, f"[{section}] is missing required key '{key}'")
        return default
    try:
        return kind(values[key])
    except ValueError:
        raise loc.error(section, key, f"[{section}] {key} = {values[key]!r} is not a valid {kind.__name__}") from None


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=source)
    except configparser.DuplicateOptionError as exc:
        raise ValidationError(f"{source}:{exc.lineno}: duplicate key '{exc.option}' in [{exc.section}]") from None
    except configparser.DuplicateSectionError as exc:
        raise ValidationError(f"{source}:{exc.lineno}: duplicate section [{exc.section}]") from None
    except configparser.MissingSectionHeaderError as exc:
        raise ValidationError(f"{source}:{exc.lineno}: expected a [section] header") from None
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else 1
        raise ValidationError(f"{source}:{lineno}: unparseable line") from None
    loc = _Locator(source, _line_index(text))
    sections = {s.lower(): {k.lower(): v.strip() for k, v in parser[s].items()} for s in parser.sections()}

    if "experiment" not in sections:
        raise ValidationError(f"{source}:1: missing section [experiment]")
    exp = sections["experiment"]
    name = exp.get("name", "").strip().lower()
    if name not in EXPERIMENTS:
        raise loc.error("experiment", "name", f"unknown experiment {name!r}; choose from {', '.join(EXPERIMENTS)}")
    for needed in REQUIRED[name]:
        if needed not in sections:
            raise loc.error("experiment", "name", f"experiment '{name}' requires section [{needed}], which is missing")

    grid = sections["grid"]
    parsed_grid = {
        "x_min": _number(loc, "grid", grid, "x_min"),
        "x_max": _number(loc, "grid", grid, "x_max"),
        "M": _number(loc, "grid", grid, "m", int),
        "boundary": grid.get("boundary", "dirichlet").lower(),
        "T": _number(loc, "grid", grid, "t"),
        "N": _number(loc, "grid", grid, "n", int),
        "mass": _number(loc, "grid", grid, "mass", float, 1.0),
        "hbar": _number(loc, "grid", grid, "hbar", float, 1.0),
    }
    if parsed_grid["boundary"] not in ("dirichlet", "periodic"):
        raise loc.error("grid", "boundary", f"boundary must be dirichlet or periodic, got {parsed_grid['boundary']!r}")

    sweep = []
    if "sweep" in sections:
        raw = sections["sweep"].get("pairs", "")
        for item in filter(None, (p.strip() for p in raw.split(","))):
            match = _PAIR.match(item)
            if not match:
                raise loc.error("sweep", "pairs", f"sweep entry {item!r} is not of the form NxM")
            sweep.append((int(match.group(1)), int(match.group(2))))
        if not sweep:
            raise loc.error("sweep", "pairs", "[sweep] needs a non-empty 'pairs' list")
        sweep.sort(key=lambda nm: nm[0])
        if name == "spectrum":
            for N, M in sweep:
                if M ** (N + 1) > ORACLE_CAP:
                    raise loc.error("sweep", "pairs", f"pair {N}x{M} exceeds the oracle cap M^(N+1) <= {ORACLE_CAP}")

    tolerances = {}
    for key, value in sections.get("tolerances", {}).items():
        if key not in DEFAULT_TOLERANCES:
            raise loc.error("tolerances", key, f"unknown tolerance '{key}'")
        tolerances[key] = _number(loc, "tolerances", sections["tolerances"], key)

    convergence = dict(sections.get("convergence", {}))
    if name == "convergence":
        target = convergence.get("target", "").lower()
        if target not in EXPERIMENTS or target in ("convergence", "commutator"):
            raise loc.error("convergence", "target", f"convergence target {target!r} is not a sweepable experiment")
        if "metric" not in convergence:
            raise loc.error("convergence", None, "[convergence] is missing required key 'metric'")
        convergence["target"] = target

    workers = _number(loc, "experiment", exp, "workers", int, 1)
    if workers < 1:
        raise loc.error("experiment", "workers", "workers must be at least 1")
    cfg = ExperimentConfig(
        name=name,
        grid=parsed_grid,
        potential=dict(sections.get("potential", {})),
        ansatz=dict(sections.get("ansatz", {})),
        sweep=sweep,
        tolerances=tolerances,
        convergence=convergence,
        output_dir=exp.get("output_dir", ""),
        workers=workers,
        source=source,
    )
    # build grids and potential once so that range errors surface here, with a line number
    try:
        space, time, _ = cfg.grids()
    except ValidationError as exc:
        raise loc.error("grid", None, str(exc)) from None
    if cfg.potential:
        try:
            potential_from_config(cfg.potential, space, time)
        except (ValidationError, KeyError, OSError) as exc:
            raise loc.error("potential", "kind", str(exc)) from None
    for N, M in sweep:
        try:
            cfg.grids(N, M)
        except ValidationError as exc:
            raise loc.error("sweep", "pairs", str(exc)) from None
    return cfg


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ValidationError(f"{path}: cannot read config ({exc.strerror})") from None
    return parse_config(text, source=str(path))


def from_echo(echo: dict) -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None)
    parser.read_dict(echo)
    lines = []
    for section in parser.sections():
        lines.append(f"[{section}]")
        lines.extend(f"{k} = {v}" for k, v in parser[section].items())
    return parse_config("\n".join(lines), source="<echo>")


def resolve_output_dir(cfg: ExperimentConfig, override=None) -> str:
    """CLI flag beats the environment, which beats the config file."""
    return override or os.environ.get(ENV_OUTPUT_DIR) or cfg.output_dir or os.path.join("out", cfg.name)


def resolve_workers(cfg: ExperimentConfig, override=None) -> int:
    if override:
        return int(override)
    env = os.environ.get(ENV_WORKERS)
    if env:
        try:
            value = int(env)
        except ValueError:
            raise ValidationError(f"{ENV_WORKERS}={env!r} is not an integer") from None
        if value < 1:
            raise ValidationError(f"{ENV_WORKERS} must be at least 1")
        return value
    return cfg.workers
