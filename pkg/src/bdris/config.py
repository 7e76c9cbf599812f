"""Experiment configuration: documented key-value schema, parsing, defaults.

The config file is INI-style text with sections ``scenario``, ``system``,
``power``, ``channel``, ``optimizer``, ``experiment``, and ``output``.
Every key is optional and falls back to the documented default; unknown
sections or keys are hard errors reported with their line number, as are
violated invariants.  ``serialize_config`` writes a file that parses back
to an identical configuration.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field

from .channel import ArrayGeometry, LinkBudget, ScenarioConfig, square_grid
from .optimizer import ArmijoOptions, OptimOptions
from .surface import ArchitectureKind, Architecture, Mode

FRAMEWORK_BDRIS = "bdris"
FRAMEWORK_DRIS = "dris"
KNOWN_FRAMEWORKS = (FRAMEWORK_BDRIS, FRAMEWORK_DRIS)


@dataclass(frozen=True)
class ConfigIssue:
    line: int | None
    message: str

    def __str__(self) -> str:
        prefix = f"line {self.line}: " if self.line is not None else ""
        return f"{prefix}{self.message}"


class ConfigError(ValueError):
    """Parse or validation failure; `issues` lists every problem found."""

    def __init__(self, issues: list[ConfigIssue]):
        self.issues = list(issues)
        super().__init__("\n".join(str(i) for i in self.issues))


@dataclass(frozen=True)
class SystemConfig:
    """Surface size sweep, user/RB counts, and architecture selection."""

    elements: tuple[int, ...] = (32,)
    num_ues: int = 10
    num_rbs: int = 10
    architecture: ArchitectureKind = ArchitectureKind.FULLY_CONNECTED
    mode: Mode = Mode.TRANSMISSIVE
    groups: int = 1


@dataclass(frozen=True)
class OutputConfig:
    csv_path: str = "results.csv"
    plot_path: str = "se_vs_elements.svg"


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative sweep: scenario x element counts x power budgets x seeds.

    Each realization redraws both the user positions and the fading, keyed
    by a per-row seed derived from `base_seed`.
    """

    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    system: SystemConfig = field(default_factory=SystemConfig)
    pt_dbm: tuple[float, ...] = (20.0, 25.0, 30.0)
    optimizer: OptimOptions = field(default_factory=OptimOptions)
    realizations: int = 100
    base_seed: int = 1
    frameworks: tuple[str, ...] = KNOWN_FRAMEWORKS
    output: OutputConfig = field(default_factory=OutputConfig)


def system_architecture(system: SystemConfig) -> Architecture:
    if system.architecture is ArchitectureKind.SINGLE_CONNECTED:
        return Architecture.single_connected()
    if system.architecture is ArchitectureKind.GROUP_CONNECTED:
        return Architecture.group_connected(system.groups)
    return Architecture.fully_connected()


def _int(raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"expected an integer, got {raw!r}") from None


def _pos_int(raw: str) -> int:
    value = _int(raw)
    if value < 1:
        raise ValueError(f"expected a positive integer, got {value}")
    return value


def _float(raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ValueError(f"expected a number, got {raw!r}") from None


def _pos_float(raw: str) -> float:
    value = _float(raw)
    if value <= 0:
        raise ValueError(f"expected a positive number, got {value}")
    return value


def _int_list(raw: str) -> tuple[int, ...]:
    tokens = raw.split()
    if not tokens:
        raise ValueError("expected at least one integer")
    return tuple(_pos_int(tok) for tok in tokens)


def _float_list(raw: str) -> tuple[float, ...]:
    tokens = raw.split()
    if not tokens:
        raise ValueError("expected at least one number")
    return tuple(_float(tok) for tok in tokens)


def _float_tuple(count: int):
    def convert(raw: str) -> tuple[float, ...]:
        tokens = raw.split()
        if len(tokens) != count:
            raise ValueError(f"expected {count} numbers, got {len(tokens)}")
        return tuple(_float(tok) for tok in tokens)

    return convert


def _enum(enum_cls):
    def convert(raw: str):
        try:
            return enum_cls(raw.strip().lower())
        except ValueError:
            options = ", ".join(e.value for e in enum_cls)
            raise ValueError(f"expected one of {{{options}}}, got {raw!r}") from None

    return convert


def _frameworks(raw: str) -> tuple[str, ...]:
    tokens = tuple(tok.lower() for tok in raw.split())
    if not tokens:
        raise ValueError("expected at least one framework")
    unknown = [tok for tok in tokens if tok not in KNOWN_FRAMEWORKS]
    if unknown:
        raise ValueError(f"unknown framework {unknown[0]!r} (choose from {KNOWN_FRAMEWORKS})")
    if len(set(tokens)) != len(tokens):
        raise ValueError("duplicate framework")
    return tokens


def _string(raw: str) -> str:
    return raw.strip()


_SCHEMA = {
    "scenario": {
        "uav_position": _float_tuple(3),
        "ue_center": _float_tuple(2),
        "ue_radius": _pos_float,
    },
    "system": {
        "elements": _int_list,
        "ues": _pos_int,
        "rbs": _pos_int,
        "architecture": _enum(ArchitectureKind),
        "mode": _enum(Mode),
        "groups": _pos_int,
    },
    "power": {
        "pt_dbm": _float_list,
    },
    "channel": {
        "carrier_hz": _pos_float,
        "rician_db": _float,
        "link_budget": _enum(LinkBudget),
        "noise_density_mw_per_hz": _pos_float,
        "rb_bandwidth_hz": _pos_float,
        "spacing_wavelengths": _pos_float,
        "feed_offset_m": _pos_float,
    },
    "optimizer": {
        "inner_max_iters": _pos_int,
        "outer_max_iters": _pos_int,
        "inner_rel_tol": _pos_float,
        "outer_rel_tol": _pos_float,
        "armijo_init_step": _pos_float,
        "armijo_shrink": _pos_float,
        "armijo_slope": _pos_float,
        "armijo_max_backtracks": _pos_int,
        "waterfill_tol": _pos_float,
        "restarts": _pos_int,
    },
    "experiment": {
        "realizations": _pos_int,
        "base_seed": _int,
        "frameworks": _frameworks,
    },
    "output": {
        "csv": _string,
        "plot": _string,
    },
}


def _find_line(text: str, section: str, key: str | None = None) -> int | None:
    current = None
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        header = re.match(r"\[(.+)\]", stripped)
        if header:
            current = header.group(1).strip().lower()
            if key is None and current == section:
                return number
            continue
        if key is not None and current == section:
            if re.match(rf"{re.escape(key)}\s*=", stripped, flags=re.IGNORECASE):
                return number
    return None


def parse_config(text: str) -> ExperimentConfig:
    """Parse and fully validate a configuration, or raise `ConfigError`.

    Unknown keys and violated invariants are collected (not fail-fast) and
    reported together with the line they appear on.
    """
    parser = configparser.ConfigParser(
        interpolation=None, delimiters=("=",), inline_comment_prefixes=("#", ";")
    )
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([ConfigIssue(getattr(exc, "lineno", None), str(exc))]) from None

    issues: list[ConfigIssue] = []
    values: dict[tuple[str, str], object] = {}
    for section in parser.sections():
        sec = section.lower()
        if sec not in _SCHEMA:
            issues.append(ConfigIssue(_find_line(text, sec), f"unknown section [{section}]"))
            continue
        for key, raw in parser.items(section):
            if key not in _SCHEMA[sec]:
                issues.append(
                    ConfigIssue(_find_line(text, sec, key), f"unknown key {key!r} in [{section}]")
                )
                continue
            try:
                values[(sec, key)] = _SCHEMA[sec][key](raw)
            except ValueError as exc:
                issues.append(ConfigIssue(_find_line(text, sec, key), f"[{section}] {key}: {exc}"))
    if issues:
        raise ConfigError(issues)

    def got(section: str, key: str, default):
        return values.get((section, key), default)

    system = SystemConfig(
        elements=got("system", "elements", SystemConfig.elements),
        num_ues=got("system", "ues", SystemConfig.num_ues),
        num_rbs=got("system", "rbs", SystemConfig.num_rbs),
        architecture=got("system", "architecture", SystemConfig.architecture),
        mode=got("system", "mode", SystemConfig.mode),
        groups=got("system", "groups", SystemConfig.groups),
    )

    def issue(section: str, key: str, message: str):
        issues.append(ConfigIssue(_find_line(text, section, key), message))

    if system.num_ues > system.num_rbs:
        issue("system", "ues", f"{system.num_ues} users exceed {system.num_rbs} resource blocks")
    if system.architecture is ArchitectureKind.GROUP_CONNECTED:
        if system.groups < 2:
            issue("system", "groups", "group-connected architecture needs groups >= 2")
        else:
            for count in system.elements:
                if not system.groups < count or count % system.groups:
                    issue(
                        "system",
                        "elements",
                        f"group size not integral: {system.groups} groups cannot tile "
                        f"{count} elements",
                    )
    elif ("system", "groups") in values and system.groups != 1:
        issue("system", "groups", "groups is only meaningful for the group architecture")

    spacing = got("channel", "spacing_wavelengths", 0.5)
    try:
        scenario = ScenarioConfig(
            num_ues=system.num_ues,
            uav_position=got("scenario", "uav_position", ScenarioConfig.uav_position),
            ue_center=got("scenario", "ue_center", ScenarioConfig.ue_center),
            ue_radius=got("scenario", "ue_radius", ScenarioConfig.ue_radius),
            carrier_hz=got("channel", "carrier_hz", ScenarioConfig.carrier_hz),
            rician_factor_db=got("channel", "rician_db", ScenarioConfig.rician_factor_db),
            link_budget=got("channel", "link_budget", ScenarioConfig.link_budget),
            array=square_grid(system.elements[0], spacing),
            noise_density_mw_per_hz=got(
                "channel", "noise_density_mw_per_hz", ScenarioConfig.noise_density_mw_per_hz
            ),
            rb_bandwidth_hz=got("channel", "rb_bandwidth_hz", ScenarioConfig.rb_bandwidth_hz),
            feed_offset_m=got("channel", "feed_offset_m", ScenarioConfig.feed_offset_m),
        )
    except ValueError as exc:
        issues.append(ConfigIssue(None, f"[scenario/channel]: {exc}"))
        scenario = None

    try:
        optimizer = OptimOptions(
            inner_max_iters=got("optimizer", "inner_max_iters", 200),
            outer_max_iters=got("optimizer", "outer_max_iters", 50),
            inner_rel_tol=got("optimizer", "inner_rel_tol", 1e-6),
            outer_rel_tol=got("optimizer", "outer_rel_tol", 1e-5),
            armijo=ArmijoOptions(
                init_step=got("optimizer", "armijo_init_step", 1.0),
                shrink=got("optimizer", "armijo_shrink", 0.5),
                slope=got("optimizer", "armijo_slope", 1e-4),
                max_backtracks=got("optimizer", "armijo_max_backtracks", 30),
            ),
            waterfill_tol=got("optimizer", "waterfill_tol", 1e-9),
            restarts=got("optimizer", "restarts", 8),
        )
    except ValueError as exc:
        issues.append(ConfigIssue(None, f"[optimizer]: {exc}"))
        optimizer = None

    if issues:
        raise ConfigError(issues)

    return ExperimentConfig(
        scenario=scenario,
        system=system,
        pt_dbm=got("power", "pt_dbm", ExperimentConfig.pt_dbm),
        optimizer=optimizer,
        realizations=got("experiment", "realizations", ExperimentConfig.realizations),
        base_seed=got("experiment", "base_seed", ExperimentConfig.base_seed),
        frameworks=got("experiment", "frameworks", ExperimentConfig.frameworks),
        output=OutputConfig(
            csv_path=got("output", "csv", OutputConfig.csv_path),
            plot_path=got("output", "plot", OutputConfig.plot_path),
        ),
    )


def default_config() -> ExperimentConfig:
    return parse_config("")


def serialize_config(cfg: ExperimentConfig) -> str:
    """Emit text that `parse_config` maps back to an identical configuration."""

    def nums(seq) -> str:
        return " ".join(repr(v) if isinstance(v, float) else str(v) for v in seq)

    scn = cfg.scenario
    opt = cfg.optimizer
    lines = [
        "[scenario]",
        f"uav_position = {nums(scn.uav_position)}",
        f"ue_center = {nums(scn.ue_center)}",
        f"ue_radius = {scn.ue_radius!r}",
        "",
        "[system]",
        f"elements = {nums(cfg.system.elements)}",
        f"ues = {cfg.system.num_ues}",
        f"rbs = {cfg.system.num_rbs}",
        f"architecture = {cfg.system.architecture.value}",
        f"mode = {cfg.system.mode.value}",
        f"groups = {cfg.system.groups}",
        "",
        "[power]",
        f"pt_dbm = {nums(cfg.pt_dbm)}",
        "",
        "[channel]",
        f"carrier_hz = {scn.carrier_hz!r}",
        f"rician_db = {scn.rician_factor_db!r}",
        f"link_budget = {scn.link_budget.value}",
        f"noise_density_mw_per_hz = {scn.noise_density_mw_per_hz!r}",
        f"rb_bandwidth_hz = {scn.rb_bandwidth_hz!r}",
        f"spacing_wavelengths = {scn.array.spacing_wavelengths!r}",
        f"feed_offset_m = {scn.feed_offset_m!r}",
        "",
        "[optimizer]",
        f"inner_max_iters = {opt.inner_max_iters}",
        f"outer_max_iters = {opt.outer_max_iters}",
        f"inner_rel_tol = {opt.inner_rel_tol!r}",
        f"outer_rel_tol = {opt.outer_rel_tol!r}",
        f"armijo_init_step = {opt.armijo.init_step!r}",
        f"armijo_shrink = {opt.armijo.shrink!r}",
        f"armijo_slope = {opt.armijo.slope!r}",
        f"armijo_max_backtracks = {opt.armijo.max_backtracks}",
        f"waterfill_tol = {opt.waterfill_tol!r}",
        f"restarts = {opt.restarts}",
        "",
        "[experiment]",
        f"realizations = {cfg.realizations}",
        f"base_seed = {cfg.base_seed}",
        f"frameworks = {' '.join(cfg.frameworks)}",
        "",
        "[output]",
        f"csv = {cfg.output.csv_path}",
        f"plot = {cfg.output.plot_path}",
        "",
    ]
    return "\n".join(lines)
