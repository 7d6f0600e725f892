"""INI-style files for scenarios and experiment settings.

Scenario file::

    [scenario]
    name = reference
    sampling_region = 0.0, 0.0, 14.0, 7.0
    ue_height = 1.5

    [propagation.5g]
    pl0 = 43.98...
    n = 2.2
    sigma_shadow = 4.0
    wall_loss = 8.0
    range_noise_sigma = 1.0

    [ap.g1]
    tech = 5g
    position = 3.5, 2.5, 2.5
    tx_power = 20.0

    [zone.lab1]
    rect = 0.0, 0.0, 7.0, 5.0

    [walls]
    interior = 7.0, 0.0, 7.0, 5.0

Access points and zones keep the order of their sections.
"""

from __future__ import annotations

import configparser
import io
from pathlib import Path

from .evaluation import ExperimentConfig, ALL_TECHNOLOGIES
from .forest import ForestParams
from .model import AccessPoint, LocfuseError, Position, RadioTechnology, Selector, Zone
from .propagation import PropagationParams, Scenario


class ConfigError(LocfuseError):
    def __init__(self, message: str):
        super().__init__("config-error", message)


def _floats(text: str, n: int, where: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise ConfigError(f"{where}: expected {n} comma-separated numbers, got {text!r}") from None
    if len(vals) != n:
        raise ConfigError(f"{where}: expected {n} numbers, got {len(vals)}")
    return vals


def _join(vals) -> str:
    return ", ".join(repr(float(v)) for v in vals)


def _parser() -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    return cp


def dumps_scenario(sc: Scenario) -> str:
    cp = _parser()
    cp["scenario"] = {
        "name": sc.name,
        "sampling_region": _join(sc.sampling_region),
        "ue_height": repr(float(sc.ue_height)),
    }
    for tech in RadioTechnology:
        if tech not in sc.params:
            continue
        p = sc.params[tech]
        cp[f"propagation.{tech.value}"] = {
            "pl0": repr(p.pl0),
            "n": repr(p.n),
            "sigma_shadow": repr(p.sigma_shadow),
            "wall_loss": repr(p.wall_loss),
            "range_noise_sigma": repr(p.range_noise_sigma),
        }
    for ap in sc.roster:
        cp[f"ap.{ap.ap_id}"] = {
            "tech": ap.tech.value,
            "position": _join((ap.position.x, ap.position.y, ap.position.z)),
            "tx_power": repr(float(ap.tx_power)),
        }
    for z in sc.zones:
        cp[f"zone.{z.zone_id}"] = {"rect": _join(z.rect)}
    cp["walls"] = {f"w{i + 1}": _join(w) for i, w in enumerate(sc.walls)}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue().rstrip("\n") + "\n"


def loads_scenario(text: str) -> Scenario:
    cp = _parser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    if "scenario" not in cp:
        raise ConfigError("missing [scenario] section")
    head = cp["scenario"]
    if "sampling_region" not in head:
        raise ConfigError("[scenario]: missing sampling_region")
    region = _floats(head["sampling_region"], 4, "[scenario] sampling_region")
    try:
        ue_height = float(head.get("ue_height", "1.5"))
        params = {}
        roster = []
        zones = []
        walls = []
        for name in cp.sections():
            sec = cp[name]
            if name.startswith("propagation."):
                tech = RadioTechnology.parse(name.split(".", 1)[1])
                params[tech] = PropagationParams(
                    pl0=float(sec["pl0"]),
                    n=float(sec["n"]),
                    sigma_shadow=float(sec.get("sigma_shadow", "4.0")),
                    wall_loss=float(sec.get("wall_loss", "8.0")),
                    range_noise_sigma=float(sec.get("range_noise_sigma", "1.0")),
                )
            elif name.startswith("ap."):
                x, y, z = _floats(sec["position"], 3, f"[{name}] position")
                roster.append(
                    AccessPoint(
                        name.split(".", 1)[1],
                        RadioTechnology.parse(sec["tech"]),
                        Position(x, y, z),
                        float(sec.get("tx_power", "20.0")),
                    )
                )
            elif name.startswith("zone."):
                zones.append(Zone(name.split(".", 1)[1], *_floats(sec["rect"], 4, f"[{name}] rect")))
            elif name == "walls":
                walls.extend(_floats(v, 4, f"[walls] {k}") for k, v in sec.items())
            elif name != "scenario":
                raise ConfigError(f"unknown section [{name}]")
    except KeyError as exc:
        raise ConfigError(f"missing key {exc}") from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return Scenario(
        roster=tuple(roster),
        zones=tuple(zones),
        walls=tuple(walls),
        params=params,
        sampling_region=region,
        ue_height=ue_height,
        name=head.get("name", "custom"),
    )


def load_scenario(path) -> Scenario:
    return loads_scenario(Path(path).read_text(encoding="utf-8"))


def _forest_section(sec, seed: int = 0) -> ForestParams:
    def opt_int(key, auto_words):
        raw = sec.get(key, "").strip().lower()
        return None if raw in auto_words else int(raw)

    return ForestParams(
        n_trees=int(sec.get("n_trees", "100")),
        max_depth=opt_int("max_depth", ("", "none", "unlimited")),
        min_samples_leaf=int(sec.get("min_samples_leaf", "2")),
        features_per_split=opt_int("features_per_split", ("", "auto")),
        bootstrap=sec.getboolean("bootstrap", True),
        seed=seed,
    )


def loads_experiment(text: str) -> ExperimentConfig:
    """Parse an experiment file with ``[experiment]``, ``[forest.classify]`` and
    ``[forest.regress]`` sections; every key is optional."""
    cp = _parser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    for name in cp.sections():
        if name not in ("experiment", "forest.classify", "forest.regress"):
            raise ConfigError(f"unknown section [{name}]")
    exp = cp["experiment"] if "experiment" in cp else {}
    empty = _parser()
    empty.read_string("[x]")
    try:
        techs = exp.get("technologies")
        technologies = (
            tuple(Selector.parse(t) for t in techs.split(",") if t.strip()) if techs else ALL_TECHNOLOGIES
        )
        return ExperimentConfig(
            test_fraction=float(exp.get("test_fraction", "0.2")),
            n_iterations=int(exp.get("n_iterations", "1000")),
            master_seed=int(exp.get("master_seed", "0")),
            classify_params=_forest_section(cp["forest.classify"] if "forest.classify" in cp else empty["x"]),
            regress_params=_forest_section(cp["forest.regress"] if "forest.regress" in cp else empty["x"]),
            technologies=technologies,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_experiment(path) -> ExperimentConfig:
    return loads_experiment(Path(path).read_text(encoding="utf-8"))


def dumps_experiment(cfg: ExperimentConfig) -> str:
    cp = _parser()
    cp["experiment"] = {
        "test_fraction": repr(cfg.test_fraction),
        "n_iterations": str(cfg.n_iterations),
        "master_seed": str(cfg.master_seed),
        "technologies": ", ".join(t.value for t in cfg.technologies),
    }
    for name, p in (("forest.classify", cfg.classify_params), ("forest.regress", cfg.regress_params)):
        cp[name] = {
            "n_trees": str(p.n_trees),
            "max_depth": "none" if p.max_depth is None else str(p.max_depth),
            "min_samples_leaf": str(p.min_samples_leaf),
            "features_per_split": "auto" if p.features_per_split is None else str(p.features_per_split),
            "bootstrap": "true" if p.bootstrap else "false",
        }
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue().rstrip("\n") + "\n"
