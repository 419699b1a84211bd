"""YAML run-configuration parsing and validation.

Schema (all top-level keys optional unless noted):

    n_qubits:     int, required
    system_index: int, default 0
    omega:        scalar or per-site list, default 1.0
    beta:         scalar, default 1.0
    edges:        list of [i, j, J] or [i, j, Jx, Jy, Jz]
    dephasing:    list of [site, gamma]
    thermal:      list of [site, gamma]
    grid:         "short" | "long" | {t_start, t_end, n_points}
    seed:         int, default 0
    randomize:    map of parameter name -> [min, max]

Unknown keys are rejected by name.  Randomization is only available when
the edges describe the canonical six-qubit layered network, since the
randomized parameters are its coupling classes.
"""

from __future__ import annotations

from pathlib import Path

import yaml

from .errors import ConfigError
from .lindblad import TimeGrid
from .operators import BathTopology, Edge
from .pipeline import RunConfig, infer_layered_params
from .presets import GRIDS

_TOP_KEYS = {
    "n_qubits",
    "system_index",
    "omega",
    "beta",
    "edges",
    "dephasing",
    "thermal",
    "grid",
    "seed",
    "randomize",
}
_GRID_KEYS = {"t_start", "t_end", "n_points"}


def _parse_edges(raw) -> list[Edge]:
    edges = []
    for item in raw or []:
        if not isinstance(item, (list, tuple)) or len(item) not in (3, 5):
            raise ConfigError(f"edge entries must be [i, j, J] or [i, j, Jx, Jy, Jz], got {item!r}")
        i, j = int(item[0]), int(item[1])
        if len(item) == 3:
            edges.append(Edge.isotropic(i, j, float(item[2])))
        else:
            edges.append(Edge(i, j, float(item[2]), float(item[3]), float(item[4])))
    return edges


def _parse_rates(raw, key: str) -> list[tuple[int, float]]:
    rates = []
    for item in raw or []:
        if not isinstance(item, (list, tuple)) or len(item) != 2:
            raise ConfigError(f"{key} entries must be [site, gamma], got {item!r}")
        rates.append((int(item[0]), float(item[1])))
    return rates


def _parse_grid(raw) -> TimeGrid:
    if raw is None:
        return GRIDS["short"]
    if isinstance(raw, str):
        if raw not in GRIDS:
            raise ConfigError(f"unknown grid preset {raw!r}; use one of {sorted(GRIDS)}")
        return GRIDS[raw]
    if not isinstance(raw, dict):
        raise ConfigError("grid must be a preset name or a {t_start, t_end, n_points} map")
    unknown = set(raw) - _GRID_KEYS
    if unknown:
        raise ConfigError(f"unknown grid key {sorted(unknown)[0]!r}")
    missing = _GRID_KEYS - set(raw)
    if missing:
        raise ConfigError(f"grid is missing key {sorted(missing)[0]!r}")
    try:
        return TimeGrid(float(raw["t_start"]), float(raw["t_end"]), int(raw["n_points"]))
    except ValueError as exc:
        raise ConfigError(f"invalid grid: {exc}") from exc


def parse_config(path) -> RunConfig:
    """Load and validate a YAML run configuration."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"config {path} must be a key-value map")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config key {sorted(unknown)[0]!r}")
    if "n_qubits" not in doc:
        raise ConfigError("config is missing required key 'n_qubits'")

    try:
        topo = BathTopology(
            n_qubits=int(doc["n_qubits"]),
            omega=doc.get("omega", 1.0),
            beta=float(doc.get("beta", 1.0)),
            edges=_parse_edges(doc.get("edges")),
            dephasing=_parse_rates(doc.get("dephasing"), "dephasing"),
            thermal=_parse_rates(doc.get("thermal"), "thermal"),
            system_index=int(doc.get("system_index", 0)),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    randomize = None
    if doc.get("randomize"):
        raw = doc["randomize"]
        if not isinstance(raw, dict):
            raise ConfigError("randomize must map parameter names to [min, max]")
        randomize = {}
        for key, bounds in raw.items():
            if not isinstance(bounds, (list, tuple)) or len(bounds) != 2:
                raise ConfigError(f"randomize range for {key!r} must be [min, max]")
            lo, hi = float(bounds[0]), float(bounds[1])
            if lo > hi:
                raise ConfigError(f"randomize range for {key!r} has min > max")
            randomize[key] = (lo, hi)

    return RunConfig(
        topology=topo,
        grid=_parse_grid(doc.get("grid")),
        seed=int(doc.get("seed", 0)),
        name=path.stem,
        params=infer_layered_params(topo),
        randomize=randomize,
    )
