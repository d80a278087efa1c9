"""Bank, config and region file formats.

Banks and configs are JSON. Floats in banks are written with 17 significant
digits so that ``save(load(save(bank)))`` is byte-identical to the first save.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .barrier import MinQuadraticBarrier, QuadraticBarrierPair
from .plants import PLANTS, Plant, make_plant
from .synthesis import SynthesisConfig

SCHEMA_VERSION = 1
REGION_POINTS = 256


class FormatError(ValueError):
    """A bank, config or projection string could not be parsed."""


def _emit(value, indent=0) -> str:
    pad = "  " * indent
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [f'{pad}  {json.dumps(str(k))}: {_emit(v, indent + 1)}' for k, v in value.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) for v in value):
            return "[" + ", ".join(_emit(v) for v in value) + "]"
        items = [pad + "  " + _emit(v, indent + 1) for v in value]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(value, np.ndarray):
        return _emit(value.tolist(), indent)
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if not math.isfinite(value):
            raise FormatError(f"cannot serialize non-finite value {value}")
        return format(value, ".17g")
    if value is None:
        return "null"
    return json.dumps(str(value))


def dumps(data) -> str:
    """Serialize nested dicts/lists/arrays as JSON with 17-digit floats."""
    return _emit(data) + "\n"


@dataclass(frozen=True)
class BankFile:
    """A bank together with the plant and synthesis settings that produced it."""

    plant: Plant
    config: SynthesisConfig
    bank: MinQuadraticBarrier


def bank_to_dict(plant: Plant, config: SynthesisConfig, bank: MinQuadraticBarrier) -> dict:
    pairs = []
    for pair in bank:
        pairs.append(
            {
                "x_e": pair.x_e,
                "u_e": pair.u_e,
                "Q": pair.Q,
                "K": pair.K,
                "log_det": pair.log_det,
                "margins": dict(pair.margins or {}),
            }
        )
    return {
        "schema_version": SCHEMA_VERSION,
        "plant": {"name": plant.name, "parameters": plant.parameters},
        "synthesis": config.to_dict(),
        "pairs": pairs,
        "skipped": [{"x_e": list(x_e), "reason": reason} for x_e, reason in bank.skipped],
    }


def save_bank(path, plant: Plant, config: SynthesisConfig, bank: MinQuadraticBarrier) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(bank_to_dict(plant, config, bank)))


def _require(data, key, where):
    if not isinstance(data, dict) or key not in data:
        raise FormatError(f"missing key {key!r} in {where}")
    return data[key]


def bank_from_dict(data) -> BankFile:
    version = _require(data, "schema_version", "bank")
    if version != SCHEMA_VERSION:
        raise FormatError(f"unsupported bank schema version {version!r}")
    plant_entry = _require(data, "plant", "bank")
    try:
        plant = make_plant(_require(plant_entry, "name", "plant"), **plant_entry.get("parameters", {}))
        config = SynthesisConfig.from_dict(_require(data, "synthesis", "bank"))
        pairs = tuple(
            QuadraticBarrierPair(
                x_e=_require(p, "x_e", "pair"),
                u_e=_require(p, "u_e", "pair"),
                Q=_require(p, "Q", "pair"),
                K=_require(p, "K", "pair"),
                log_det=p.get("log_det"),
                margins=p.get("margins"),
            )
            for p in _require(data, "pairs", "bank")
        )
        skipped = tuple((tuple(s["x_e"]), s["reason"]) for s in data.get("skipped", []))
        bank = MinQuadraticBarrier(pairs, skipped)
    except FormatError:
        raise
    except (TypeError, ValueError, KeyError, np.linalg.LinAlgError) as exc:
        raise FormatError(f"malformed bank: {exc}") from exc
    if bank.n_states != plant.n_states or bank.n_inputs != plant.n_inputs:
        raise FormatError("bank dimensions do not match its plant")
    return BankFile(plant, config, bank)


def load_bank(path) -> BankFile:
    with open(path) as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON ({exc})") from exc
    return bank_from_dict(data)


@dataclass(frozen=True)
class RunConfig:
    """Parsed synthesis config: plant, equilibrium states and program settings."""

    plant: Plant
    equilibria: np.ndarray
    synthesis: SynthesisConfig


def config_from_dict(data) -> RunConfig:
    """Parse a synthesis config.

    ``equilibria`` is either ``{"count", "low", "high"}`` (a uniform grid of
    the plant's manifold coordinate) or ``{"values": [...]}`` holding scalar
    manifold coordinates or full states.
    """
    if not isinstance(data, dict):
        raise FormatError("config must be a JSON object")
    unknown = set(data) - {"plant", "parameters", "equilibria", "synthesis"}
    if unknown:
        raise FormatError(f"unknown config keys: {sorted(unknown)}")
    name = _require(data, "plant", "config")
    if name not in PLANTS:
        raise FormatError(f"unknown plant {name!r}; expected one of {sorted(PLANTS)}")
    try:
        plant = make_plant(name, **data.get("parameters", {}))
        synthesis = SynthesisConfig.from_dict(data.get("synthesis", {}))
    except (TypeError, ValueError) as exc:
        raise FormatError(str(exc)) from exc
    grid = data.get("equilibria", {})
    if not isinstance(grid, dict):
        raise FormatError("equilibria must be an object")
    try:
        if "values" in grid:
            values = np.asarray(grid["values"], dtype=float)
            if values.ndim == 1:
                equilibria = np.array([plant.equilibrium_state(s) for s in values])
            else:
                equilibria = values
        else:
            count = int(grid.get("count", 50))
            low = float(grid.get("low", -0.98))
            high = float(grid.get("high", 0.98))
            if count < 1:
                raise FormatError("equilibrium count must be positive")
            equilibria = plant.equilibrium_grid(count, low, high)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"bad equilibria entry: {exc}") from exc
    if equilibria.ndim != 2 or equilibria.shape[1] != plant.n_states or len(equilibria) == 0:
        raise FormatError(f"equilibria must be a nonempty list of {plant.n_states}-vectors")
    return RunConfig(plant, equilibria, synthesis)


def load_config(path) -> RunConfig:
    with open(path) as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON ({exc})") from exc
    return config_from_dict(data)


def parse_projection(text: str, plant: Plant) -> tuple[int, int]:
    """Resolve ``"c1,c2"`` to state indices; names or ``x<i>`` are accepted."""
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 2:
        raise FormatError(f"projection must name two coordinates, got {text!r}")
    indices = []
    for part in parts:
        if part in plant.state_names:
            indices.append(plant.state_names.index(part))
        elif part.startswith("x") and part[1:].isdigit() and int(part[1:]) < plant.n_states:
            indices.append(int(part[1:]))
        else:
            raise FormatError(f"unknown coordinate {part!r}; expected one of {list(plant.state_names)}")
    if indices[0] == indices[1]:
        raise FormatError("projection coordinates must differ")
    return indices[0], indices[1]


def projected_shape(P: np.ndarray, coords) -> np.ndarray:
    """Shape matrix ``S`` of the shadow ``{z : z^T S z <= 1}`` of ``{d : d^T P d <= 1}``.

    ``S`` is the Schur complement of the complementary block of ``P``.
    """
    coords = list(coords)
    rest = [k for k in range(P.shape[0]) if k not in coords]
    P_aa = P[np.ix_(coords, coords)]
    if not rest:
        return P_aa
    P_ab = P[np.ix_(coords, rest)]
    P_bb = P[np.ix_(rest, rest)]
    S = P_aa - P_ab @ np.linalg.solve(P_bb, P_ab.T)
    return 0.5 * (S + S.T)


def projected_boundary(pair: QuadraticBarrierPair, coords, points=REGION_POINTS) -> np.ndarray:
    """``points`` samples on the boundary of the pair's ellipse projected onto ``coords``."""
    S = projected_shape(pair.P, coords)
    L = np.linalg.cholesky(S)
    phi = 2.0 * np.pi * np.arange(points) / points
    circle = np.stack([np.cos(phi), np.sin(phi)])
    return pair.x_e[list(coords)] + np.linalg.solve(L.T, circle).T


def export_region(path, bank: MinQuadraticBarrier, coords, names, points=REGION_POINTS) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["pair", "k", names[0], names[1]])
        for n, pair in enumerate(bank):
            for k, (a, b) in enumerate(projected_boundary(pair, coords, points)):
                writer.writerow([n, k, format(float(a), ".17g"), format(float(b), ".17g")])
