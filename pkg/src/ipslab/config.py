"""Strict run-configuration parsing.

Configurations are JSON with one section per ingredient. Physical
parameters (model parameters, marginals, windows, horizons) must be
explicit; only runtime knobs (tolerances, seeds, output paths) carry
defaults, and those defaults are recorded into the manifest. Unknown keys
are rejected so typos fail loudly with a field path.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .lattice import Distribution, ProductMeasure, SpinConfig, Volume
from .models import RateModel, build_model

#: Runtime defaults, recorded verbatim into every manifest.
DEFAULTS = {
    "seed": 12345,
    "evolve_tol": 1e-12,
    "stationary_tol": 1e-10,
    "threads": 1,
    "tolerance_profile": "strict",
}


def load_config(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}"
        ) from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return cfg


def _require(section: dict, field: str, where: str):
    if field not in section:
        raise ConfigError(f"{where}: missing required field {field!r}")
    return section[field]


def _reject_unknown(section: dict, allowed, where: str) -> None:
    unknown = set(section) - set(allowed)
    if unknown:
        raise ConfigError(f"{where}: unknown fields {sorted(unknown)}")


def parse_volume(cfg: dict) -> Volume:
    section = _require(cfg, "volume", "config")
    _reject_unknown(section, {"d", "side", "q", "boundary", "frozen_shell"}, "volume")
    kwargs = {
        "d": int(_require(section, "d", "volume")),
        "side": int(_require(section, "side", "volume")),
        "q": int(_require(section, "q", "volume")),
        "boundary": section.get("boundary", "periodic"),
    }
    if "frozen_shell" in section:
        kwargs["frozen_shell"] = tuple(
            (tuple(int(c) for c in coord), int(spin))
            for coord, spin in section["frozen_shell"]
        )
    try:
        return Volume(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"volume: {exc}") from exc


def parse_model(cfg: dict, volume: Volume) -> RateModel:
    section = _require(cfg, "model", "config")
    _reject_unknown(section, {"name", "params"}, "model")
    name = _require(section, "name", "model")
    params = section.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("model.params: must be an object")
    try:
        model = build_model(name, volume.q, params)
        model.validate_volume(volume)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"model: {exc}") from exc
    return model


def parse_mu(cfg: dict, volume: Volume) -> ProductMeasure:
    section = _require(cfg, "mu", "config")
    _reject_unknown(section, {"kind", "p_one", "marginals", "marginal"}, "mu")
    kind = _require(section, "kind", "mu")
    try:
        if kind == "uniform":
            return ProductMeasure.uniform(volume)
        if kind == "bernoulli":
            return ProductMeasure.bernoulli(volume, float(_require(section, "p_one", "mu")))
        if kind == "single":
            return ProductMeasure.from_single(
                _require(section, "marginal", "mu"), volume.n_sites
            )
        if kind == "explicit":
            return ProductMeasure(np.asarray(_require(section, "marginals", "mu"), dtype=float))
    except ValueError as exc:
        raise ConfigError(f"mu: {exc}") from exc
    raise ConfigError(f"mu.kind: unknown kind {kind!r}")


def parse_nu0(cfg: dict, volume: Volume, mu: ProductMeasure | None = None) -> Distribution:
    section = _require(cfg, "nu0", "config")
    _reject_unknown(
        section, {"kind", "marginals", "marginal", "spins", "seed", "concentration"}, "nu0"
    )
    kind = _require(section, "kind", "nu0")
    try:
        if kind == "mu":
            if mu is None:
                raise ConfigError("nu0.kind = mu requires a mu section")
            return mu.expand()
        if kind == "product":
            if "marginal" in section:
                pm = ProductMeasure.from_single(section["marginal"], volume.n_sites)
            else:
                pm = ProductMeasure(
                    np.asarray(_require(section, "marginals", "nu0"), dtype=float)
                )
            return pm.expand()
        if kind == "point":
            return Distribution.point_mass(
                volume, SpinConfig(tuple(_require(section, "spins", "nu0")))
            )
        if kind == "dirichlet":
            rng = np.random.default_rng(int(_require(section, "seed", "nu0")))
            conc = float(section.get("concentration", 1.0))
            n = volume.require_dense()
            return Distribution.from_weights(
                volume.q, volume.n_sites, rng.dirichlet(np.full(n, conc))
            )
    except ValueError as exc:
        raise ConfigError(f"nu0: {exc}") from exc
    raise ConfigError(f"nu0.kind: unknown kind {kind!r}")


def parse_window(cfg: dict, volume: Volume) -> tuple[int, ...]:
    section = _require(cfg, "window", "config")
    _reject_unknown(section, {"kind", "radius", "sites", "coords"}, "window")
    kind = _require(section, "kind", "window")
    try:
        if kind == "box":
            return volume.centered_box(int(_require(section, "radius", "window")))
        if kind == "sites":
            sites = tuple(int(s) for s in _require(section, "sites", "window"))
            if sites != tuple(sorted(set(sites))):
                raise ConfigError("window.sites: must be sorted distinct site indices")
            if sites and (sites[0] < 0 or sites[-1] >= volume.n_sites):
                raise ConfigError("window.sites: site index out of range")
            return sites
        if kind == "coords":
            return tuple(
                sorted(volume.site_of(tuple(c)) for c in _require(section, "coords", "window"))
            )
    except ValueError as exc:
        raise ConfigError(f"window: {exc}") from exc
    raise ConfigError(f"window.kind: unknown kind {kind!r}")


def parse_times(cfg: dict) -> list[float]:
    section = _require(cfg, "times", "config")
    _reject_unknown(section, {"start", "stop", "num", "values"}, "times")
    if "values" in section:
        times = [float(t) for t in section["values"]]
    else:
        start = float(_require(section, "start", "times"))
        stop = float(_require(section, "stop", "times"))
        num = int(_require(section, "num", "times"))
        times = list(np.linspace(start, stop, num))
    if any(t < 0 for t in times) or any(b <= a for a, b in zip(times, times[1:])):
        raise ConfigError("times: must be nonnegative and strictly increasing")
    return times


def runtime(cfg: dict, key: str, override=None):
    """Runtime knob with a recorded default; CLI overrides win."""
    if override is not None:
        return override
    return cfg.get(key, DEFAULTS[key])
