"""Experiment configuration: a flat INI file with sections, plus static
validation.  Keys follow the external interface: geometry (dim,
side_lengths, grid_sizes), integrator (epsilon, dt_factor, t_end,
snapshot_stride, seed), initial (kind + parameters), analysis blocks with
enable flags, and an output directory (env GLTORUS_OUT overrides the root).
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field

import numpy as np

from .dynamics import (IntegratorConfig, PhaseWave, RandomBudget, VortexLines,
                       VortexPoints, VortexRing)
from .errors import GLInputError
from .geometry import TorusGeometry

ENV_OUTPUT_ROOT = "GLTORUS_OUT"


def _floats(text):
    return tuple(float(v) for v in str(text).replace(";", ",").split(",") if v.strip())


def _ints(text):
    return tuple(int(v) for v in str(text).split(",") if v.strip())


def parse_radii(text):
    """'r0:r1:n' -> n radii from r0 to r1; or a comma list."""
    if ":" in str(text):
        lo, hi, n = str(text).split(":")
        return tuple(np.linspace(float(lo), float(hi), int(n)))
    return _floats(text)


def parse_items(text):
    """'x,y,+1; x,y,-1' -> ((pos, degree), ...)."""
    items = []
    for chunk in str(text).split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = [p.strip() for p in chunk.split(",")]
        if len(parts) != 3:
            raise GLInputError(f"vortex item needs 'x,y,degree': {chunk!r}")
        items.append(((float(parts[0]), float(parts[1])), int(parts[2])))
    return tuple(items)


@dataclass
class ExperimentConfig:
    geometry: TorusGeometry
    epsilons: tuple                 # strictly decreasing ladder (often length 1)
    integrator: IntegratorConfig
    initial: object
    seed: int
    out_dir: str
    analyses: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    @property
    def epsilon(self) -> float:
        return self.epsilons[0]

    def is_ladder(self) -> bool:
        return len(self.epsilons) > 1


def _initial_from_section(sec) -> object:
    kind = sec.get("kind", "phase_wave").strip().lower().replace("-", "_")
    if kind == "phase_wave":
        return PhaseWave(_ints(sec.get("k", "0,0,0")))
    if kind == "vortex_ring":
        return VortexRing(_floats(sec.get("center", "0.5,0.5,0.5")),
                          float(sec.get("radius", 0.3)),
                          int(sec.get("axis", 2)))
    if kind == "vortex_lines":
        return VortexLines(parse_items(sec.get("items", "")), int(sec.get("axis", 2)))
    if kind == "vortex_points":
        return VortexPoints(parse_items(sec.get("items", "")))
    if kind == "random_budget":
        return RandomBudget(float(sec.get("m0", 1.0)), int(sec.get("seed", 0)))
    raise GLInputError(f"unknown initial kind {kind!r}")


def load_config(path) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = parser.read(path)
    if not read:
        raise GLInputError(f"cannot read config {path}")
    try:
        geo = parser["geometry"]
        side = _floats(geo.get("side_lengths", "1,1,1"))
        grid = _ints(geo.get("grid_sizes", "64,64,64"))
        dim = int(geo.get("dim", len(side)))
        if dim != len(side) or dim != len(grid):
            raise GLInputError(f"dim={dim} inconsistent with side/grid lengths")
        geom = TorusGeometry(side, grid)

        integ = parser["integrator"]
        epsilons = _floats(integ.get("epsilon", "0.05"))
        if any(b >= a for a, b in zip(epsilons, epsilons[1:])):
            raise GLInputError("epsilon ladder must be strictly decreasing")
        cfg = IntegratorConfig(
            dt_factor=float(integ.get("dt_factor", 0.2)),
            t_end=float(integ.get("t_end", 0.0)),
            snapshot_stride=int(integ.get("snapshot_stride", 1)),
        )
        seed = int(integ.get("seed", 0))
        initial = _initial_from_section(parser["initial"]) if parser.has_section("initial") \
            else PhaseWave((0,) * dim)
    except KeyError as exc:
        raise GLInputError(f"config {path}: missing section {exc}") from exc

    out_dir = "out"
    if parser.has_section("output"):
        out_dir = parser["output"].get("directory", "out")
    root = os.environ.get(ENV_OUTPUT_ROOT)
    if root:
        out_dir = os.path.join(root, out_dir)

    analyses = {}
    for name in ("monotonicity", "clearing_out", "hodge", "gauge", "vortex", "mcf"):
        if parser.has_section(name):
            sec = dict(parser[name])
            sec["enable"] = parser[name].getboolean("enable", fallback=False)
            analyses[name] = sec

    raw = {s: dict(parser[s]) for s in parser.sections()}
    return ExperimentConfig(geom, epsilons, cfg, initial, seed, out_dir, analyses, raw)


def validate(config: ExperimentConfig) -> list:
    """Static checks; returns diagnostics (not raised)."""
    diags = []
    geom = config.geometry
    h_max = max(geom.spacing)
    for eps in config.epsilons:
        vortex_kind = isinstance(config.initial, (VortexRing, VortexLines, VortexPoints))
        if vortex_kind and h_max > eps / 2.0:
            diags.append(f"warning: grid spacing {h_max:.4g} > eps/2 = {eps / 2:.4g} "
                         f"(eps={eps}): vortex cores under-resolved")
        if config.integrator.dt_factor > 0.5:
            diags.append(f"warning: dt_factor {config.integrator.dt_factor} > 0.5: "
                         "explicit reaction step may be unstable")
    if isinstance(config.initial, VortexRing):
        perp = [i for i in range(geom.dim) if i != config.initial.axis]
        min_side = min(geom.side_lengths[i] for i in perp)
        if 2.0 * config.initial.radius >= min_side:
            diags.append(f"error: ring diameter {2 * config.initial.radius} "
                         f">= min side {min_side}")
    mono = config.analyses.get("monotonicity")
    if mono and mono.get("enable"):
        try:
            radii = parse_radii(mono.get("radii", ""))
            if radii and (min(radii) <= h_max or max(radii) >= geom.inj):
                diags.append(f"warning: monotonicity radii outside (h, inj) = "
                             f"({h_max:.4g}, {geom.inj:.4g})")
            T = float(mono.get("t", mono.get("T", config.integrator.t_end)))
            if radii and max(radii) > np.sqrt(max(T, 0)) + 1e-12:
                diags.append("error: monotonicity radii exceed sqrt(T)")
        except (ValueError, GLInputError) as exc:
            diags.append(f"error: bad monotonicity block: {exc}")
    return diags
