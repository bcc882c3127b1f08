"""Command-line front end.

Every subcommand turns its flags into an experiment configuration (merged
over an optional ``--config`` JSON file), validates it against
:data:`CONFIG_SCHEMA`, runs, and writes JSON results, SVG figures and a
``manifest.json`` into the output directory.

Exit codes: 0 success, 1 domain or configuration error, 2 usage error.
Wavelengths on the command line and in configs are in nm unless a key says
otherwise; lengths are in um.
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import json
import logging
import math
import os
import sys
import tempfile
import time
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .analysis import (
    EnsembleStats,
    ResonanceFit,
    Spectrum,
    ensemble_stats,
    fit_lorentzian,
    format_table,
    lorentzian,
    process_plan,
    read_csv,
    scattering_loss_ratio,
    synthetic_ensemble,
    synthetic_spectrum,
)
from .errors import ConfigError, ResforgeError
from .fdtd import FieldRecord, PmlParams, SimulationDomain, export_record, stack_reflectance
from .geometry import (
    LayerStack,
    LayoutDocument,
    Material,
    MaterialLibrary,
    PhcCavitySpec,
    RingSpec,
    device_from_dict,
    device_to_dict,
    export_layout,
    grid_placements,
    membrane_stack,
    silica_stack,
    waveguide_cross_section,
)
from .modes import TE, cross_section_modes, fundamental_solver, group_index, stacked_slab_index
from .resonator import (
    calibrate_coupling,
    cavity_resonance,
    cooperativity,
    effective_indices,
    energy_density,
    fsr,
    mirror_band,
    phc_scene,
    purcell_factor,
    purcell_map,
    ring_spectra,
    RingModel,
    select_gap,
    transfer_matrix,
)
from .svg import render_svg

log = logging.getLogger("resforge")

SUBCOMMANDS = ("modes", "ring", "cavity", "purcell", "fit", "stats", "layout", "process", "simulate", "plot")

# ---------------------------------------------------------------- configuration

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_NONNEG = {"type": "number", "minimum": 0}
_PAIR = {"type": "array", "items": _POS, "minItems": 2, "maxItems": 2}
_STR = {"type": "string"}


def _obj(props: dict, required=()) -> dict:
    return {"type": "object", "properties": props, "additionalProperties": False, "required": list(required)}


def _device_schema() -> dict:
    kinds = {
        "ring": {k: _POS for k in ("radius", "waveguide_width", "waveguide_height", "bus_width", "bus_length")}
        | {"gap_1": _NONNEG, "gap_2": _NONNEG},
        "phc": {k: _POS for k in ("waveguide_width", "waveguide_height", "fin_width", "fin_length",
                                   "mirror_pitch", "taper_fraction", "lead_length")}
        | {"n_mirror_fins": {"type": "integer", "minimum": 0}, "n_taper_fins": {"type": "integer", "minimum": 1}},
        "grating": {"period": _POS, "duty_cycle": _POS, "n_teeth": {"type": "integer", "minimum": 1},
                    "width": _POS, "height": _POS},
    }
    branches = [
        {"if": {"properties": {"kind": {"const": k}}},
         "then": _obj({"kind": {"const": k}} | props)}
        for k, props in kinds.items()
    ]
    return {"type": "object", "required": ["kind"],
            "properties": {"kind": {"enum": sorted(kinds)}}, "allOf": branches}


CONFIG_SCHEMA = _obj({
    "device": _device_schema(),
    "stack": _obj({
        "preset": {"enum": ["silica", "membrane"]},
        "layers": {"type": "array", "items": _obj({"material": _STR, "thickness": _POS},
                                                  ["material", "thickness"])},
        "cover": _STR,
        "diamond_thickness": _POS,
        "hsq_thickness": _POS,
    }),
    "materials": {"type": "object", "additionalProperties": _obj({
        "refractive_index": {"type": "number", "minimum": 1},
        "table": {"type": "array", "minItems": 2, "items": {
            "type": "array", "items": _POS, "minItems": 2, "maxItems": 2}},
    })},
    "simulation": _obj({
        "dx": _POS,
        "courant": _POS,
        "pml": _obj({"thickness": {"type": "integer", "minimum": 0}, "order": _NUM,
                     "sigma_scale": _POS, "kappa_max": {"type": "number", "minimum": 1},
                     "alpha_max": _NONNEG}),
        "max_steps": {"type": "integer", "minimum": 1},
        "band_nm": _PAIR,
        "points": {"type": "integer", "minimum": 2},
        "pixels_per_wavelength": _POS,
        "padding": _POS,
        "background": {"oneOf": [{"enum": ["substrate", "cover"]}, {"type": "number", "minimum": 1}]},
        "format": {"enum": ["bin", "csv"]},
        "snapshot": {"type": "boolean"},
    }),
    "analysis": _obj({
        "wavelength_nm": _POS,
        "design_wavelength_nm": _POS,
        "polarization": {"enum": ["TE", "TM"]},
        "n_modes": {"type": "integer", "minimum": 1},
        "width": _POS,
        "height": _POS,
        "core": _STR,
        "n_eff": _POS,
        "n_g": _POS,
        "t1": {"type": "number", "minimum": 0, "maximum": 1},
        "t2": {"type": "number", "minimum": 0, "maximum": 1},
        "round_trip": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "q_intrinsic": _POS,
        "span_nm": _POS,
        "coupling": _obj({"gaps": {"type": "array", "items": _NONNEG},
                          "kappas": {"type": "array", "items": _POS}}, ["gaps", "kappas"]),
        "q": _POS,
        "mode_volume": _POS,
        "debye_waller": _POS,
        "quantum_efficiency": _POS,
        "dephasing_ratio": _POS,
        "window_nm": _PAIR,
        "orientation": {"enum": ["peak", "dip"]},
        "inputs": {"type": "array", "items": _STR},
        "labels": {"type": "array", "items": _STR},
        "synthetic": _obj({"wavelength_nm": _POS, "q": _POS, "noise": _NONNEG, "std_nm": _NONNEG,
                           "n": {"type": "integer", "minimum": 1}}),
        "tio2_nm": _NONNEG,
        "overfill_nm": _NONNEG,
        "thin_from_nm": _NONNEG,
        "thin_to_nm": _NONNEG,
        "roughness": _obj({"sigma_1": _POS, "wavelength_1_nm": _POS,
                           "sigma_2": _POS, "wavelength_2_nm": _POS}),
        "columns": {"type": "integer", "minimum": 1},
        "rows": {"type": "integer", "minimum": 1},
        "field_um": _PAIR,
        "rotations": {"type": "array", "items": _NUM, "minItems": 1},
    }),
    "output": _STR,
    "seed": {"type": "integer", "minimum": 0},
})


def _path_of(error: jsonschema.ValidationError) -> str:
    return ".".join(str(p) for p in error.absolute_path) or "<root>"


def validate_config(config: dict) -> dict:
    """Check ``config`` against the schema; raise ConfigError naming the offending field."""
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(config), key=lambda e: (len(e.absolute_path), _path_of(e)))
    if errors:
        # report the most specific failure
        err = max(errors, key=lambda e: len(e.absolute_path))
        raise ConfigError(err.message, _path_of(err))
    return config


def _canonical(value):
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return value
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, dict):
        return {k: _canonical(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_canonical(v) for v in value]
    raise TypeError(f"unsupported config value {value!r}")


def config_hash(config: dict) -> str:
    """SHA-256 of the canonical JSON form of ``config``.

    Key order, whitespace and the int/float spelling of numbers do not
    change the hash.
    """
    text = json.dumps(_canonical(config), sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(text.encode("ascii")).hexdigest()


def load_config(path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON ({exc.msg} at line {exc.lineno})", str(path)) from None
    if not isinstance(data, dict):
        raise ConfigError("top level must be an object", str(path))
    return data


def _get(config, section, key, default=None):
    return config.get(section, {}).get(key, default)


def _set(config, section, key, value):
    if value is not None:
        config.setdefault(section, {})[key] = value


def _library(config) -> MaterialLibrary:
    over = {}
    for name, m in config.get("materials", {}).items():
        if "table" in m:
            over[name] = Material(name, table=tuple(tuple(r) for r in m["table"]))
        else:
            over[name] = Material(name, m.get("refractive_index", 1.0))
    return MaterialLibrary(over)


def _stack(config, default="silica") -> LayerStack:
    s = config.get("stack", {})
    lib = _library(config)
    if "layers" in s:
        return LayerStack.from_names([(l["material"], l["thickness"]) for l in s["layers"]],
                                     s.get("cover", "air"), lib)
    preset = s.get("preset", default)
    if preset == "membrane":
        st = membrane_stack(s.get("diamond_thickness", 0.05), s.get("hsq_thickness", 0.5))
    else:
        st = silica_stack()
    # material overrides apply to preset layers too
    st.layers = [(lib.get(m.name), t) for m, t in st.layers]
    st.cover = lib.get(s.get("cover", st.cover.name))
    return st


def _pml(config) -> PmlParams:
    return PmlParams(**_get(config, "simulation", "pml", {}))


# ---------------------------------------------------------------- output handling

def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _umask_mode() -> int:
    mask = os.umask(0)
    os.umask(mask)
    return 0o666 & ~mask


_FILE_MODE = _umask_mode()


def atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.chmod(tmp, _FILE_MODE)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class Run:
    """Collects outputs and timings of one invocation and writes the manifest."""

    def __init__(self, command: str, config: dict, out: Path):
        self.command = command
        self.config = config
        self.out = out
        self.outputs: dict[str, list[str]] = {}
        self.timings: dict[str, float] = {}
        self._t0 = time.perf_counter()

    def timed(self, op: str, fn, *args, **kw):
        t = time.perf_counter()
        try:
            return fn(*args, **kw)
        finally:
            self.timings[op] = self.timings.get(op, 0.0) + time.perf_counter() - t

    def write_json(self, op: str, name: str, data: dict) -> Path:
        data = {"kind": data.get("kind", op), "resforge_version": __version__} | data
        path = self.out / name
        atomic_write(path, json.dumps(_jsonable(data), indent=2, allow_nan=False) + "\n")
        self.outputs.setdefault(op, []).append(name)
        return path

    def write_text(self, op: str, name: str, text: str) -> Path:
        path = self.out / name
        atomic_write(path, text)
        self.outputs.setdefault(op, []).append(name)
        return path

    def manifest(self) -> dict:
        return {
            "command": self.command,
            "config_hash": config_hash(self.config),
            "config": self.config,
            "resforge_version": __version__,
            "outputs": self.outputs,
            "timings_s": self.timings | {"total": time.perf_counter() - self._t0},
        }

    def finish(self) -> Path:
        path = self.out / "manifest.json"
        atomic_write(path, json.dumps(_jsonable(self.manifest()), indent=2, sort_keys=True) + "\n")
        return path


# ---------------------------------------------------------------- argument types

def _pair(text: str) -> list[float]:
    try:
        a, b = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected two comma-separated numbers, got {text!r}") from None
    if not a < b:
        raise argparse.ArgumentTypeError(f"range {text!r} must be increasing")
    return [a, b]


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _layers(text: str) -> list[dict]:
    out = []
    for item in text.split(","):
        try:
            name, t = item.split(":")
            out.append({"material": name.strip(), "thickness": float(t)})
        except ValueError:
            raise argparse.ArgumentTypeError(f"layers take material:thickness pairs, got {item!r}") from None
    return out


# ---------------------------------------------------------------- subcommands

def cmd_modes(run: Run, cfg: dict) -> int:
    wl = _get(cfg, "analysis", "wavelength_nm", 700.0) * 1e-3
    width = _get(cfg, "analysis", "width", 0.30)
    height = _get(cfg, "analysis", "height", 0.25)
    pol = _get(cfg, "analysis", "polarization", TE)
    core = _get(cfg, "analysis", "core", "TiO2")
    dx = _get(cfg, "simulation", "dx", 0.01)
    pad = _get(cfg, "simulation", "padding", 1.0)
    stack = _stack(cfg)
    lib = _library(cfg)
    core_m = lib.get(core)

    def grid_at(w):
        return waveguide_cross_section(width, height, stack, dx, pad, core_m, w)

    modes = run.timed("solve", cross_section_modes, grid_at(wl), wl, _get(cfg, "analysis", "n_modes", 1), pol)
    n_g = run.timed("group_index", group_index, fundamental_solver(grid_at, pol), wl)
    m0 = modes[0]
    g = m0.grid
    extent = [[g.origin[0], g.origin[0] + g.size[0]], [g.origin[1], g.origin[1] + g.size[1]]]
    result = {
        "kind": "modes", "wavelength_nm": wl * 1e3, "polarization": pol,
        "n_eff": m0.n_eff, "n_g": n_g, "confinement": m0.confinement_fractions,
        "fsr_nm_per_radius_um": {"5.0": fsr(wl, n_g, 5.0) * 1e3},
        "modes": [m.to_dict() for m in modes],
        "field": {"intensity": m0.intensity, "extent_um": extent, "dx_um": dx},
    }
    run.write_json("modes", "modes.json", result)
    run.write_text("modes", "modes_field.svg",
                   render_svg("field_map", m0.intensity, extent=extent, title=f"{pol}0 |E|^2", label="|E|^2"))
    print(f"n_eff = {m0.n_eff:.5f}  n_g = {n_g:.4f}  " +
          "  ".join(f"{k}: {v:.3f}" for k, v in sorted(m0.confinement_fractions.items())))
    return 0


def _ring_device(cfg) -> RingSpec:
    d = cfg.get("device")
    if d is None:
        return RingSpec()
    spec = device_from_dict(d)
    if not isinstance(spec, RingSpec):
        raise ConfigError("ring needs a ring device", "device.kind")
    return spec


def cmd_ring(run: Run, cfg: dict) -> int:
    spec = _ring_device(cfg)
    wl0 = _get(cfg, "analysis", "wavelength_nm", 700.0) * 1e-3
    n_eff = _get(cfg, "analysis", "n_eff")
    n_g = _get(cfg, "analysis", "n_g")
    if n_eff is None or n_g is None:
        stack = _stack(cfg)
        dx = _get(cfg, "simulation", "dx", 0.02)

        def grid_at(w):
            return waveguide_cross_section(spec.waveguide_width, spec.waveguide_height, stack, dx,
                                           _get(cfg, "simulation", "padding", 1.0), "TiO2", w)

        solve = fundamental_solver(grid_at, _get(cfg, "analysis", "polarization", TE))
        if n_eff is None:
            n_eff = run.timed("modes", solve, wl0).n_eff
        if n_g is None:
            n_g = run.timed("modes", group_index, solve, wl0)
    coupling = _get(cfg, "analysis", "coupling")
    calib = None
    if coupling is not None:
        calib = calibrate_coupling(coupling["gaps"], coupling["kappas"])
        t1 = math.sqrt(max(0.0, 1 - calib.kappa(spec.gap_1) ** 2))
        t2 = math.sqrt(max(0.0, 1 - calib.kappa(spec.gap_2) ** 2))
    else:
        t1 = _get(cfg, "analysis", "t1", 0.98)
        t2 = _get(cfg, "analysis", "t2", 0.98)
    length = 2 * math.pi * spec.radius
    q_i = _get(cfg, "analysis", "q_intrinsic")
    if q_i is not None:
        # power loss per length 2 pi n_g / (Q_i lambda); amplitude decays at half that rate
        a = math.exp(-math.pi * n_g * length / (q_i * wl0))
    else:
        a = _get(cfg, "analysis", "round_trip", 0.999)
    n0, ng = n_eff, n_g

    def n_of(w):
        return n0 - (ng - n0) * (w - wl0) / wl0

    model = RingModel(t1, t2, a, length, n_of, n_g)
    spacing = fsr(wl0, n_g, spec.radius)
    span = _get(cfg, "analysis", "span_nm", 2e3 * spacing) * 1e-3
    wl = np.linspace(wl0 - span / 2, wl0 + span / 2, _get(cfg, "simulation", "points", 4001))
    through, drop = run.timed("spectra", ring_spectra, model, wl)
    # the drop resonance nearest the centre wavelength
    order = round(n_of(wl0) * length / wl0)
    w_res = wl0
    for _ in range(50):
        w_res = n_of(w_res) * length / order
    fit = None
    try:
        fit = run.timed("fit", fit_lorentzian, drop, (w_res - spacing / 2, w_res + spacing / 2))
    except ResforgeError as exc:
        log.warning("drop-port fit failed: %s", exc)
    result = {
        "kind": "ring", "device": device_to_dict(spec), "wavelength_nm": wl0 * 1e3,
        "n_eff": n_eff, "n_g": n_g, "fsr_nm": spacing * 1e3, "t1": t1, "t2": t2, "round_trip": a,
        "coupling_fit": None if calib is None else calib.__dict__,
        "resonance_nm": w_res * 1e3,
        "drop_fit": None if fit is None else fit.to_dict(),
        "spectra": {"through": through.to_dict(), "drop": drop.to_dict()},
    }
    run.write_json("ring", "ring.json", result)
    run.write_text("ring", "ring_spectrum.svg",
                   render_svg("spectrum", [("through", through), ("drop", drop)], title="add-drop ring",
                              ylabel="transmission"))
    q = "n/a" if fit is None else f"{fit.q:.0f}"
    print(f"FSR = {spacing * 1e3:.3f} nm  n_eff = {n_eff:.4f}  n_g = {n_g:.4f}  loaded Q = {q}")
    return 0


def _phc_device(cfg) -> PhcCavitySpec:
    d = cfg.get("device")
    if d is None:
        return PhcCavitySpec()
    spec = device_from_dict(d)
    if not isinstance(spec, PhcCavitySpec):
        raise ConfigError("cavity needs a phc device", "device.kind")
    return spec


def _cavity_run(run: Run, cfg: dict, snapshot: bool):
    spec = _phc_device(cfg)
    stack = _stack(cfg)
    design = _get(cfg, "analysis", "design_wavelength_nm", 737.0) * 1e-3
    eff = effective_indices(spec, stack, design, _get(cfg, "analysis", "core", "TiO2"),
                            _get(cfg, "simulation", "background", "substrate"))
    band = mirror_band(spec, eff, (0.5 * design, 2.0 * design))
    band_nm = _get(cfg, "simulation", "band_nm")
    gap = select_gap(band, design)
    search = tuple(v * 1e-3 for v in band_nm) if band_nm else gap
    dx = _get(cfg, "simulation", "dx", 0.02)
    pml = _pml(cfg)
    grid = phc_scene(spec, eff, dx, _get(cfg, "simulation", "padding", 1.0), pml.thickness)
    dom = SimulationDomain(grid, "TE", _get(cfg, "simulation", "courant", 0.5), pml)
    log.info("grid %s, search band %.1f-%.1f nm", grid.dims, search[0] * 1e3, search[1] * 1e3)
    res = run.timed("fdtd", cavity_resonance, dom, search, snapshot=snapshot,
                    max_steps=_get(cfg, "simulation", "max_steps", 2_000_000))
    return spec, eff, band, gap, dom, res


def cmd_cavity(run: Run, cfg: dict) -> int:
    spec, eff, band, gap, dom, res = _cavity_run(run, cfg, _get(cfg, "simulation", "snapshot", False))
    result = {
        "kind": "cavity", "device": device_to_dict(spec), "effective_indices": eff.to_dict(),
        "mirror_gap_nm": [g * 1e3 for g in gap], "gaps_nm": [[a * 1e3, b * 1e3] for a, b in band.gaps],
        "in_gap": bool(gap[0] <= res.wavelength <= gap[1]),
        "result": res.to_dict(), "spectrum": res.spectrum.to_dict(),
    }
    run.write_json("cavity", "cavity.json", result)
    run.write_text("cavity", "cavity_spectrum.svg",
                   render_svg("spectrum", res.spectrum, title="cavity ringdown spectrum", ylabel="power"))
    if res.field_snapshot is not None:
        u = energy_density(res.field_snapshot, dom)
        run.write_text("cavity", "cavity_field.svg", render_svg("field_map", u, title="eps |E|^2"))
    flag = " (Q estimates disagree)" if res.flagged else ""
    print(f"resonance {res.wavelength * 1e3:.2f} nm  Q = {res.q:.0f}  ringdown Q = {res.q_ringdown:.0f}{flag}")
    return 0


def _slab_thickness(cfg, spec, eff) -> float:
    """Effective vertical extent integral(eps E^2 dz) / max(eps E^2) of the slab mode."""
    stack = _stack(cfg)
    core = _library(cfg).get(_get(cfg, "analysis", "core", "TiO2")).index(eff.wavelength)
    m = stacked_slab_index(core, spec.waveguide_height, stack, eff.wavelength)
    u = m.grid.eps * m.profile ** 2
    return float(u.sum() * m.grid.dx / u.max())


def cmd_purcell(run: Run, cfg: dict) -> int:
    dw = _get(cfg, "analysis", "debye_waller", 0.7)
    qe = _get(cfg, "analysis", "quantum_efficiency", 0.1)
    ratio = _get(cfg, "analysis", "dephasing_ratio", 1.0)
    q = _get(cfg, "analysis", "q")
    v = _get(cfg, "analysis", "mode_volume")
    if q is not None and v is not None:
        F = purcell_factor(q, v)
        coop = cooperativity(F, dw, qe, ratio)
        run.write_json("purcell", "purcell.json", {
            "kind": "purcell", "q": q, "mode_volume_normalized": v, "F_max": F,
            "cooperativity": coop.to_dict()})
        print(f"F = {F:.2f}  C = {coop.c:.3f}")
        return 0
    spec, eff, band, gap, dom, res = _cavity_run(run, cfg, snapshot=True)
    u = energy_density(res.field_snapshot, dom)
    thickness = _slab_thickness(cfg, spec, eff)
    pm = run.timed("purcell", purcell_map, u, dom.grid.eps, dom.dx, res.q, res.wavelength,
                   pml_cells=dom.pml.thickness, volume_scale=thickness)
    coop = cooperativity(pm.F_max, dw, qe, ratio)
    g = dom.grid
    extent = [[g.origin[0], g.origin[0] + g.size[0]], [g.origin[1], g.origin[1] + g.size[1]]]
    result = {
        "kind": "purcell", "q": res.q, "wavelength_nm": res.wavelength * 1e3,
        "slab_thickness_um": thickness, **pm.to_dict(),
        "mode_volume_3d_normalized": pm.mode_volume.volume * thickness / (res.wavelength / pm.mode_volume.n_ref) ** 3, "cooperativity": coop.to_dict(),
        "cavity": res.to_dict(), "map": {"F": pm.F, "extent_um": extent, "dx_um": dom.dx},
    }
    run.write_json("purcell", "purcell.json", result)
    run.write_text("purcell", "purcell_map.svg",
                   render_svg("purcell_map", pm.F, extent=extent, title="Purcell enhancement"))
    print(f"Q = {res.q:.0f}  F_max = {pm.F_max:.1f}  C = {coop.c:.3f}")
    return 0


def cmd_fit(run: Run, cfg: dict) -> int:
    inputs = list(_get(cfg, "analysis", "inputs", []))
    syn = _get(cfg, "analysis", "synthetic")
    spectra = []
    if syn is not None:
        s = synthetic_spectrum(syn.get("wavelength_nm", 710.341) * 1e-3, syn.get("q", 9070.0),
                               cfg.get("seed", 0), syn.get("noise", 0.0))
        run.write_text("fit", "synthetic_spectrum.csv", s.to_csv())
        spectra.append(("synthetic_spectrum.csv", s))
    for p in inputs:
        spectra.append((p, read_csv(p)))
    if not spectra:
        raise ConfigError("no spectrum given (use --input or --synthetic)", "analysis.inputs")
    win = _get(cfg, "analysis", "window_nm")
    window = None if win is None else (win[0] * 1e-3, win[1] * 1e-3)
    orient = _get(cfg, "analysis", "orientation", "peak")
    records = []
    for k, (src, s) in enumerate(spectra):
        fit = run.timed("fit", fit_lorentzian, s, window, orient)
        shown = s if window is None else s.window(*window)
        records.append({"source": str(src), "fit": fit.to_dict(), "spectrum": shown.to_dict()})
        model = Spectrum(shown.wavelengths, np.clip(lorentzian(shown.wavelengths, fit.wavelength, fit.fwhm,
                                                               fit.amplitude, fit.baseline), 0, None))
        name = "fit_spectrum.svg" if len(spectra) == 1 else f"fit_spectrum_{k}.svg"
        run.write_text("fit", name, render_svg("spectrum", [("data", shown), ("fit", model)],
                                               title=Path(str(src)).name))
        lb = " (lower bound)" if fit.lower_bound else ""
        print(f"{Path(str(src)).name}: {fit.wavelength * 1e3:.3f} nm  FWHM {fit.fwhm * 1e3:.4f} nm  "
              f"Q = {fit.q:.0f}{lb}")
    run.write_json("fit", "fit.json", {"kind": "fit", "fits": records})
    return 0


def _fits_from_json(path) -> list[ResonanceFit] | EnsembleStats:
    data = json.loads(Path(path).read_text())
    kind = data.get("kind")
    if kind == "fit":
        return [ResonanceFit.from_dict(r["fit"]) for r in data["fits"]]
    if kind == "stats":
        raise ConfigError("stats results hold several rows; pass them whole", str(path))
    raise ConfigError(f"cannot take ensemble statistics of a {kind!r} result", str(path))


def cmd_stats(run: Run, cfg: dict) -> int:
    rows, labels = [], []
    given = list(_get(cfg, "analysis", "labels", []))
    for p in _get(cfg, "analysis", "inputs", []):
        data = json.loads(Path(p).read_text())
        if data.get("kind") == "stats":
            for r in data["rows"]:
                rows.append(EnsembleStats.from_dict(r["stats"]))
                labels.append(r["label"])
            continue
        rows.append(ensemble_stats(_fits_from_json(p)))
        labels.append(Path(p).stem)
    syn = _get(cfg, "analysis", "synthetic")
    if syn is not None:
        fits = synthetic_ensemble(syn.get("wavelength_nm", 606.499), syn.get("std_nm", 0.623),
                                  syn.get("q", 2000.0), syn.get("n", 10), cfg.get("seed", 0))
        rows.append(ensemble_stats(fits))
        labels.append("synthetic")
    if not rows:
        raise ConfigError("no fits given (use --input or --synthetic)", "analysis.inputs")
    labels = [given[k] if k < len(given) else lab for k, lab in enumerate(labels)]
    table = format_table(rows, labels)
    run.write_json("stats", "stats.json", {
        "kind": "stats", "rows": [{"label": l, "stats": r.to_dict()} for l, r in zip(labels, rows)],
        "table": table})
    run.write_text("stats", "stats.txt", table)
    sys.stdout.write(table)
    return 0


def cmd_layout(run: Run, cfg: dict) -> int:
    spec = device_from_dict(cfg.get("device", {"kind": "ring"}))
    cols = _get(cfg, "analysis", "columns", 1)
    rows = _get(cfg, "analysis", "rows", 1)
    rot = _get(cfg, "analysis", "rotations", [0.0])
    ex, ey = spec.extent()
    # half extents of the bounding box over all requested rotations
    cs = [(abs(math.cos(math.radians(a))), abs(math.sin(math.radians(a)))) for a in rot]
    hx = max(c * ex + s_ * ey for c, s_ in cs)
    hy = max(s_ * ex + c * ey for c, s_ in cs)
    field = _get(cfg, "analysis", "field_um") or [cols * (2 * hx + 2.0), rows * (2 * hy + 2.0)]
    doc = run.timed("layout", export_layout, grid_placements(spec, tuple(field), cols, rows, rot), tuple(field))
    run.write_json("layout", "layout.json", {"kind": "layout", **doc.to_dict()})
    run.write_text("layout", "layout.svg", doc.to_svg())
    for w in doc.warnings:
        log.warning(w)
    print(f"{doc.n_devices} devices, {len(doc.polygons)} polygons in a {field[0]:g} x {field[1]:g} um field")
    return 0


def cmd_process(run: Run, cfg: dict) -> int:
    plan = process_plan(_get(cfg, "analysis", "tio2_nm", 250.0), _get(cfg, "analysis", "overfill_nm", 150.0),
                        _get(cfg, "analysis", "thin_from_nm", 0.0), _get(cfg, "analysis", "thin_to_nm", 0.0))
    out = {"kind": "process", **plan.to_dict()}
    r = _get(cfg, "analysis", "roughness")
    if r is not None:
        out["scattering_loss_ratio"] = scattering_loss_ratio(r["sigma_1"], r["wavelength_1_nm"],
                                                             r["sigma_2"], r["wavelength_2_nm"])
    run.write_json("process", "process.json", out)
    print(f"ALD cycles {plan.ald_cycles}  TiO2 etch {plan.tio2_etch_time[0]:.1f}-{plan.tio2_etch_time[1]:.1f} s  "
          f"descum removes {plan.pmma_descum_removal:.1f} nm  membrane etch "
          f"{plan.membrane_etch_time[0]:.1f}-{plan.membrane_etch_time[1]:.1f} s")
    return 0


def cmd_simulate(run: Run, cfg: dict) -> int:
    stack = _stack(cfg, default="membrane")
    if not stack.layers:
        raise ConfigError("the stack needs at least a substrate layer", "stack.layers")
    band = _get(cfg, "simulation", "band_nm", [600.0, 800.0])
    wl = np.linspace(band[0], band[1], _get(cfg, "simulation", "points", 101)) * 1e-3
    design = 0.5 * (wl[0] + wl[-1])
    n_in = stack.cover.index(design)
    n_out = stack.layers[0][0].index(design)
    layers = [(m.index(design), t) for m, t in reversed(stack.layers[1:])]
    n_max = max([n_in, n_out] + [n for n, _ in layers])
    dx = _get(cfg, "simulation", "dx") or wl[0] / (_get(cfg, "simulation", "pixels_per_wavelength", 20.0) * n_max)
    res = run.timed("fdtd", stack_reflectance, layers, wl, dx, n_in, n_out,
                    courant_factor=_get(cfg, "simulation", "courant", 0.5), pml=_pml(cfg),
                    pad=_get(cfg, "simulation", "padding", 1.0))
    r_tmm, t_tmm = transfer_matrix(res.layers, wl, n_in, n_out)
    rms = float(np.sqrt(np.mean((res.reflectance - r_tmm) ** 2)))
    rec = FieldRecord(dt=0.0, steps=res.steps, warnings=list(res.warnings))
    for name, arr in (("incident", res.incident_flux), ("reflected", res.reflected_flux),
                      ("transmitted", res.transmitted_flux)):
        rec.flux[name] = arr
        rec.flux_wavelengths[name] = wl
    fmt = _get(cfg, "simulation", "format", "bin")
    export_record(rec, run.out / "simulate_record", fmt)
    run.outputs.setdefault("simulate", []).append("simulate_record/record.json")
    out = {
        "kind": "simulate", "dx_um": dx, "steps": res.steps, "n_in": n_in, "n_out": n_out,
        "layers": [{"index": n, "thickness_um": t} for n, t in res.layers],
        "reflectance": Spectrum(wl, res.reflectance.clip(0)).to_dict(),
        "transmittance": Spectrum(wl, res.transmittance.clip(0)).to_dict(),
        "reflectance_transfer_matrix": r_tmm, "rms_error": rms, "warnings": res.warnings,
    }
    run.write_json("simulate", "simulate.json", out)
    run.write_text("simulate", "simulate_spectrum.svg", render_svg(
        "spectrum", [("R (FDTD)", Spectrum(wl, res.reflectance.clip(0))), ("R (transfer matrix)", Spectrum(wl, r_tmm))],
        title="normal-incidence reflectance", ylabel="reflectance"))
    print(f"dx = {dx * 1e3:.3f} nm  steps = {res.steps}  RMS |R_fdtd - R_tmm| = {rms:.5f}")
    return 0


def plot_result(data: dict) -> dict[str, str]:
    """SVG figures for a JSON result written by another subcommand."""
    kind = data.get("kind")
    if kind == "fit":
        out = {}
        for k, r in enumerate(data["fits"]):
            s = Spectrum.from_dict(r["spectrum"])
            f = ResonanceFit.from_dict(r["fit"])
            model = Spectrum(s.wavelengths, np.clip(lorentzian(s.wavelengths, f.wavelength, f.fwhm,
                                                               f.amplitude, f.baseline), 0, None))
            out[f"fit_{k}.svg"] = render_svg("spectrum", [("data", s), ("fit", model)])
        return out
    if kind == "ring":
        sp = data["spectra"]
        return {"ring.svg": render_svg("spectrum", [("through", Spectrum.from_dict(sp["through"])),
                                                    ("drop", Spectrum.from_dict(sp["drop"]))],
                                       ylabel="transmission")}
    if kind == "cavity":
        return {"cavity.svg": render_svg("spectrum", Spectrum.from_dict(data["spectrum"]), ylabel="power")}
    if kind == "simulate":
        return {"simulate.svg": render_svg("spectrum", [("R", Spectrum.from_dict(data["reflectance"])),
                                                        ("T", Spectrum.from_dict(data["transmittance"]))],
                                           ylabel="power fraction")}
    if kind == "modes":
        f = data["field"]
        return {"modes.svg": render_svg("field_map", np.asarray(f["intensity"]), extent=f["extent_um"])}
    if kind == "purcell":
        if "map" not in data:
            raise ConfigError("this Purcell result has no spatial map to draw", "map")
        m = data["map"]
        return {"purcell.svg": render_svg("purcell_map", np.asarray(m["F"]), extent=m["extent_um"])}
    if kind == "layout":
        return {"layout.svg": render_svg("layout", LayoutDocument.from_dict(data))}
    raise ConfigError(f"no figure for results of kind {kind!r}", "kind")


def cmd_plot(run: Run, cfg: dict) -> int:
    inputs = _get(cfg, "analysis", "inputs", [])
    if not inputs:
        raise ConfigError("plot needs --input", "analysis.inputs")
    for p in inputs:
        data = json.loads(Path(p).read_text())
        for name, svg in plot_result(data).items():
            run.write_text("plot", f"{Path(p).stem}_{name}" if len(inputs) > 1 else name, svg)
    print("\n".join(sorted(str(run.out / n) for n in run.outputs.get("plot", []))))
    return 0


COMMANDS = {
    "modes": cmd_modes, "ring": cmd_ring, "cavity": cmd_cavity, "purcell": cmd_purcell,
    "fit": cmd_fit, "stats": cmd_stats, "layout": cmd_layout, "process": cmd_process,
    "simulate": cmd_simulate, "plot": cmd_plot,
}

# (flag dest, section, key, transform) applied over the config file
_FLAG_MAP = {
    "wavelength": ("analysis", "wavelength_nm"),
    "design_wavelength": ("analysis", "design_wavelength_nm"),
    "polarization": ("analysis", "polarization"),
    "n_modes": ("analysis", "n_modes"),
    "width": ("analysis", "width"),
    "height": ("analysis", "height"),
    "core": ("analysis", "core"),
    "n_eff": ("analysis", "n_eff"),
    "n_g": ("analysis", "n_g"),
    "t1": ("analysis", "t1"),
    "t2": ("analysis", "t2"),
    "round_trip": ("analysis", "round_trip"),
    "q_intrinsic": ("analysis", "q_intrinsic"),
    "span": ("analysis", "span_nm"),
    "q": ("analysis", "q"),
    "volume": ("analysis", "mode_volume"),
    "debye_waller": ("analysis", "debye_waller"),
    "quantum_efficiency": ("analysis", "quantum_efficiency"),
    "dephasing_ratio": ("analysis", "dephasing_ratio"),
    "window": ("analysis", "window_nm"),
    "orientation": ("analysis", "orientation"),
    "input": ("analysis", "inputs"),
    "label": ("analysis", "labels"),
    "tio2": ("analysis", "tio2_nm"),
    "overfill": ("analysis", "overfill_nm"),
    "thin_from": ("analysis", "thin_from_nm"),
    "thin_to": ("analysis", "thin_to_nm"),
    "columns": ("analysis", "columns"),
    "rows": ("analysis", "rows"),
    "field": ("analysis", "field_um"),
    "rotations": ("analysis", "rotations"),
    "dx": ("simulation", "dx"),
    "courant": ("simulation", "courant"),
    "band": ("simulation", "band_nm"),
    "points": ("simulation", "points"),
    "ppw": ("simulation", "pixels_per_wavelength"),
    "padding": ("simulation", "padding"),
    "background": ("simulation", "background"),
    "format": ("simulation", "format"),
    "max_steps": ("simulation", "max_steps"),
}


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment configuration (JSON)")
    common.add_argument("--out", help="output directory (default: resforge-out)")
    common.add_argument("--seed", type=int, help="seed for all synthetic test data (default 0)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="resforge", description="Nanophotonic resonator design and analysis.")
    p.add_argument("--version", action="version", version=f"resforge {__version__}")
    sub = p.add_subparsers(dest="command", metavar="{" + ",".join(SUBCOMMANDS) + "}")

    def add(name, help_):
        return sub.add_parser(name, parents=[common], help=help_)

    def stack_flags(sp, layers=False):
        sp.add_argument("--stack", choices=["silica", "membrane"], help="layer stack preset")
        if layers:
            sp.add_argument("--layers", type=_layers, help="bottom-to-top material:thickness_um list")
        sp.add_argument("--cover", help="cover material above the stack")

    sp = add("modes", "waveguide eigenmodes, group index and confinement")
    sp.add_argument("--wavelength", type=float, help="nm (default 700)")
    sp.add_argument("--width", type=float, help="um (default 0.30)")
    sp.add_argument("--height", type=float, help="um (default 0.25)")
    sp.add_argument("--polarization", choices=["TE", "TM"])
    sp.add_argument("--n-modes", type=int)
    sp.add_argument("--core")
    sp.add_argument("--dx", type=float, help="um (default 0.01)")
    sp.add_argument("--padding", type=float)
    stack_flags(sp, layers=True)

    sp = add("ring", "add-drop ring spectra and FSR")
    sp.add_argument("--radius", type=float, help="um (default 5)")
    sp.add_argument("--wavelength", type=float, help="nm (default 700)")
    sp.add_argument("--n-eff", type=float)
    sp.add_argument("--n-g", type=float)
    sp.add_argument("--t1", type=float)
    sp.add_argument("--t2", type=float)
    sp.add_argument("--round-trip", type=float, help="single-pass amplitude transmission")
    sp.add_argument("--q-intrinsic", type=float)
    sp.add_argument("--span", type=float, help="nm")
    sp.add_argument("--points", type=int)
    sp.add_argument("--dx", type=float)
    stack_flags(sp)

    for name, help_ in (("cavity", "photonic-crystal cavity resonance from a 2D FDTD ringdown"),
                        ("purcell", "Purcell enhancement and cooperativity")):
        sp = add(name, help_)
        sp.add_argument("--fins", type=int, help="mirror fins per side")
        sp.add_argument("--design-wavelength", type=float, help="nm (default 737)")
        sp.add_argument("--band", type=_pair, help="search band lo,hi in nm (default: mirror gap)")
        sp.add_argument("--dx", type=float, help="um (default 0.02)")
        sp.add_argument("--courant", type=float)
        sp.add_argument("--padding", type=float)
        sp.add_argument("--background", help="substrate, cover or an index")
        sp.add_argument("--max-steps", type=int)
        stack_flags(sp)
        if name == "cavity":
            sp.add_argument("--snapshot", action="store_true", help="also record the mode field")
        else:
            sp.add_argument("--q", type=float, help="with --volume: arithmetic mode, no simulation")
            sp.add_argument("--volume", type=float, help="mode volume in (lambda/n)^3")
            sp.add_argument("--debye-waller", type=float)
            sp.add_argument("--quantum-efficiency", type=float)
            sp.add_argument("--dephasing-ratio", type=float)

    sp = add("fit", "Lorentzian fit of measured spectra (CSV: wavelength_nm,intensity)")
    sp.add_argument("--input", action="append", help="spectrum CSV; repeatable")
    sp.add_argument("--window", type=_pair, help="fit window lo,hi in nm")
    sp.add_argument("--orientation", choices=["peak", "dip"])
    sp.add_argument("--synthetic", type=_floats, metavar="NM,Q[,NOISE]",
                    help="generate a test spectrum (seeded by --seed)")

    sp = add("stats", "ensemble statistics table from fit results")
    sp.add_argument("--input", action="append", help="fit.json or stats.json; repeatable, one row each")
    sp.add_argument("--label", action="append", help="row label; repeatable")
    sp.add_argument("--synthetic", type=_floats, metavar="MEAN_NM,STD_NM,Q,N",
                    help="add a synthetic ensemble row (seeded by --seed)")

    sp = add("layout", "lithography template as JSON and SVG")
    sp.add_argument("--device", choices=["ring", "phc", "grating"])
    sp.add_argument("--columns", type=int)
    sp.add_argument("--rows", type=int)
    sp.add_argument("--field", type=_pair, metavar="W,H", help="field size in um")
    sp.add_argument("--rotations", type=_floats, help="degrees, cycled over the array")

    sp = add("process", "deposition cycles and etch times")
    sp.add_argument("--tio2", type=float, help="target TiO2 thickness, nm")
    sp.add_argument("--overfill", type=float, help="nm")
    sp.add_argument("--thin-from", type=float, help="membrane thickness before thinning, nm")
    sp.add_argument("--thin-to", type=float, help="membrane thickness after thinning, nm")
    sp.add_argument("--roughness", type=_floats, metavar="S1,WL1,S2,WL2",
                    help="compare scattering loss at two roughness/wavelength points")

    sp = add("simulate", "FDTD normal-incidence reflectance of a layer stack")
    stack_flags(sp, layers=True)
    sp.add_argument("--band", type=_pair, help="nm (default 600,800)")
    sp.add_argument("--points", type=int)
    sp.add_argument("--dx", type=float, help="um; default from --ppw")
    sp.add_argument("--ppw", type=float, help="cells per shortest wavelength in the densest medium")
    sp.add_argument("--courant", type=float)
    sp.add_argument("--padding", type=float)
    sp.add_argument("--format", choices=["bin", "csv"], help="flux export format")

    sp = add("plot", "SVG figures from JSON results")
    sp.add_argument("--input", action="append", help="result JSON; repeatable")
    return p


def _build_config(args) -> dict:
    cfg = load_config(args.config) if args.config else {}
    cfg = copy.deepcopy(cfg)
    for dest, (section, key) in _FLAG_MAP.items():
        val = getattr(args, dest, None)
        if val is None:
            continue
        if dest == "background" and val not in ("substrate", "cover"):
            try:
                val = float(val)
            except ValueError:
                raise ConfigError("must be substrate, cover or a number", "simulation.background") from None
        _set(cfg, section, key, val)
    if getattr(args, "snapshot", False):
        _set(cfg, "simulation", "snapshot", True)
    for flag in ("stack", "layers", "cover"):
        val = getattr(args, flag, None)
        if val is not None:
            cfg.setdefault("stack", {})["preset" if flag == "stack" else flag] = val
    if getattr(args, "fins", None) is not None:
        dev = cfg.setdefault("device", {"kind": "phc"})
        dev["n_mirror_fins"] = args.fins
    if getattr(args, "radius", None) is not None:
        dev = cfg.setdefault("device", {"kind": "ring"})
        dev["radius"] = args.radius
    if getattr(args, "device", None) is not None:
        if cfg.get("device", {}).get("kind") != args.device:
            cfg["device"] = {"kind": args.device}
    syn = getattr(args, "synthetic", None)
    if syn is not None:
        if args.command == "fit":
            keys = ("wavelength_nm", "q", "noise")
        else:
            keys = ("wavelength_nm", "std_nm", "q", "n")
        if not 2 <= len(syn) <= len(keys):
            raise ConfigError(f"--synthetic takes {','.join(keys)}", "analysis.synthetic")
        d = dict(zip(keys, syn))
        if "n" in d:
            d["n"] = int(d["n"])
        _set(cfg, "analysis", "synthetic", d)
    rough = getattr(args, "roughness", None)
    if rough is not None:
        if len(rough) != 4:
            raise ConfigError("--roughness takes sigma_1,wl_1,sigma_2,wl_2", "analysis.roughness")
        _set(cfg, "analysis", "roughness",
             dict(zip(("sigma_1", "wavelength_1_nm", "sigma_2", "wavelength_2_nm"), rough)))
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.out is not None:
        cfg["output"] = args.out
    return validate_config(cfg)


def cli_dispatch(argv=None) -> int:
    """Run one subcommand; returns the process exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _parser()
    if not argv:
        parser.print_usage(sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) if exc.code in (0, None) else 2
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _build_config(args)
        out = Path(cfg.get("output", "resforge-out"))
        out.mkdir(parents=True, exist_ok=True)
        run = Run(args.command, cfg, out)
        code = COMMANDS[args.command](run, cfg)
        run.finish()
        return code
    except (ResforgeError, ValueError, OSError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"resforge {args.command}: error: {msg}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_dispatch())
