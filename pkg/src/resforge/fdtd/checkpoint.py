"""Binary checkpoints of simulation state and export of run records.

Checkpoint layout (all little-endian)::

    magic      4 bytes  b"RFCK"
    version    uint32
    ndim       uint32
    mode       8 bytes  ASCII, NUL padded
    dims       3 x uint64 (unused trailing entries are 0)
    dx         float64
    courant    float64
    step       uint64
    n_arrays   uint32
    then per array:
        name   16 bytes ASCII, NUL padded
        count  uint64
        data   count x float64

Arrays are the field components in mode order followed by the CPML
auxiliary arrays.  Sources and monitors are not stored: a restored
simulation continues with whatever the caller attaches.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from ..errors import ResforgeError
from .monitors import FieldRecord
from .solver import Simulation

MAGIC = b"RFCK"
VERSION = 1
_HEADER = struct.Struct("<4sII8s3QddQI")
_ARRAY = struct.Struct("<16sQ")


class CheckpointError(ResforgeError):
    pass


def _state_arrays(sim: Simulation):
    out = [(c, sim.fields[c]) for c in sim.domain.components]
    out += [(f"psi_{k}", v) for k, v in sorted(sim.psi.items())]
    return out


def save_checkpoint(sim: Simulation, path) -> None:
    dom = sim.domain
    arrays = _state_arrays(sim)
    dims = list(dom.shape) + [0] * (3 - dom.ndim)
    head = _HEADER.pack(MAGIC, VERSION, dom.ndim, dom.mode.encode().ljust(8, b"\0"), *dims,
                        dom.dx, dom.courant_factor, sim.step_count, len(arrays))
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(head)
            for name, a in arrays:
                data = np.ascontiguousarray(a, dtype="<f8")
                fh.write(_ARRAY.pack(name.encode().ljust(16, b"\0"), data.size))
                fh.write(data.tobytes())
        mask = os.umask(0)
        os.umask(mask)
        os.chmod(tmp, 0o666 & ~mask)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_checkpoint(path) -> dict:
    """Parse a checkpoint into {"header": {...}, "arrays": {name: ndarray}}."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise CheckpointError("truncated checkpoint header")
    magic, version, ndim, mode, d0, d1, d2, dx, courant, step, n = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise CheckpointError("not a checkpoint file")
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    dims = (d0, d1, d2)[:ndim]
    pos = _HEADER.size
    arrays = {}
    for _ in range(n):
        name, count = _ARRAY.unpack_from(raw, pos)
        pos += _ARRAY.size
        end = pos + 8 * count
        if end > len(raw):
            raise CheckpointError("truncated checkpoint body")
        arrays[name.rstrip(b"\0").decode()] = np.frombuffer(raw, "<f8", count, pos).copy()
        pos = end
    header = {"version": version, "ndim": ndim, "mode": mode.rstrip(b"\0").decode(),
              "dims": dims, "dx": dx, "courant_factor": courant, "step": step}
    return {"header": header, "arrays": arrays}


def restore_checkpoint(sim: Simulation, path) -> Simulation:
    """Load state saved by :func:`save_checkpoint` into a compatible simulation."""
    ck = read_checkpoint(path)
    h = ck["header"]
    dom = sim.domain
    if (h["mode"] != dom.mode or tuple(h["dims"]) != tuple(dom.shape) or h["dx"] != dom.dx
            or h["courant_factor"] != dom.courant_factor):
        raise CheckpointError("checkpoint does not match the simulation domain")
    for name, target in _state_arrays(sim):
        if name not in ck["arrays"]:
            raise CheckpointError(f"checkpoint lacks array {name}")
        target[...] = ck["arrays"][name].reshape(target.shape)
    sim.step_count = h["step"]
    return sim


# ---------------------------------------------------------------- record export

def _write_array(directory: Path, stem: str, arr: np.ndarray, fmt: str, columns) -> str:
    if fmt == "bin":
        name = stem + ".bin"
        np.ascontiguousarray(arr, dtype="<f8").tofile(directory / name)
    else:
        name = stem + ".csv"
        np.savetxt(directory / name, arr, delimiter=",", header=",".join(columns), comments="", fmt="%.17g")
    return name


def _safe(name: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_" else "_" for ch in name)


def export_record(record: FieldRecord, directory, fmt: str = "bin") -> Path:
    """Write a FieldRecord as ``record.json`` plus one data file per array.

    ``fmt`` selects flat little-endian float64 files (``"bin"``) or CSV.
    Complex DFT arrays are stored as interleaved (re, im) pairs in row-major
    order; their shapes are in the JSON metadata.
    """
    if fmt not in ("bin", "csv"):
        raise ValueError("fmt must be 'bin' or 'csv'")
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    meta = {"format": fmt, "dtype": "float64-le", "dt": record.dt, "steps": record.steps,
            "warnings": list(record.warnings), "time_series": {}, "flux": {}, "dft": {}}
    for name, ts in record.time_series.items():
        t = record.t_start.get(name, 0.0) + np.arange(len(ts)) * record.dt
        f = _write_array(d, f"probe_{_safe(name)}", np.column_stack([t, ts]), fmt, ["time", "value"])
        meta["time_series"][name] = {"file": f, "columns": ["time", "value"], "n": len(ts)}
    for name, fx in record.flux.items():
        wl = record.flux_wavelengths[name]
        f = _write_array(d, f"flux_{_safe(name)}", np.column_stack([wl, fx]), fmt, ["wavelength_um", "flux"])
        meta["flux"][name] = {"file": f, "columns": ["wavelength_um", "flux"], "n": len(fx)}
    for name, data in record.dft_fields.items():
        entry = {"wavelengths_um": np.asarray(data["wavelengths"]).tolist(), "components": {}}
        for comp, arr in data.items():
            if comp == "wavelengths":
                continue
            flat = np.column_stack([arr.real.ravel(), arr.imag.ravel()])
            f = _write_array(d, f"dft_{_safe(name)}_{comp}", flat, fmt, ["re", "im"])
            entry["components"][comp] = {"file": f, "shape": list(arr.shape)}
        meta["dft"][name] = entry
    out = d / "record.json"
    out.write_text(json.dumps(meta, indent=2, sort_keys=True))
    return out


def load_record(directory) -> FieldRecord:
    """Inverse of :func:`export_record`."""
    d = Path(directory)
    meta = json.loads((d / "record.json").read_text())
    fmt = meta["format"]

    def load(name, ncol):
        if fmt == "bin":
            return np.fromfile(d / name, dtype="<f8").reshape(-1, ncol)
        return np.atleast_2d(np.loadtxt(d / name, delimiter=",", skiprows=1)).reshape(-1, ncol)

    rec = FieldRecord(dt=meta["dt"], steps=meta["steps"], warnings=meta["warnings"])
    for name, e in meta["time_series"].items():
        a = load(e["file"], 2)
        rec.time_series[name] = a[:, 1]
        rec.t_start[name] = float(a[0, 0]) if len(a) else 0.0
    for name, e in meta["flux"].items():
        a = load(e["file"], 2)
        rec.flux_wavelengths[name] = a[:, 0]
        rec.flux[name] = a[:, 1]
    for name, e in meta["dft"].items():
        data = {"wavelengths": np.asarray(e["wavelengths_um"])}
        for comp, c in e["components"].items():
            a = load(c["file"], 2)
            data[comp] = (a[:, 0] + 1j * a[:, 1]).reshape(c["shape"])
        rec.dft_fields[name] = data
    return rec
