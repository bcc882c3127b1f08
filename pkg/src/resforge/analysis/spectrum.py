"""Wavelength/intensity sample sequences and their CSV form."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ConfigError, SpectrumError


@dataclass
class Spectrum:
    """Intensity sampled at strictly increasing wavelengths (um)."""

    wavelengths: np.ndarray
    intensity: np.ndarray

    def __post_init__(self):
        self.wavelengths = np.asarray(self.wavelengths, dtype=float).ravel()
        self.intensity = np.asarray(self.intensity, dtype=float).ravel()
        if self.wavelengths.shape != self.intensity.shape:
            raise SpectrumError("wavelength and intensity lengths differ")
        if not np.all(np.isfinite(self.wavelengths)) or not np.all(np.isfinite(self.intensity)):
            raise SpectrumError("spectrum contains non-finite samples")
        if np.any(np.diff(self.wavelengths) <= 0):
            raise SpectrumError("wavelengths must be strictly increasing")
        if np.any(self.intensity < 0):
            raise SpectrumError("intensities must be >= 0")

    def __len__(self):
        return len(self.wavelengths)

    def window(self, lo: float, hi: float) -> "Spectrum":
        m = (self.wavelengths >= lo) & (self.wavelengths <= hi)
        return Spectrum(self.wavelengths[m], self.intensity[m])

    def to_dict(self) -> dict:
        return {"wavelength_nm": (self.wavelengths * 1e3).tolist(), "intensity": self.intensity.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Spectrum":
        return cls(np.asarray(d["wavelength_nm"], dtype=float) * 1e-3, d["intensity"])

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("wavelength_nm,intensity\n")
        for w, v in zip(self.wavelengths, self.intensity):
            buf.write(f"{w * 1e3:.10g},{v:.12g}\n")
        return buf.getvalue()


def parse_csv(text: str, source: str = "<string>") -> Spectrum:
    """Parse two-column ``wavelength_nm,intensity`` text.

    Lines starting with ``#`` and blank lines are skipped; a non-numeric
    first row is taken as a header.
    """
    wl, val = [], []
    rows = csv.reader(line for line in text.splitlines() if line.strip() and not line.lstrip().startswith("#"))
    for k, row in enumerate(rows):
        if len(row) < 2:
            raise ConfigError(f"expected two columns, got {row!r}", f"{source}:row {k + 1}")
        try:
            a, b = float(row[0]), float(row[1])
        except ValueError:
            if k == 0 and not wl:
                continue
            raise ConfigError(f"non-numeric value in {row!r}", f"{source}:row {k + 1}") from None
        wl.append(a)
        val.append(b)
    return Spectrum(np.asarray(wl) * 1e-3, val)


def read_csv(path) -> Spectrum:
    path = Path(path)
    return parse_csv(path.read_text(), str(path))


def write_csv(spectrum: Spectrum, path) -> None:
    Path(path).write_text(spectrum.to_csv())
