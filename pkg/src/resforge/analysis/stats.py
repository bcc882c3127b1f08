"""Ensemble statistics over fitted devices, in the layout of a resonance table."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .fitting import ResonanceFit


@dataclass
class EnsembleStats:
    """Mean and sample standard deviation of resonance wavelength (nm), mean Q.

    ``q_lower_bound`` is set when any contributing fit was under-resolved;
    ``single`` marks n = 1, where the standard deviation is reported as 0.
    """

    mean_wavelength_nm: float
    std_wavelength_nm: float
    mean_q: float
    n_devices: int
    q_lower_bound: bool = False
    single: bool = False

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "EnsembleStats":
        keys = cls.__dataclass_fields__
        return cls(**{k: v for k, v in d.items() if k in keys})


def ensemble_stats(fits) -> EnsembleStats:
    """Aggregate a collection of ResonanceFit records.

    The result does not depend on input order: values are sorted before the
    sums are taken.
    """
    fits = list(fits)
    if not fits:
        raise ValueError("ensemble_stats needs at least one fit")
    wl = np.sort(np.array([f.wavelength for f in fits]) * 1e3)
    q = np.sort(np.array([f.q for f in fits]))
    n = len(fits)
    std = float(np.std(wl, ddof=1)) if n > 1 else 0.0
    return EnsembleStats(
        mean_wavelength_nm=float(np.mean(wl)),
        std_wavelength_nm=std,
        mean_q=float(np.mean(q)),
        n_devices=n,
        q_lower_bound=any(f.lower_bound for f in fits),
        single=n == 1,
    )


def format_table(rows, labels=None) -> str:
    """Text table with columns mean wavelength, standard deviation and mean Q.

    Lower-bound Q values carry an ``a`` marker explained in a footnote.
    """
    rows = list(rows)
    head = ["Mean λ (nm)", "Std. dev. λ (nm)", "Mean Q"]
    if labels is not None:
        head = ["Set"] + head
    lines = []
    flagged = False
    for k, st in enumerate(rows):
        q = f"{st.mean_q:,.0f}"
        if st.q_lower_bound:
            q += " a"
            flagged = True
        cells = [f"{st.mean_wavelength_nm:.3f}", f"{st.std_wavelength_nm:.3f}", q]
        if labels is not None:
            cells = [str(labels[k])] + cells
        lines.append(cells)
    widths = [max(len(h), *(len(r[i]) for r in lines)) if lines else len(h) for i, h in enumerate(head)]
    out = ["  ".join(h.ljust(w) for h, w in zip(head, widths))]
    out.append("  ".join("-" * w for w in widths))
    out += ["  ".join(c.ljust(w) for c, w in zip(r, widths)) for r in lines]
    if flagged:
        out.append("a) spectrometer-limited: quality factors are lower bounds only")
    return "\n".join(out) + "\n"


def synthetic_ensemble(mean_nm: float, std_nm: float, q: float, n: int, seed: int,
                       lower_bound: bool = True) -> list[ResonanceFit]:
    """Draw ``n`` fits with normally distributed centres (fixed ``seed``)."""
    rng = np.random.default_rng(seed)
    wl = (mean_nm + std_nm * rng.standard_normal(n)) * 1e-3
    return [ResonanceFit(float(w), float(w / q), q, 1.0, 0.0, 0.0, lower_bound) for w in wl]
