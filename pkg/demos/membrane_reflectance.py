"""Normal-incidence reflectance of a diamond membrane bonded to silicon.

The 50 nm diamond / 500 nm HSQ stack is simulated with the FDTD solver
(reference run subtracted) and compared with the transfer-matrix result.

    python demos/membrane_reflectance.py [output-dir]
"""

import sys
import time
from pathlib import Path

import numpy as np

from resforge.analysis import Spectrum
from resforge.fdtd import stack_reflectance
from resforge.resonator import transfer_matrix
from resforge.svg import render_svg

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo-out")
out.mkdir(parents=True, exist_ok=True)

layers = [(2.40, 0.050), (1.41, 0.500)]  # diamond, HSQ; light arrives from air
n_si = 3.70
wl = np.linspace(0.6, 0.8, 101)
dx = wl[0] / (20 * n_si)

t0 = time.perf_counter()
res = stack_reflectance(layers, wl, dx, 1.0, n_si)
r_tm, _ = transfer_matrix(layers, wl, 1.0, n_si)
rms = np.sqrt(np.mean((res.reflectance - r_tm) ** 2))
print(f"dx = {dx * 1e3:.2f} nm, {res.steps} steps, {time.perf_counter() - t0:.1f} s, RMS difference {rms:.4f}")

(out / "membrane_reflectance.svg").write_text(render_svg(
    "spectrum", [("FDTD", Spectrum(wl, res.reflectance.clip(0))), ("transfer matrix", Spectrum(wl, r_tm))],
    title="diamond / HSQ / Si", ylabel="reflectance"))
print(f"wrote {out / 'membrane_reflectance.svg'}")
