"""Acceptance suite: one or more tests per numbered criterion, at the stated tolerances.

Each test carries a ``criterion`` marker; ``conftest.py`` prints a PASS/FAIL
line per criterion at the end of the run.
"""

import math
import time

import numpy as np
import pytest

from oracles import gaussian_mode_volume, symmetric_slab_index
from resforge.analysis import (
    ensemble_stats,
    fit_lorentzian,
    format_table,
    process_plan,
    scattering_loss_ratio,
    synthetic_ensemble,
    synthetic_spectrum,
)
from resforge.fdtd import PmlParams, SimulationDomain, pml_reflection, stack_reflectance
from resforge.geometry import PermittivityGrid, PhcCavitySpec, silica_stack, waveguide_cross_section
from resforge.modes import cross_section_modes, fundamental_solver, group_index
from resforge.resonator import (
    bloch_band_1d,
    cavity_resonance,
    cooperativity,
    effective_indices,
    fsr,
    mirror_band,
    mode_volume,
    phc_scene,
    purcell_map,
    select_gap,
    transfer_matrix,
)

# five layers from the incidence side; the last two are the diamond / HSQ membrane on silicon
FIVE_LAYER = [(2.35, 0.25), (1.41, 0.10), (2.35, 0.25), (2.40, 0.05), (1.41, 0.50)]
MEMBRANE_STACK = [(2.40, 0.05), (1.41, 0.50)]
N_SUBSTRATE = 3.70
BAND = np.linspace(0.6, 0.8, 101)
# 20 cells per shortest wavelength in the densest medium
DX_20PPW = 0.6 / (20 * N_SUBSTRATE)


def detail(request, text):
    request.node.user_properties.append(("detail", text))


def rms_vs_transfer_matrix(layers, dx, workers=1):
    t0 = time.perf_counter()
    res = stack_reflectance(layers, BAND, dx, 1.0, N_SUBSTRATE, workers=workers)
    elapsed = time.perf_counter() - t0
    r_ref, _ = transfer_matrix(layers, BAND, 1.0, N_SUBSTRATE)
    return res, float(np.sqrt(np.mean((res.reflectance - r_ref) ** 2))), elapsed


@pytest.fixture(scope="module")
def five_layer_runs():
    return {dx: rms_vs_transfer_matrix(FIVE_LAYER, dx) for dx in (DX_20PPW, DX_20PPW / 2)}


# ------------------------------------------------------------------ FDTD

@pytest.mark.criterion(1, "FDTD reflectance vs transfer matrix, < 1% RMS at 20 px/wavelength, < 60 s")
def test_c01_five_layer_stack(five_layer_runs, request):
    res, rms, elapsed = five_layer_runs[DX_20PPW]
    detail(request, f"RMS {rms:.4%}, {elapsed:.1f} s")
    assert res.layers == FIVE_LAYER
    assert rms < 0.01
    assert elapsed < 60.0


@pytest.mark.criterion(1, "FDTD reflectance vs transfer matrix, < 1% RMS at 20 px/wavelength, < 60 s")
def test_c01_methods_stack(request):
    _, rms, elapsed = rms_vs_transfer_matrix(MEMBRANE_STACK, DX_20PPW)
    detail(request, f"membrane stack RMS {rms:.4%}, {elapsed:.1f} s")
    assert rms < 0.01
    assert elapsed < 60.0


@pytest.mark.criterion(2, "halving dx cuts the RMS error by a factor in [3, 5]")
def test_c02_convergence(five_layer_runs, request):
    coarse = five_layer_runs[DX_20PPW][1]
    fine = five_layer_runs[DX_20PPW / 2][1]
    detail(request, f"ratio {coarse / fine:.2f}")
    assert 3.0 <= coarse / fine <= 5.0


@pytest.mark.criterion(3, "PML residual reflection < 1e-4 (thickness 12, m = 3)")
def test_c03_pml(request):
    pml = PmlParams(thickness=12, order=3)
    r = pml_reflection(pml=pml)
    detail(request, f"{r:.2e}")
    assert r < 1e-4


# ------------------------------------------------------------------ modes

@pytest.mark.criterion(4, "slab-equivalent n_eff within 1e-3 of the oracle; cross-overlap < 1e-6")
@pytest.mark.parametrize("pol", ["TE", "TM"])
def test_c04_mode_solver(pol, request):
    dz, t = 0.01, 0.6
    nz = int(round((t + 3.0) / dz))
    z = (np.arange(nz) + 0.5) * dz - 1.5
    eps = np.where((z >= 0) & (z < t), 2.35 ** 2, 1.45 ** 2)[None, :].copy()
    grid = PermittivityGrid(dz, eps, (0.0, -1.5))
    m0, m1 = cross_section_modes(grid, 0.7, 2, pol, ("periodic", "dirichlet"))
    oracle = symmetric_slab_index(2.35, 1.45, t, 0.7, pol)
    overlap = abs(m0.overlap(m1, weighted=True))
    detail(request, f"{pol}: |dn| {abs(m0.n_eff - oracle):.1e}, overlap {overlap:.1e}")
    assert abs(m0.n_eff - oracle) < 1e-3
    assert overlap < 1e-6


@pytest.mark.criterion(5, "FSR of the 300 x 250 nm TiO2 ring, R = 5 um, is 5.9 nm +/- 15%")
def test_c05_fsr(request):
    solve = fundamental_solver(
        lambda wl: waveguide_cross_section(0.30, 0.25, silica_stack(), 0.01, padding=1.0, wavelength=wl))
    n_g = group_index(solve, 0.700)
    f = fsr(0.700, n_g, 5.0) * 1e3
    detail(request, f"n_g {n_g:.3f}, FSR {f:.3f} nm")
    assert abs(f - 5.9) <= 0.15 * 5.9


# ------------------------------------------------------------------ analysis

@pytest.mark.criterion(6, "Lorentzian fit: Q 33,260 with 5% noise within 2%; noiseless device to 1e-6")
def test_c06_fitting(request):
    noisy = fit_lorentzian(synthetic_spectrum(0.737, 33260.0, seed=0, noise=0.05))
    clean = fit_lorentzian(synthetic_spectrum(0.710341, 9070.0, seed=0))
    detail(request, f"noisy Q {noisy.q:.0f}, clean rel. err {abs(clean.q / 9070 - 1):.1e}")
    assert abs(noisy.q / 33260.0 - 1) < 0.02
    assert abs(clean.q / 9070.0 - 1) < 1e-6
    assert abs(clean.wavelength / 0.710341 - 1) < 1e-6


@pytest.mark.criterion(7, "ensemble statistics: mean within 0.4 nm, std > 0, lower-bound flag")
def test_c07_ensemble(request):
    stats = ensemble_stats(synthetic_ensemble(606.499, 0.623, 6040.0, 10, seed=0))
    table = format_table([stats])
    detail(request, f"mean {stats.mean_wavelength_nm:.3f} nm, std {stats.std_wavelength_nm:.3f} nm")
    assert abs(stats.mean_wavelength_nm - 606.499) < 0.4
    assert stats.std_wavelength_nm > 0
    assert stats.q_lower_bound
    assert "Mean λ (nm)" in table and "6,040 a" in table and "lower bounds" in table


# ------------------------------------------------------------------ Purcell and cooperativity

@pytest.mark.criterion(8, "F_max = 167.2 +/- 0.1 at Q 4400, V 2.0 (lambda/n)^3; within 10% of 175; linear in Q")
def test_c08_purcell(request):
    wl, n = 0.737, 2.4
    dx = (wl / n) / 10
    u = np.zeros((28, 18, 18))
    u[4:24, 4:14, 4:14] = 1.0  # 2000 cells = 2.0 (lambda/n)^3
    eps = np.full(u.shape, n * n)
    pm = purcell_map(u, eps, dx, 4400.0, wl)
    doubled = purcell_map(u, eps, dx, 8800.0, wl)
    detail(request, f"F_max {pm.F_max:.2f}")
    assert abs(pm.F_max - 167.2) <= 0.1
    assert abs(pm.F_max - 175.0) / 175.0 <= 0.10
    assert np.array_equal(doubled.F, 2.0 * pm.F)


@pytest.mark.criterion(9, "cooperativity: F in [115, 175] maps to C in [8.05, 12.25], overlapping 1-10")
def test_c09_cooperativity(request):
    lo, hi = cooperativity(115.0).c, cooperativity(175.0).c
    detail(request, f"C {lo:.2f}-{hi:.2f}")
    assert lo == pytest.approx(8.05, abs=1e-9)
    assert hi == pytest.approx(12.25, abs=1e-9)
    assert 1.0 <= lo <= 10.0


# ------------------------------------------------------------------ cavity

@pytest.fixture(scope="module")
def cavity_runs():
    design = 0.737
    out, t0 = {}, time.perf_counter()
    for fins in (10, 15, 20):
        spec = PhcCavitySpec(n_mirror_fins=fins)
        eff = effective_indices(spec, silica_stack(), design)
        band = mirror_band(spec, eff, (0.5 * design, 2.0 * design))
        gap = select_gap(band, design)
        pml = PmlParams()
        dom = SimulationDomain(phc_scene(spec, eff, 0.02, 1.0, pml.thickness), "TE", 0.5, pml)
        out[fins] = (band, gap, cavity_resonance(dom, gap))
    return out, time.perf_counter() - t0


@pytest.mark.slow
@pytest.mark.criterion(10, "2D cavity: resonance in the Bloch gap, Q non-decreasing in fins, Q estimates within 20%")
def test_c10_cavity(cavity_runs, request):
    runs, elapsed = cavity_runs
    qs = []
    for fins, (band, gap, res) in runs.items():
        check = bloch_band_1d(*band.segments, (0.5 * 0.737, 2.0 * 0.737))
        detail(request, f"{fins} fins: {res.wavelength * 1e3:.1f} nm, Q {res.q:.0f}, ringdown Q {res.q_ringdown:.0f}")
        assert check.in_gap(res.wavelength)
        assert gap[0] <= res.wavelength <= gap[1]
        assert abs(res.q_ringdown - res.q) / res.q <= 0.20
        qs.append(res.q)
    detail(request, f"{elapsed:.0f} s")
    assert all(b >= a for a, b in zip(qs, qs[1:]))
    assert elapsed < 15 * 60


# ------------------------------------------------------------------ scattering, process, mode volume

@pytest.mark.criterion(11, "scattering ratio (602 vs 737 nm, equal roughness) = 1.835 +/- 1e-3")
def test_c11_scattering(request):
    r = scattering_loss_ratio(1.0, 602.0, 1.0, 737.0)
    detail(request, f"{r:.4f}")
    assert abs(r - 1.835) <= 1e-3
    assert math.isclose(r, (737.0 / 602.0) ** 3, rel_tol=1e-15)
    assert math.isclose(scattering_loss_ratio(3.0, 700.0, 1.0, 700.0), 9.0, rel_tol=1e-15)


@pytest.mark.criterion(12, "process plan: 6667 ALD cycles, thinning 321.4-375.0 s, descum 7.5 nm")
def test_c12_process(request):
    plan = process_plan(250.0, 150.0, thin_from=500.0, thin_to=50.0)
    detail(request, f"{plan.ald_cycles} cycles, {plan.membrane_etch_time[0]:.1f}-{plan.membrane_etch_time[1]:.1f} s")
    assert plan.ald_cycles == 6667
    assert round(plan.membrane_etch_time[0], 1) == 321.4
    assert round(plan.membrane_etch_time[1], 1) == 375.0
    assert plan.pmma_descum_removal == 7.5


@pytest.mark.criterion(13, "mode volume: separable Gaussian within 2%; single-cell delta exact")
def test_c13_mode_volume(request):
    sig = (0.12, 0.09, 0.15)
    dx = min(sig) / 8
    axes = [np.arange(-math.ceil(5 * s / dx), math.ceil(5 * s / dx) + 1) * dx for s in sig]
    X, Y, Z = np.meshgrid(*axes, indexing="ij")
    u = np.exp(-0.5 * ((X / sig[0]) ** 2 + (Y / sig[1]) ** 2 + (Z / sig[2]) ** 2))
    v = mode_volume(u, np.ones_like(u), dx, 0.7).volume
    rel = abs(v / gaussian_mode_volume(sig) - 1)
    delta = np.zeros((7, 7, 7))
    delta[3, 3, 3] = 2.5
    vd = mode_volume(delta, np.full(delta.shape, 5.76), 0.03, 0.7).volume
    detail(request, f"Gaussian rel. err {rel:.1e}")
    assert rel < 0.02
    assert vd == 0.03 ** 3


# ------------------------------------------------------------------ determinism

@pytest.mark.criterion(14, "criterion 1 with 1, 2 and 4 workers gives bitwise-identical flux")
def test_c14_worker_determinism(five_layer_runs, request):
    ref = five_layer_runs[DX_20PPW][0]
    for workers in (2, 4):
        res, _, _ = rms_vs_transfer_matrix(FIVE_LAYER, DX_20PPW, workers=workers)
        for name in ("incident_flux", "reflected_flux", "transmitted_flux"):
            assert getattr(res, name).tobytes() == getattr(ref, name).tobytes(), (workers, name)
    detail(request, "workers 1, 2, 4 identical")
