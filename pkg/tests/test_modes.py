import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import symmetric_slab_index
from resforge.errors import CutoffError, ModeSwapError, NoGuidedModeError
from resforge.geometry import LayerStack, PermittivityGrid, membrane_stack, silica_stack, waveguide_cross_section
from resforge.modes import (
    ModeSolution,
    cross_section_modes,
    fundamental_solver,
    group_index,
    mode_operator,
    slab_dispersion,
    slab_group_index,
    stacked_slab_index,
)

# frozen from the independent half-width oracle (n 2.35 / 1.45, t = 0.25 um, lambda = 0.7 um)
SLAB_TE0 = 2.1580477613965736
SLAB_TM0 = 2.054216422816262


def slab_grid(t, dz, n_core=2.35, n_clad=1.45, pad=1.5):
    nz = int(round((t + 2 * pad) / dz))
    z = (np.arange(nz) + 0.5) * dz - pad
    eps = np.where((z >= 0) & (z < t), n_core ** 2, n_clad ** 2)
    return PermittivityGrid(dz, eps[None, :].copy(), (0.0, -pad))


SLAB_BC = ("periodic", "dirichlet")


# ------------------------------------------------------------------ analytic slab

@pytest.mark.parametrize("pol, frozen", [("TE", SLAB_TE0), ("TM", SLAB_TM0)])
def test_slab_matches_oracle(pol, frozen):
    n = slab_dispersion(2.35, 1.45, 1.45, 0.25, 0.7, pol)
    assert n == pytest.approx(symmetric_slab_index(2.35, 1.45, 0.25, 0.7, pol), abs=1e-12)
    assert n == pytest.approx(frozen, abs=1e-12)
    assert 1.45 < n < 2.35


def test_bulk_limit():
    assert slab_dispersion(2.35, 1.45, 1.45, 50.0, 0.7) == pytest.approx(2.35, abs=1e-4)


def test_cutoff_and_bad_indices():
    with pytest.raises(CutoffError):
        slab_dispersion(2.35, 1.45, 1.45, 0.05, 0.7, order=1)
    with pytest.raises(ValueError):
        slab_dispersion(1.4, 1.45, 1.0, 0.25, 0.7)


@given(st.floats(1.6, 3.5), st.floats(1.0, 1.5), st.floats(0.05, 2.0), st.floats(0.4, 1.0),
       st.sampled_from(["TE", "TM"]))
def test_slab_index_between_cladding_and_core(n_core, n_clad, t, wl, pol):
    n = slab_dispersion(n_core, n_clad, n_clad, t, wl, pol)
    assert n_clad < n < n_core
    assert n == pytest.approx(symmetric_slab_index(n_core, n_clad, t, wl, pol), abs=1e-9)


def test_slab_group_index_matches_finite_difference():
    analytic = slab_group_index(2.35, 1.45, 1.0, 0.25, 0.7)
    fd = group_index(lambda wl: slab_dispersion(2.35, 1.45, 1.0, 0.25, wl), 0.7, dl=1e-4)
    assert fd == pytest.approx(analytic, abs=1e-6)


# ------------------------------------------------------------------ finite-difference solver

@pytest.mark.parametrize("pol", ["TE", "TM"])
def test_grid_slab_matches_analytic(pol):
    # 25 cells across the core
    m = cross_section_modes(slab_grid(0.25, 0.01), 0.7, 1, pol, SLAB_BC)[0]
    assert m.n_eff == pytest.approx(slab_dispersion(2.35, 1.45, 1.45, 0.25, 0.7, pol), abs=1e-3)


@pytest.mark.parametrize("pol", ["TE", "TM"])
def test_grid_slab_modes_are_orthogonal(pol):
    modes = cross_section_modes(slab_grid(0.6, 0.01), 0.7, 2, pol, SLAB_BC)
    assert len(modes) == 2 and modes[0].n_eff > modes[1].n_eff
    assert abs(modes[0].overlap(modes[1], weighted=True)) < 1e-6
    assert modes[1].n_eff == pytest.approx(slab_dispersion(2.35, 1.45, 1.45, 0.6, 0.7, pol, order=1), abs=2e-3)


def test_uniform_grid_has_no_guided_mode():
    with pytest.raises(NoGuidedModeError):
        cross_section_modes(PermittivityGrid(0.02, np.full((30, 30), 2.0)), 0.7)


def test_strip_waveguide_on_silica():
    g = waveguide_cross_section(0.30, 0.25, silica_stack(), 0.02, padding=1.0, wavelength=0.7)
    m = cross_section_modes(g, 0.7, 1, "TE")[0]
    assert 1.45 < m.n_eff < 2.35
    # peak inside the core rectangle
    i, j = np.unravel_index(np.argmax(np.abs(m.profile)), m.profile.shape)
    x = g.origin[0] + (i + 0.5) * g.dx
    z = g.origin[1] + (j + 0.5) * g.dx
    assert abs(x) < 0.15 and 0 <= z <= 0.25
    assert m.profile.max() == 1.0
    assert sum(m.confinement_fractions.values()) == pytest.approx(1.0, abs=1e-6)
    assert all(0 <= v <= 1 for v in m.confinement_fractions.values())
    assert m.confinement_fractions["TiO2"] > 0.3


def test_mirror_symmetric_profile_and_residual():
    g = waveguide_cross_section(0.30, 0.25, LayerStack([], "air"), 0.01, padding=0.8, wavelength=0.7)
    m = cross_section_modes(g, 0.7, 1, "TE")[0]
    p = m.profile
    assert abs(np.sum(p * p[::-1, :]) / np.sum(p * p)) == pytest.approx(1.0, abs=1e-6)
    A = mode_operator(g, 0.7, "TE")
    v = p.ravel()
    lam = (2 * math.pi / 0.7 * m.n_eff) ** 2
    assert np.linalg.norm(A @ v - lam * v) / np.linalg.norm(v) < 1e-8 * lam
    assert m.residual < 1e-8


def test_group_index_of_uniform_medium():
    n = 1.7
    assert group_index(lambda wl: n, 0.7) == n


def test_group_index_detects_mode_swap():
    g = slab_grid(0.6, 0.02)
    m0, m1 = cross_section_modes(g, 0.7, 2, "TE", SLAB_BC)

    def swapping(wl):
        return m0 if wl <= 0.7 else m1

    with pytest.raises(ModeSwapError):
        group_index(swapping, 0.7)


def test_group_index_on_grid_slab():
    solve = fundamental_solver(lambda wl: slab_grid(0.25, 0.005), "TE", SLAB_BC)
    assert group_index(solve, 0.7) == pytest.approx(slab_group_index(2.35, 1.45, 1.45, 0.25, 0.7), abs=1e-3)


def test_stacked_slab_on_membrane_stops_at_substrate():
    m = stacked_slab_index(2.35, 0.25, membrane_stack(), 0.737)
    names = m.grid.label_names
    assert "Si" not in names
    assert 1.41 < m.n_eff < 2.40


@settings(max_examples=10, deadline=None)
@given(st.floats(0.15, 0.5), st.sampled_from(["TE", "TM"]))
def test_grid_modes_within_index_bounds(t, pol):
    for m in cross_section_modes(slab_grid(t, 0.01), 0.7, 2, pol, SLAB_BC):
        assert 1.45 < m.n_eff < 2.35
        assert isinstance(m, ModeSolution)
