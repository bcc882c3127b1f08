import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resforge.errors import CellBudgetError, GeometryError, MaterialError
from resforge.geometry import (
    GratingSpec,
    LayerStack,
    LayoutDocument,
    Material,
    MaterialLibrary,
    PermittivityGrid,
    PhcCavitySpec,
    RingSpec,
    device_from_dict,
    device_polygons,
    device_to_dict,
    export_layout,
    generate_taper,
    grid_placements,
    layered_grid,
    material_lookup,
    membrane_stack,
    rasterize,
    silica_stack,
)

TIO2_EPS = 2.35 ** 2


# ------------------------------------------------------------------ materials

@pytest.mark.parametrize("name, wl, n", [("diamond", 0.737, 2.40), ("air", 0.5, 1.0), ("air", 0.95, 1.0),
                                         ("TiO2", 0.700, 2.35)])
def test_material_lookup_defaults(name, wl, n):
    assert material_lookup(name, wl) == n


def test_unknown_material_raises():
    with pytest.raises(MaterialError):
        material_lookup("unobtainium", 0.7)


def test_table_lookup_outside_range_raises():
    m = Material("x", table=[(0.5, 2.0), (0.8, 2.1)])
    lib = MaterialLibrary({"x": m})
    with pytest.raises(MaterialError):
        material_lookup("x", 0.9, lib)


@pytest.mark.parametrize("table", [[(0.5, 2.0), (0.5, 2.1)], [(0.6, 2.0), (0.5, 2.1)], [(0.5, 0.9), (0.6, 1.2)]])
def test_bad_tables_rejected(table):
    with pytest.raises(MaterialError):
        Material("bad", table=table)


@given(st.lists(st.floats(1.0, 4.0), min_size=2, max_size=8))
def test_table_nodes_returned_exactly(indices):
    wl = np.linspace(0.4, 1.0, len(indices))
    m = Material("t", table=list(zip(wl, indices)))
    for w, n in zip(wl, indices):
        assert m.index(float(w)) == n


def test_library_overrides_do_not_leak():
    a = MaterialLibrary({"TiO2": Material("TiO2", 2.5)})
    b = MaterialLibrary()
    assert a.get("TiO2").index(0.7) == 2.5
    assert b.get("TiO2").index(0.7) == 2.35


def test_layer_stack_rules():
    with pytest.raises(GeometryError):
        LayerStack([("HSQ", 0.0)])
    s = membrane_stack()
    assert s.cover.name == "air"
    assert s.top.name == "diamond"
    assert s.material_at(0.01).name == "air"
    assert s.material_at(-0.01).name == "diamond"
    assert s.material_at(-0.3).name == "HSQ"


# ------------------------------------------------------------------ device specs

@pytest.mark.parametrize("cls, kw", [
    (RingSpec, {"radius": 0.0}), (RingSpec, {"gap_1": -0.1}), (RingSpec, {"waveguide_width": -1}),
    (PhcCavitySpec, {"taper_fraction": 0.0}), (PhcCavitySpec, {"taper_fraction": 1.0}),
    (PhcCavitySpec, {"n_mirror_fins": -1}), (PhcCavitySpec, {"n_taper_fins": 0}),
    (PhcCavitySpec, {"mirror_pitch": 0.1, "fin_width": 0.1}),
    (GratingSpec, {"duty_cycle": 1.0}), (GratingSpec, {"n_teeth": 0}),
])
def test_spec_invariants(cls, kw):
    with pytest.raises(GeometryError):
        cls(**kw)


@pytest.mark.parametrize("spec", [RingSpec(), PhcCavitySpec(), GratingSpec()])
def test_spec_dict_round_trip(spec):
    d = json.loads(json.dumps(device_to_dict(spec)))
    assert device_from_dict(d) == spec


def test_taper_innermost_pitch():
    p = generate_taper(PhcCavitySpec(taper_fraction=0.10, mirror_pitch=0.280, n_taper_fins=5))
    mid = len(p) // 2
    assert p[mid] == pytest.approx(0.252, abs=1e-12)
    assert p[0] == pytest.approx(0.280)


def test_taper_zero_limit_is_constant():
    p = generate_taper(PhcCavitySpec(taper_fraction=1e-12))
    assert np.ptp(p) < 1e-12


def test_single_step_taper():
    spec = PhcCavitySpec(n_taper_fins=1, n_mirror_fins=3)
    p = generate_taper(spec)
    assert list(np.round(p / spec.mirror_pitch, 12)) == [1, 1, 1, 0.9, 0.9, 1, 1, 1]


@given(st.floats(0.01, 0.5), st.integers(0, 30), st.integers(1, 10), st.floats(0.2, 0.4))
def test_taper_is_palindromic(frac, n_mirror, n_taper, pitch):
    spec = PhcCavitySpec(taper_fraction=frac, n_mirror_fins=n_mirror, n_taper_fins=n_taper,
                         mirror_pitch=pitch, fin_width=0.1 * pitch)
    p = generate_taper(spec)
    assert len(p) == spec.n_fins
    assert np.array_equal(p, p[::-1])
    c = spec.fin_centers()
    assert np.allclose(c, -c[::-1], atol=1e-12)


# ------------------------------------------------------------------ rasterization

def test_empty_device_is_uniform():
    g = rasterize(None, LayerStack([], "air"), 0.05)
    assert np.all(g.eps == 1.0)


def test_ring_area_fraction():
    spec = RingSpec(radius=5, waveguide_width=0.3, waveguide_height=0.25, gap_1=0.375, gap_2=0.375)
    g = rasterize(spec, silica_stack(), 0.02)
    frac = np.isclose(g.eps, TIO2_EPS).mean()
    w = spec.waveguide_width
    window_x = g.dims[0] * g.dx
    area = math.pi * ((spec.radius + w / 2) ** 2 - (spec.radius - w / 2) ** 2) + 2 * window_x * spec.bus_width
    expected = area / (g.dims[0] * g.dims[1] * g.dx ** 2)
    assert frac == pytest.approx(expected, rel=0.02)


def test_phc_fin_count():
    spec = PhcCavitySpec(n_mirror_fins=25)
    g = rasterize(spec, silica_stack(), 0.01)
    # a line through the fins but beside the beam
    j = g.index_of((0.0, 0.5 * (spec.waveguide_width + spec.fin_length) / 2))[1]
    high = np.isclose(g.eps[:, j], TIO2_EPS).astype(int)
    assert int(np.sum(np.diff(high) == 1)) == 2 * (25 + spec.n_taper_fins)


def test_rasterize_deterministic():
    a = rasterize(RingSpec(radius=2.0), silica_stack(), 0.03)
    b = rasterize(RingSpec(radius=2.0), silica_stack(), 0.03)
    assert a.eps.tobytes() == b.eps.tobytes()


def test_refinement_bounded_by_shell():
    spec = RingSpec(radius=2.0)
    fr = []
    for dx in (0.04, 0.02):
        g = rasterize(spec, silica_stack(), dx, extent=(3.5, 3.5))
        fr.append((np.isclose(g.eps, TIO2_EPS).sum() * dx ** 2, g))
    area = fr[1][0]
    perimeter = 2 * math.pi * (2 * spec.radius) + 4 * fr[1][1].dims[0] * 0.02
    assert abs(fr[0][0] - fr[1][0]) / area < perimeter * 0.04 / area


def test_3d_view_and_labels():
    g = rasterize(PhcCavitySpec(n_mirror_fins=2), silica_stack(), 0.05, view="3d", padding=0.3)
    assert g.ndim == 3
    assert set(g.label_names) >= {"TiO2", "fused_silica", "air"}
    assert g.label_mask("TiO2").any()


def test_cell_budget_and_degenerate():
    with pytest.raises(CellBudgetError):
        rasterize(RingSpec(), silica_stack(), 0.001, cell_budget=10_000)
    with pytest.raises(GeometryError):
        rasterize(RingSpec(), silica_stack(), 0.0)
    with pytest.raises(GeometryError):
        rasterize(RingSpec(), silica_stack(), 0.02, view="side")


def test_permittivity_grid_invariants():
    with pytest.raises(GeometryError):
        PermittivityGrid(0.01, np.full((4, 4), 0.5))
    with pytest.raises(GeometryError):
        PermittivityGrid(0.0, np.ones((4, 4)))
    with pytest.raises(GeometryError):
        PermittivityGrid(0.01, np.ones(4))


def test_layered_grid_subcell_thickness():
    dx = 0.01
    g, t = layered_grid([(2.0, 0.0537)], dx, pad_in=0.1, pad_out=0.1)
    assert t == [0.0537]
    # excess permittivity integrates to the exact layer thickness
    assert (g.eps[:, 0] - 1.0).sum() * dx == pytest.approx(0.0537 * 3.0, rel=1e-12)


# ------------------------------------------------------------------ layout

def test_layout_72_cavities():
    spec = PhcCavitySpec(n_mirror_fins=10)
    doc = export_layout(grid_placements(spec, (200.0, 300.0), 4, 18, rotations=(90.0,)), (200.0, 300.0))
    assert doc.n_devices == 72
    assert not doc.warnings
    for p in doc.polygons:
        assert len(p.points) >= 3 and abs(p.area()) > 0
        pts = np.asarray(p.points)
        assert pts.min() >= -1e-9 and pts[:, 0].max() <= 200 + 1e-9 and pts[:, 1].max() <= 300 + 1e-9
    back = LayoutDocument.from_dict(json.loads(doc.to_json()))
    assert back.to_dict() == doc.to_dict()


def test_empty_layout():
    doc = export_layout([], (50.0, 40.0))
    assert doc.to_dict()["bbox"] == [50.0, 40.0] and doc.n_devices == 0
    assert "<svg" in doc.to_svg()


def test_ring_rotation_is_exact():
    spec = RingSpec()
    a = device_polygons(spec)
    b = device_polygons(spec, rotation=90.0)
    rot = np.array([[0.0, -1.0], [1.0, 0.0]])
    for pa, pb in zip(a, b):
        assert np.max(np.abs(np.asarray(pa.points) @ rot.T - np.asarray(pb.points))) < 1e-9


def test_layout_overlap_warns_and_outside_raises():
    spec = RingSpec(radius=2.0)
    doc = export_layout([(spec, (10, 10), 0.0), (spec, (11, 10), 0.0)], (30, 30))
    assert doc.n_devices == 2 and doc.warnings
    with pytest.raises(GeometryError):
        export_layout([(spec, (1, 1), 0.0)], (30, 30))


@settings(max_examples=25)
@given(st.floats(-180, 180))
def test_rotation_preserves_area(angle):
    spec = GratingSpec(n_teeth=3)
    a = sum(abs(p.area()) for p in device_polygons(spec))
    b = sum(abs(p.area()) for p in device_polygons(spec, (5.0, 5.0), angle))
    assert b == pytest.approx(a, rel=1e-9)
