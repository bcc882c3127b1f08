import re

import numpy as np
import pytest

from resforge.analysis import Spectrum
from resforge.geometry import RingSpec, export_layout
from resforge.svg import COLORMAP, render_svg


def test_two_point_spectrum():
    svg = render_svg("spectrum", Spectrum([0.70, 0.71], [1.0, 2.0]))
    paths = re.findall(r'class="series" d="([^"]+)"', svg)
    assert len(paths) == 1 and paths[0].count("L") == 1
    assert svg.count('class="xtick"') == 2 and svg.count('class="ytick"') == 2
    assert ">700<" in svg and ">710<" in svg


def test_rendering_is_deterministic():
    rng = np.random.default_rng(0)
    F = rng.random((30, 20)) * 100
    assert render_svg("purcell_map", F) == render_svg("purcell_map", F.copy())
    sp = Spectrum(np.linspace(0.7, 0.71, 50), rng.random(50))
    assert render_svg("spectrum", [("a", sp)]) == render_svg("spectrum", [("a", sp)])


def test_purcell_map_has_labelled_colorbar():
    F = np.outer(np.hanning(40), np.hanning(30)) * 170 + 1e-3
    svg = render_svg("purcell_map", F, extent=((-2, 2), (-1.5, 1.5)))
    assert "F_Purcell" in svg
    assert "<image" not in svg and "href" not in svg
    assert len(COLORMAP) == 256 and len(set(COLORMAP)) > 200


def test_field_map_and_layout():
    assert "<rect" in render_svg("field_map", np.ones((5, 4)))
    doc = export_layout([(RingSpec(radius=2.0), (10.0, 10.0), 0.0)], (20.0, 20.0))
    assert render_svg("layout", doc) == doc.to_svg()
    assert render_svg("layout", doc.to_dict()) == doc.to_svg()


@pytest.mark.parametrize("kind, data", [("spectrum", []), ("field_map", np.zeros((0, 3))),
                                        ("purcell_map", np.zeros((0, 0)))])
def test_empty_data_rejected(kind, data):
    with pytest.raises(ValueError):
        render_svg(kind, data)


def test_unknown_kind_rejected():
    with pytest.raises(ValueError):
        render_svg("histogram", [1, 2, 3])
