from .materials import (
    DEFAULT_LIBRARY,
    LayerStack,
    Material,
    MaterialLibrary,
    get_material,
    material_lookup,
    membrane_stack,
    register_material,
    silica_stack,
)
from .devices import (
    GratingSpec,
    PhcCavitySpec,
    RingSpec,
    device_from_dict,
    device_to_dict,
    fin_centers,
    generate_taper,
)
from .raster import (
    PermittivityGrid,
    layered_grid,
    rasterize,
    waveguide_cross_section,
)
from .layout import LayoutDocument, Polygon, device_polygons, export_layout, grid_placements

__all__ = [
    "DEFAULT_LIBRARY", "LayerStack", "Material", "MaterialLibrary", "get_material",
    "material_lookup", "membrane_stack", "register_material", "silica_stack",
    "GratingSpec", "PhcCavitySpec", "RingSpec", "device_from_dict", "device_to_dict",
    "fin_centers", "generate_taper", "PermittivityGrid", "layered_grid", "rasterize",
    "waveguide_cross_section", "LayoutDocument", "Polygon", "device_polygons",
    "export_layout", "grid_placements",
]
