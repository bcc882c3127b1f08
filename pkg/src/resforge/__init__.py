"""Design and verification toolkit for visible-wavelength nanophotonic resonators."""

__version__ = "0.1.0"
