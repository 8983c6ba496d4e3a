"""Support functions on the sphere, Aleksandrov spectra, Brunn-Minkowski-type
inequality checks and a solver for the even L_p Minkowski problem."""

__version__ = "0.1.0"

from .kernels import BACKEND  # noqa: E402
from .sphere import SpectralField, build_grid, working_grid  # noqa: E402
from .body import BodyRep, CatalogEntry, body_from_field, make_body, wulff_body  # noqa: E402

__all__ = [
    "BACKEND",
    "BodyRep",
    "CatalogEntry",
    "SpectralField",
    "body_from_field",
    "build_grid",
    "make_body",
    "working_grid",
    "wulff_body",
]
