"""Exact intersection theory on weakly embedded simplicial cone complexes."""
from .complex import ComplexMorphism, Cone, ConeComplex, Ray, Subdivision
from .cycles import (
    Divisor,
    ExtendedCycle,
    MinkowskiWeight,
    TropicalCycle,
    check_balanced,
    cup,
    degree,
    dot,
    graph_witness,
    pushforward,
)

__all__ = [
    "ComplexMorphism",
    "Cone",
    "ConeComplex",
    "Divisor",
    "ExtendedCycle",
    "MinkowskiWeight",
    "Ray",
    "Subdivision",
    "TropicalCycle",
    "check_balanced",
    "cup",
    "degree",
    "dot",
    "graph_witness",
    "pushforward",
]
__version__ = "0.1.0"
