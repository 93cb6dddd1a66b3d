"""Exact finite-scale computations for tail-equivalence groupoids, their twisted
products over free groups and the integers, and the measure and Folner
arguments that separate them from almost finite and purely infinite ones."""

from .cantor_algebra import ClopenSet, Cylinder, ProductCylinder, clopen_measure, cylinder_measure, product_measure
from .certificate import Certificate
from .errors import (ChainError, CompositionError, ConditioningOnNull, DepthInsufficient, DomainError,
                     GroupoidLabError, InfeasibleSystem, InvalidCover, InvalidInput, WindowOverflow)
from .group_words import FreeGroup, GroupElement, IntegerGroup, ball, boundary_deficiency, parse_group
from .sft_groupoid import PrefixBisection, SftArrow, apply_bisection
from .twisted_groupoid import BasisSet, SupportedArrow, Truncation, UnitPoint

__version__ = "0.1.0"

__all__ = [
    "BasisSet", "ChainError", "ClopenSet", "CompositionError", "ConditioningOnNull", "Certificate", "Cylinder",
    "DepthInsufficient", "DomainError", "FreeGroup", "GroupElement", "GroupoidLabError", "InfeasibleSystem",
    "IntegerGroup", "InvalidCover", "InvalidInput", "PrefixBisection", "ProductCylinder", "SftArrow",
    "SupportedArrow", "Truncation", "UnitPoint", "WindowOverflow", "apply_bisection", "ball",
    "boundary_deficiency", "clopen_measure", "cylinder_measure", "parse_group", "product_measure",
]
