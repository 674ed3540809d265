"""Theta characteristics, Goepel systems, Thomae formulas and the rho map for hyperelliptic curves."""
from thetarho.charkit import Characteristic, PartitionChar, SymplecticElement
from thetarho.errors import DomainError, NumericError, OrientationError, VerificationError
from thetarho.riemann import HyperellipticCurve, PeriodData, periods

__version__ = "0.1.0"

__all__ = [
    "Characteristic", "PartitionChar", "SymplecticElement", "HyperellipticCurve", "PeriodData", "periods",
    "DomainError", "NumericError", "OrientationError", "VerificationError",
]
