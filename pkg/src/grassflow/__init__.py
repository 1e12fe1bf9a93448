"""Solvers for nonlinear PDEs via linear base flows and Fredholm/Riccati
projection, cross-validated against independent direct integrators."""

__version__ = "0.1.0"

from .core import Grid1D, QuadratureRule, SpectralField, RandomStream
from .errors import (GrassflowError, ConfigError, SingularSystem,
                     ChartBreakdown, BlowupAtTime, IntegrationBlowup,
                     DomainError, SymbolError, TraceRangeError,
                     ShockProximity, NewtonDivergence)
