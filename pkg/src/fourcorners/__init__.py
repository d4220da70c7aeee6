"""Four-corners analysis of Lindbladian asymptotic subspaces.

Modules: opspace (vectorization), lindblad (generators, spectra), corners
(four-corners partition and gaps), asymptotics (conserved quantities,
projections, Drazin inverse, channels), response (Kubo response, effective
Hamiltonians, leakage), geometry (connections, holonomy, QGT, adiabatic
propagation), models (builtins), cli (command line).
"""
from .opspace import *  # noqa: F401,F403
from .lindblad import *  # noqa: F401,F403
from .corners import *  # noqa: F401,F403
from .asymptotics import *  # noqa: F401,F403
from .response import *  # noqa: F401,F403
from .geometry import *  # noqa: F401,F403
from . import models  # noqa: F401

__version__ = "0.1.0"
