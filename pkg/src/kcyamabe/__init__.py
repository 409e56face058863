"""Koiso-Cao soliton profile, curvature and U(2)-invariant Yamabe solver."""

__version__ = "0.1.0"

from .ode import EventSpec, IntegratorConfig, Trajectory, integrate, locate_event
from .soliton import (REFERENCE_C0, SolitonProfile, build_profile, canonical_profile, cao_root,
                      find_c0, first_minimum)
from .yamabe import YamabeConfig, YamabeSolution, solve, uniqueness_scan
