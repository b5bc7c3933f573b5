"""Charged-particle motion in generalized Dirac monopole fields on R^(2k+1)."""

from .config import RunConfig, parse_config, scenario
from .dynamics import IntegratorConfig, State, Trajectory, integrate, make_state
from .geometry import ConeSpec, cone_of, conservation_report
from .liealg import orbit_base, random_orbit_element

__version__ = "0.1.0"
