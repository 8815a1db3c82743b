"""Independent ground-truth solvers and error metrics.

Finite-difference solvers for the traveling-wave and corrosion systems,
a shooting method with bisection eigenvalue search for steady combustion,
the closed-form melting-front law, plus the relative-L2 metric and
level-set interface extraction used for every comparison.
"""

from .gridio import GridSolution, load_grid, save_grid
from .metrics import extract_interface, relative_l2
from .fisher_fd import fd_fisher
from .combustion_shooting import ShootingResult, shoot_combustion
from .ice_analytic import analytic_ice, melting_radius
from .corrosion_fd import fd_corrosion

__all__ = [
    "GridSolution",
    "save_grid",
    "load_grid",
    "relative_l2",
    "extract_interface",
    "fd_fisher",
    "ShootingResult",
    "shoot_combustion",
    "analytic_ice",
    "melting_radius",
    "fd_corrosion",
]
