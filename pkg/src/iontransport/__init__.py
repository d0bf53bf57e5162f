"""Heat transport through trapped-ion Coulomb crystals.

Pipeline: ``crystal`` (equilibrium structures) -> ``network`` (coupling
matrix, baths, disorder) -> ``qep`` (damped normal modes) -> ``transport``
(closed-form steady state). ``oracle`` re-derives the steady state by direct
frequency quadrature; ``cli`` runs seeded experiments.
"""

from .crystal import (CrystalParams, DEOptions, EquilibriumConfiguration, StructureReport,
                      find_equilibrium, order_parameters, path_alpha, potential_energy,
                      potential_gradient, potential_hessian, scan_transition)
from .network import (BathConfig, CouplingMatrix, DisorderSpec, apply_disorder,
                      build_hessian, make_bath)
from .qep import ModeSet, green_eval, solve_qep
from .transport import (SteadyStateReport, TemperatureProfile, central_gradient,
                        conductivity, covariance, heat_current, local_temperatures,
                        mode_currents, steady_state)

__version__ = "0.1.0"
