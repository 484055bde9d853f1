"""Deterministic finite-volume kinetic plasma solver.

Phase-space (up to 2D space x 3D velocity) finite-volume transport coupled
to an implicit collocated field update and conservative Coulomb collision
operators, plus the semi-analytical linear-theory oracles used to validate
it.
"""

from .grid import (PhaseGrid, DistributionField, FieldSet, Normalization,
                   build_grid, maxwellian, apply_scaling, save_snapshot,
                   load_snapshot)
from .transport import (LimiterChoice, minmod2, minmod3, advect_line_order2,
                        advect_line_order4, vlasov_step_transport, cfl_dt)
from .maxwell import (MaxwellSolveConfig, compute_current, step_maxwell_1d,
                      step_maxwell_2d, gauss_residual)
from .collisions import phi, lorentz_apply, landau_apply_direct, collision_step

__version__ = "0.1.0"
