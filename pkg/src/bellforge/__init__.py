"""Exact toolkit for Bell-type correlations, hidden-variable premises and Ising-lattice analogues."""

__version__ = "0.1.0"

from .checks import (CheckVerdict, check_all, check_factorability, check_mi, check_no_signaling, check_oi,
                     check_pi, check_screening_off, recheck)
from .lattice import (SpinLattice, bell_conditional, boltzmann_joint, closed_form_ladder, hamiltonian, hexagon6,
                      ladder10, lattice_as_hv_model, lattice_chsh)
from .metrics import TSIRELSON, ChshReport, SettingsQuad, chsh, chsh_scan, correlator, quantum_correlation
from .models import (STANDARD_QUAD, HiddenVariableModel, bb1, build_model, compose_bb, compose_local, dilorenzo,
                     local_model, validate)
from .optimize import (Assignment, SearchResult, SearchSpace, enumerate_orbits, exhaustive_max, hill_climb,
                       landscape_slice, paper_grid)
from .prob import ConditionalTable, VariableSpec, condition, expand, make_table, marginalize, spin
