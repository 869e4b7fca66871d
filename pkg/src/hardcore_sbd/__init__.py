"""Hard-core spatial birth-death processes with pairwise interactions:
simulation, coupling, coupling from the past and decay-bound checks."""

__version__ = "0.1.0"

from .params import SimParams  # noqa: E402
from .geometry import Window, GridIndex, torus_distance, ball_neighbors, unit_ball_volume, kissing_number  # noqa: E402,F401
from .randomness import EventId, ArrivalEvent, MarkOracle, pair_mark, rain  # noqa: E402,F401
from .dynamics import Configuration, apply_arrival, simulate, generate_initial  # noqa: E402,F401
from .dynamics import build_dependency_graph, resolve_slab  # noqa: E402,F401
from .coupling import CoupledState, coupled_apply_arrival, simulate_coupled, track_families  # noqa: E402,F401
from .coupling import regular_coverage_stat  # noqa: E402,F401
from .cftp import sample_stationary, coincidence_time, stationarity_check  # noqa: E402,F401
from .bounds import theorem_condition  # noqa: E402,F401
from .analysis import fit_decay_rate, laplace_functional, laplace_bound_check, packing_fraction, rho_sweep  # noqa: E402,F401
