"""Cluster-expansion simulator for driven-dissipative multimode bosonic
systems, with mean-field and truncated-Fock-space reference solvers."""

from .algebra import (
    Monomial,
    OperatorPoly,
    adjoint,
    commutator,
    lindblad_adjoint,
    multiply,
    normal_order,
)
from .analytics import (
    detect_self_pulsing,
    g2_from_moments,
    moment_value,
    opo_threshold,
    photon_number,
    shg_selfpulsing_threshold,
)
from .clusters import (
    ClusterBasis,
    CumulantTable,
    MomentODESystem,
    build_system,
    canonicalize,
    close_moment,
    count_clusters,
    cumulant_of,
    enumerate_basis,
    moment_rhs,
)
from .integrate import MomentState, SteadyStateResult, Trajectory, integrate, steady_state
from .model import DriveSpec, ModelSpec, opo_model, shg_model

__version__ = "0.1.0"
