"""Resilient consensus under F-local Byzantine attacks with active secure
neighbor selection, a W-MSR baseline and exact r-robustness certification."""
from .adversary import (
    Affine,
    AttackRule,
    AttackSchedule,
    AttackScript,
    Constant,
    ModulatedVector,
    Replay,
    StateHistory,
    check_f_local,
    schedule_of,
    transmitted_value,
)
from .detection import (
    DetectionState,
    TwoHopPacket,
    build_packet,
    detect_neighbor,
    merge_broadcasts,
)
from .dynamics import AgentState, HullBounds, Role, consensus_step, hull_of, validate_step_size
from .errors import (
    AsnsError,
    CapacityError,
    ConfigError,
    ConvergenceError,
    ParseError,
    PreconditionError,
    ProtocolError,
    SimulationError,
    StructureError,
    UnknownNodeError,
)
from .graph import (
    DirectedGraph,
    build_laplacian,
    has_rooted_spanning_tree,
    induced_subgraph,
    is_connected,
    is_r_reachable,
    max_robustness,
)
from .msr import MsrConfig, wmsr_step
from .scenario import Scenario, format_scenario, load_scenario, parse_graph, parse_scenario
from .selection import (
    PreDiscriminativeGraph,
    SelectionContext,
    SelectionPolicy,
    build_pre_graph,
    compute_psi,
    pick_virtual_leader,
    select_in_neighbors,
)
from .simulate import SimTrace, relative_error, run_scenario
from .spectral import Eigenpair, PerturbedLaplacian, perturbed_laplacian, smallest_eigenpair
from .trace import write_trace

__version__ = "0.1.0"
