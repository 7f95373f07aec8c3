"""Redundancy allocation for NFV service chains.

Places backup network-function instances and assigns backup chains so that
per-flow availability targets hold, accounting for structural failure
correlation in the topology and for capacity shared between flows whose
primaries cannot fail together.
"""

from .assignment import (AllocationPlan, AssignmentLimits, AssignmentOutcome,
                         run_assignment)
from .errors import (ConfigError, InfeasibleError, ScenarioError,
                     TopologyError)
from .estimate import BackupDemand, chains_needed, estimate_demand
from .harness import run_experiment, threshold_sweep
from .montecarlo import SimConfig, SimReport, simulate
from .netmodel import (MODE_DEDICATED, MODE_SHARED, BackupChain, FlowSpec,
                       NfInstance, NfType, chain_availability, nines,
                       service_availability)
from .oracle import TinyScenario, exhaustive_min_backups
from .placement import PlacementResult, backup_budgets, place_backups
from .scenario import ScenarioConfig, build_scenario, load_config
from .structure import (DependencyProfile, build_profile, correlated_set,
                        critical_set, dependency_table, node_dependency,
                        path_dependency)
from .topology import Network, hop_matrix, load_topology, make_network
