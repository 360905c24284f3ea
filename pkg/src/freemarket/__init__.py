"""Deterministic market simulations of recipe discovery, trade, and firms.

Agents on a ring discover transformation recipes by combining goods, trade
with neighbors, and open or close firms in response to demand. The package
provides the engine, pluggable domain rule sets (toy strings, molecular
fragments, input-output sectors), read-only observers, synthesis-route
enumeration, and a command-line harness.
"""

__version__ = "0.1.0"

from .core import (GoodKind, Recipe, RecipeBook, decomposition_parts,
                   make_composition)
from .engine import (Simulation, SimulationConfig, SimulationState,
                     total_composition, run)
from .observer import (CensusSnapshot, DepthBucket, ObservationRecord,
                       RegimeSummary, amplification, assembly_a, census,
                       copy_by_depth, export_network, network_to_dot, observe,
                       regime_summary)
from .routes import (SynthesisRoute, assembly_joins, enumerate_routes,
                     min_route_depth)
from .domains import (ChemistryDomain, DomainRules, EconomicsDomain, IOTable,
                      ToyDomain, build_domain)
from .config import ConfigError, parse_config

__all__ = [
    "__version__",
    "GoodKind", "Recipe", "RecipeBook", "decomposition_parts",
    "make_composition",
    "Simulation", "SimulationConfig", "SimulationState", "total_composition",
    "run",
    "CensusSnapshot", "DepthBucket", "ObservationRecord", "RegimeSummary",
    "amplification", "assembly_a", "census", "copy_by_depth",
    "export_network", "network_to_dot", "observe", "regime_summary",
    "SynthesisRoute", "assembly_joins", "enumerate_routes", "min_route_depth",
    "ChemistryDomain", "DomainRules", "EconomicsDomain", "IOTable",
    "ToyDomain", "build_domain",
    "ConfigError", "parse_config",
]
