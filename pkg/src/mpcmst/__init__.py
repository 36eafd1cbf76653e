"""Low-memory MPC simulation of all-edges LCA, MST verification and MST sensitivity."""
from .clustering import Clustering, HierarchyFailure, build_hierarchy
from .estimators import AllEdgesLCA, MSTSensitivityAnalyzer, MSTVerifier, check_edge_input
from .graph import (
    GraphFormatError,
    NotSpanningError,
    RootedTree,
    WeightedGraph,
    estimate_diameter,
    generate_instance,
    parse_edge_list,
    validate_and_root,
)
from .lca import LcaResult, all_edges_lca
from .mpc_sim import AccountingFault, MpcConfig, RoundStats, Simulator, create_simulator
from .oracle import oracle_lca, oracle_mst, oracle_report, oracle_sensitivity, oracle_verify
from .pipeline import RunOptions
from .sensitivity import (
    McTable,
    NotAnMSTError,
    SensitivityResult,
    analyze_sensitivity,
    nontree_edge_sensitivity,
    tree_edge_sensitivity,
)
from .verification import VerificationResult, verify

__all__ = [
    "AccountingFault", "AllEdgesLCA", "Clustering", "GraphFormatError", "HierarchyFailure",
    "LcaResult", "McTable", "MSTSensitivityAnalyzer", "MSTVerifier", "MpcConfig", "NotAnMSTError",
    "NotSpanningError", "RootedTree", "RoundStats", "RunOptions", "SensitivityResult", "Simulator",
    "VerificationResult", "WeightedGraph", "all_edges_lca", "analyze_sensitivity",
    "build_hierarchy", "check_edge_input", "create_simulator", "estimate_diameter",
    "generate_instance", "nontree_edge_sensitivity", "oracle_lca", "oracle_mst", "oracle_report",
    "oracle_sensitivity", "oracle_verify", "parse_edge_list", "tree_edge_sensitivity",
    "validate_and_root", "verify",
]
