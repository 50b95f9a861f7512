"""Set-valued dynamic risk measures on finite scenario trees.

Exact rational polyhedral calculus, the AV@R, entropic and superhedging
families, and machine checks for multiportfolio time consistency,
cocycles, supermartingale/martingale properties and scalarization duality.
"""
from .consistency import (CheckReport, PenaltyValue, alpha, beta, check_cocycle,
                          check_martingale_worstcase, check_mptc_direct, check_supermartingale,
                          find_worst_case_dual, V_process, Vc_process)
from .duals import (DualPair, OrthComplement, in_W_shp, in_Wt, in_Wt_avar, in_Wt_max,
                    sample_dual_pairs)
from .polycalc import (HalfspaceSet, Polyhedron, contains, intersect, minkowski_subtract,
                       minkowski_sum, project_eligible, recession_cone, support_value)
from .riskmeasures import (SHP, AVaR, CustomOneStep, Entropic, SetProcess, acceptance_set,
                           compose, risk_from_acceptance, stepped_acceptance)
from .scalarize import (ScalarizationResult, check_proper, check_stepped_duality, rho,
                        rho_cond, rho_dual_value)
from .scenario import NodeVector, ScenarioTree, VectorMeasure, cond_expect, w_ts, xi

__version__ = "0.1.0"

__all__ = [
    "AVaR", "CheckReport", "CustomOneStep", "DualPair", "Entropic", "HalfspaceSet",
    "NodeVector", "OrthComplement", "PenaltyValue", "Polyhedron", "SHP", "ScalarizationResult",
    "ScenarioTree", "SetProcess", "V_process", "Vc_process", "VectorMeasure", "acceptance_set",
    "alpha", "beta", "check_cocycle", "check_martingale_worstcase", "check_mptc_direct",
    "check_proper", "check_stepped_duality", "check_supermartingale", "compose", "cond_expect",
    "contains", "find_worst_case_dual", "in_W_shp", "in_Wt", "in_Wt_avar", "in_Wt_max",
    "intersect", "minkowski_subtract", "minkowski_sum", "project_eligible", "recession_cone",
    "rho", "rho_cond", "rho_dual_value", "risk_from_acceptance", "sample_dual_pairs",
    "stepped_acceptance", "support_value", "w_ts", "xi",
]
