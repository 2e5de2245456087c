"""poolslp: fixed-demand pooling problems, SLP local solves, multistart studies."""

from .formulations import FormulationKind, NlpModel, build_model, formulation_size, lift_solution, pq_cut_residual
from .instance import Bin, FlowSolution, PoolingInstance, Product, Raw, evaluate_flow_solution, validate_instance

__version__ = "0.1.0"

__all__ = [
    "PoolingInstance",
    "Raw",
    "Bin",
    "Product",
    "FlowSolution",
    "validate_instance",
    "evaluate_flow_solution",
    "FormulationKind",
    "NlpModel",
    "build_model",
    "formulation_size",
    "lift_solution",
    "pq_cut_residual",
    "__version__",
]
