"""Exact discrete structural causal models and selection-bias audits."""

from .errors import (
    ModelParseError,
    ModelSizeError,
    ModelValidationError,
    NotAncestrallyClosedError,
    ScmError,
    ZeroProbabilityError,
)
from .scm import (
    JointTable,
    Scm,
    VariableSpec,
    abduct,
    counterfactual_distribution,
    intervene,
    joint_distribution,
    load_model,
    make_scm,
    parse_model,
    path_specific_counterfactual,
    sample,
    twin_network,
)

__version__ = "0.1.0"

__all__ = [
    "JointTable",
    "ModelParseError",
    "ModelSizeError",
    "ModelValidationError",
    "NotAncestrallyClosedError",
    "Scm",
    "ScmError",
    "VariableSpec",
    "ZeroProbabilityError",
    "abduct",
    "counterfactual_distribution",
    "intervene",
    "joint_distribution",
    "load_model",
    "make_scm",
    "parse_model",
    "path_specific_counterfactual",
    "sample",
    "twin_network",
]
