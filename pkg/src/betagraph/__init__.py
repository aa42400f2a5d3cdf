"""Beta-model random graphs: maximum likelihood, Cramer-Rao bounds and likelihood-ratio tests."""

__version__ = "0.1.0"

from .estimators import DirectedBetaModel, GeneralizedBetaModel, UndirectedBetaModel, make_model
from .exceptions import (
    BetaGraphError,
    DataError,
    FitFailed,
    NonexistentMLE,
    NotConverged,
    NumericalError,
    SingularFim,
    TooFewValidSims,
)
from .fisher import FimResult, closed_form_crb, crb, fisher_information, scalar_crb
from .fitting import FitOptions, FitResult, fit, fit_directed, fit_generalized, fit_undirected
from .graph_data import (
    BinningSpec,
    ContactRecord,
    CovariateDesign,
    GraphObservations,
    PanelObservations,
    degrees,
    ingest_contacts,
    validate,
)
from .hypothesis import (
    TestResult,
    bootstrap_directionality,
    bootstrap_significance,
    glrt_directionality,
    glrt_significance,
)
from .models import ModelSpec, Variant, edge_probabilities, log_likelihood_kernel
from .simulate import sample_graph, sample_panel
from .special import chi_square_sf

__all__ = [
    "BetaGraphError",
    "BinningSpec",
    "ContactRecord",
    "CovariateDesign",
    "DataError",
    "DirectedBetaModel",
    "FimResult",
    "FitFailed",
    "FitOptions",
    "FitResult",
    "GeneralizedBetaModel",
    "GraphObservations",
    "ModelSpec",
    "NonexistentMLE",
    "NotConverged",
    "NumericalError",
    "PanelObservations",
    "SingularFim",
    "TestResult",
    "TooFewValidSims",
    "UndirectedBetaModel",
    "Variant",
    "bootstrap_directionality",
    "bootstrap_significance",
    "chi_square_sf",
    "closed_form_crb",
    "crb",
    "degrees",
    "edge_probabilities",
    "fisher_information",
    "fit",
    "fit_directed",
    "fit_generalized",
    "fit_undirected",
    "glrt_directionality",
    "glrt_significance",
    "ingest_contacts",
    "log_likelihood_kernel",
    "make_model",
    "sample_graph",
    "sample_panel",
    "scalar_crb",
    "validate",
]
