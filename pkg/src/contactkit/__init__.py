"""Contact points of factorized slow-fast systems ``z' = N(z) f(z) + eps G(z, eps)``.

The critical manifold is ``S = {f = 0}``. Where ``Df N`` loses rank the fast
fibres touch ``S``; this package locates such points, measures the order of
contact and checks whether the slow variables unfold it versally.
"""
from . import classifier, derivatives, geomflow, models, tensorkit
from .classifier import Classification, ContactDiagnostics, Tolerances, classify
from .derivatives import DerivativeProvider, FDConfig, chain_gradients, chain_values, validate_provider
from .errors import (ContactKitError, DegenerateError, DimensionError, EvaluationError, IntegrationError,
                     NumericalError, ParameterError, ProjectionError, SearchError, UnknownModelError)
from .geomflow import (continue_contact_curve, desingularized_equilibria, fiber_family, find_contact_point,
                       integrate_full, project_to_S)
from .models import (FactorizedModel, conjugate_affine, eval_full, eval_layer, load_model, load_model_file,
                     model_from_dict, model_names, rescale_model, zoo)

__version__ = "0.1.0"
