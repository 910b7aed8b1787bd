"""Function-on-function regression by partial least squares over B-spline expansions."""

__version__ = "0.1.0"

from .basis import BasisSystem, eval_basis, gram_matrix, make_bspline, penalty_matrix, psd_sqrt
from .fdata import CurveSet, center, eval_curves, mean_curve, select_nbasis, smooth_curves
from .ffrm import FfrModel, amse, build_design, coefficient_surface, fit_ffr, intercept, predict_response
from .pls import PlsModel, nipals_fit, pls_coefficients, pls_predict, simpls_fit

__all__ = [
    "BasisSystem", "make_bspline", "eval_basis", "gram_matrix", "penalty_matrix", "psd_sqrt",
    "CurveSet", "smooth_curves", "select_nbasis", "mean_curve", "center", "eval_curves",
    "PlsModel", "nipals_fit", "simpls_fit", "pls_predict", "pls_coefficients",
    "FfrModel", "build_design", "fit_ffr", "coefficient_surface", "predict_response", "intercept", "amse",
]
