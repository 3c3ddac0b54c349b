"""Marshall-Olkin bivariate Pareto (BVPA) model and EM estimators."""
from .em import VARIANTS, EmConfig, FitResult, fit, fit_base, fit_mod1, fit_mod2, fit_mod3, fit_mod4
from .errors import BvpaError, ConvergenceError, DataFormatError, DegenerateDataError, PreconditionError
from .model import XI1, XI2, XI3, XI4, BvpaParams, bvpa_pdf, bvpa_sample, bvpa_sf
from .pareto import ParetoParams, pareto_mle
from .study import BootstrapCI, StudyConfig, StudyReport, bootstrap_ci, run_study

__all__ = [
    "VARIANTS", "EmConfig", "FitResult", "fit", "fit_base", "fit_mod1", "fit_mod2", "fit_mod3", "fit_mod4",
    "BvpaError", "ConvergenceError", "DataFormatError", "DegenerateDataError", "PreconditionError",
    "XI1", "XI2", "XI3", "XI4", "BvpaParams", "bvpa_pdf", "bvpa_sample", "bvpa_sf",
    "ParetoParams", "pareto_mle",
    "BootstrapCI", "StudyConfig", "StudyReport", "bootstrap_ci", "run_study",
]
