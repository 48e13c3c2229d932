"""Spread option pricing with Heston-Nandi GARCH marginals joined by a copula."""
from .calibration import (MleResult, PriceSeries, ReturnSeries, align_series, annualized_vol,
                          load_price_csv, log_likelihood, mle_fit, std_errors)
from .concordance import (empirical_kendall, empirical_spearman,
                          estimate_theta_median_quadrant, median_quadrant_frequency,
                          theta_from_quadrant_frequency)
from .copula import (ArchimedeanCopula, ArchimedeanGenerator, ComonotonicCopula, Copula,
                     CountermonotonicCopula, IndependenceCopula, PlackettCopula,
                     fundamental_copulas, kendall_numeric, spearman_from_theta,
                     spearman_numeric)
from .errors import (DataError, DegenerateEstimateError, DomainError, HNSpreadError,
                     InsufficientDataError, InversionError, NumericalError,
                     SingularRecursionError, UnsupportedOperation, ValidationError)
from .fourier import InversionConfig, MarginalLaw, build_marginal, marginal_from_garch
from .garch import (GarchParams, GarchPQParams, MarketContext, log_price_mgf, long_run_variance,
                    mgf_coefficients, risk_neutralize, simulate_path, simulate_paths)
from .pricing import (PriceReport, SpreadOption, price_double_integral, price_monte_carlo,
                      price_single_integral)

__version__ = "0.1.0"
