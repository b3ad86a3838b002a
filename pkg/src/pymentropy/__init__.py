"""Bayesian entropy estimation for undersampled discrete distributions.

Estimators: plugin, Miller-Madow, Dirichlet posterior moments, NSB and its
asymptotic form, Pitman-Yor posterior moments, and the Dirichlet-process
(DPM) and Pitman-Yor (PYM) mixture estimators.  All entropies are in nats.
"""

__version__ = "0.1.0"

from .counts import CountData, Multiplicities, as_multiplicities, coincidences, from_samples, to_multiplicities
from .dirichlet import (
    ansb_estimate, dir_posterior_moments, miller_madow, nsb_estimate, nsb_weight,
    plugin_entropy, polya_log_evidence,
)
from .exceptions import (
    ConfigError, DomainError, EmptyDataError, EntropyError, InconsistentAlphabetError,
    InputFormatError, NoCoincidencesError, NumericalError, TailTruncationError,
)
from .pitman_yor import (
    PYParams, posterior_moments, py_log_evidence, py_log_evidence_multiplicities,
    py_posterior_mean, py_posterior_variance, py_prior_mean, py_prior_variance,
)
from .pym import (
    GammaTable, HGammaParams, PymConfig, dpm_estimate, log_prior_density, map_fit,
    posterior_grid, pym_estimate, quadrature_grid, to_dalpha, to_hgamma,
)
from .result import EntropyEstimate
from .sampler import (
    WeightSample, sample_posterior_entropies, sample_posterior_entropy, sample_prior_entropies,
    sample_prior_entropy, sample_pym_posterior, stick_break,
)
from .special import digamma, inverse_digamma, log_beta, log_gamma, log_pochhammer, trigamma
