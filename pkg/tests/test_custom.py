# tests/test_custom.py
import numpy as np
import pytest

from custom.distribution import CustomDistribution, assemble
from distributions.builtin import Constraint, get_distribution
from errors import ConfigError, DistributionError, ExprEvalError

T = np.geomspace(0.05, 10.0, 30)

WEIBULL_PH = CustomDistribution(
    hazard="alpha * exp(-beta) * (time * exp(-beta)) ** (alpha - 1)",
    survival="exp(-(time * exp(-beta)) ** alpha)",
    param_anc=("alpha",),
    log_transf_param=("alpha",),
)


def test_custom_weibull_matches_builtin():
    kernel = assemble(WEIBULL_PH)
    weibull = get_distribution("weibull")
    params = {"beta": 0.3, "alpha": 1.0 / 0.8}
    builtin = {"beta": 0.3, "sigma": 0.8}
    assert np.allclose(kernel.log_survival(params, T), weibull.log_survival(builtin, T), atol=1e-12)
    assert np.allclose(kernel.log_density(params, T), weibull.log_density(builtin, T), atol=1e-10)
    assert kernel.names == ["beta", "alpha"]
    assert kernel.constraint_of("alpha") is Constraint.POSITIVE
    assert kernel.constraint_of("beta") is Constraint.FREE


def test_log_forms_and_prep():
    custom = CustomDistribution(
        log_hazard="log(alpha) + log(lam) + (alpha - 1) * log(lam * time)",
        log_survival="-(lam * time) ** alpha",
        prep="lam = exp(-beta);",
        param_anc=("alpha",),
        lower=(("alpha", 0.0),),
    )
    kernel = assemble(custom)
    weibull = get_distribution("weibull")
    params = {"beta": -0.2, "alpha": 2.0}
    assert np.allclose(kernel.log_density(params, T),
                       weibull.log_density({"beta": -0.2, "sigma": 0.5}, T), atol=1e-10)
    assert kernel.constraint_of("alpha") is Constraint.POSITIVE


def test_survival_derived_from_density_and_hazard():
    custom = CustomDistribution(
        density="exp(-beta) * exp(-time * exp(-beta))",
        hazard="exp(-beta)",
    )
    kernel = assemble(custom)
    params = {"beta": 0.5}
    assert np.allclose(kernel.log_survival(params, T), -T * np.exp(-0.5), atol=1e-12)
    assert np.allclose(kernel.log_cdf(params, T), np.log1p(-np.exp(-T * np.exp(-0.5))), atol=1e-12)


def test_derived_survival_above_one_is_rejected():
    custom = CustomDistribution(density="2 * exp(-beta)", hazard="exp(-beta)")
    with pytest.raises(DistributionError):
        assemble(custom).log_survival({"beta": 0.0}, T)


def test_negative_function_is_rejected():
    custom = CustomDistribution(hazard="beta - time", survival="exp(-time)")
    with pytest.raises(DistributionError):
        assemble(custom).log_density({"beta": 1.0}, T)


def test_domain_errors_surface_from_expressions():
    custom = CustomDistribution(hazard="log(beta)", survival="exp(-time)")
    with pytest.raises(ExprEvalError):
        assemble(custom).log_density({"beta": -1.0}, T)


@pytest.mark.parametrize("custom", [
    CustomDistribution(hazard="exp(-beta)"),
    CustomDistribution(hazard="1", survival="1", density="1"),
    CustomDistribution(hazard="1", log_hazard="0", survival="1"),
    CustomDistribution(hazard="1", survival="exp(-k * time)"),
    CustomDistribution(hazard="1", survival="1", param_anc=("beta",)),
    CustomDistribution(hazard="1", survival="1", param_anc=("time",)),
    CustomDistribution(hazard="1", survival="1", log_transf_param=("alpha",)),
    CustomDistribution(hazard="1", survival="1", lower=(("alpha", 0.0),)),
    CustomDistribution(hazard="1", survival="1", prep="m = k * 2;"),
    CustomDistribution(hazard="1", survival="1", prep="beta = 2;"),
])
def test_invalid_definitions(custom):
    with pytest.raises(ConfigError):
        assemble(custom)
