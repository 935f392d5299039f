import numpy as np
import pytest

from liptail import InnovationLaw, LagLaw, ProcessSpec


@pytest.fixture(scope="session")
def memory_one_spec():
    """Geometric-profile memory-one/infinite model with rademacher steps."""
    return ProcessSpec(
        family="memory_one_infinite",
        innovation=InnovationLaw.rademacher(),
        coeffs=(0.6, 0.3, 0.15),
        lag_law=LagLaw.from_pmf({1: 0.5, 2: 0.3, 3: 0.2}),
    )


@pytest.fixture(scope="session")
def mean_field_spec():
    """Mean-field memory model with tanh response and uniform steps."""
    return ProcessSpec(
        family="mean_field_memory",
        innovation=InnovationLaw.uniform(-1.0, 1.0),
        coeffs=(0.3,),
        coeff_tail_ratio=0.5,
        response="tanh",
    )


@pytest.fixture(scope="session")
def iid_sign_spec():
    """X_t = eps_t with eps rademacher (zero coefficients, identity response)."""
    return ProcessSpec(
        family="mean_field_memory",
        innovation=InnovationLaw.rademacher(),
        coeffs=(0.0,),
    )


def make_rng(seed):
    return np.random.default_rng(seed)
