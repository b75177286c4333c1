import numpy as np
import pytest

from relentropy_lab.model import Model1D, embed_gas_as_general, ideal_gas_model
from relentropy_lab.hypotheses import SamplePlan

HYP_BOX = ((0.5, 2.0), (-1.0, 1.0), (0.5, 2.0))


@pytest.fixture(scope="session")
def gas():
    return ideal_gas_model(1.0, 1.0)


@pytest.fixture(scope="session")
def gas_model(gas):
    return embed_gas_as_general(gas)


@pytest.fixture()
def box_plan():
    return SamplePlan(seed=42, box=HYP_BOX, count=200)


def make_advection_model(c=1.0, nu=1.0):
    """Scalar advection-diffusion with quadratic entropy: A=u, F=cu, B=nu*I,
    eta=u^2/2, G=u, q=c u^2/2.  Exact solutions are decaying traveling modes."""

    def ident_mat(U):
        return np.ones(U.shape[:-1] + (1, 1))

    return Model1D(
        n=1,
        A=lambda U: U.copy(),
        F=lambda U: c * U,
        B=lambda U: nu * np.ones(U.shape[:-1] + (1, 1)),
        G=lambda U: U.copy(),
        eta=lambda U: 0.5 * U[..., 0] ** 2,
        q=lambda U: 0.5 * c * U[..., 0] ** 2,
        jac_A=ident_mat,
        jac_F=lambda U: c * np.ones(U.shape[:-1] + (1, 1)),
        jac_G=ident_mat,
        hess_A=lambda U: np.zeros(U.shape[:-1] + (1, 1, 1)),
        hess_G=lambda U: np.zeros(U.shape[:-1] + (1, 1, 1)),
        hess_eta=lambda U: np.ones(U.shape[:-1] + (1, 1)),
        invert_A=lambda w: w.copy(),
        labels=("u",),
    )


@pytest.fixture(scope="session")
def advection_model():
    return make_advection_model()
