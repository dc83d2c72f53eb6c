import numpy as np
import pytest

from shearlab.cycles import find_limit_cycle
from shearlab.normal_form import build_frame, compute_normal_form, compute_phi
from shearlab.radial_shear import make_radial_shear
from shearlab.singular_limit import SingularLimitMap

ROTATION_SRC = "f1 = -x2; f2 = x1;"


@pytest.fixture(scope="session")
def rs_prog():
    return make_radial_shear(lam=0.05, beta=1.0)


@pytest.fixture(scope="session")
def rs_cycle(rs_prog):
    return find_limit_cycle(rs_prog, [1.3, 0.0], anchor=[1.0, 0.0])


@pytest.fixture(scope="session")
def rs_frame(rs_prog, rs_cycle):
    return build_frame(rs_cycle, "parallel_transport", prog=rs_prog)


@pytest.fixture(scope="session")
def rs_nf(rs_prog, rs_cycle, rs_frame):
    return compute_normal_form(rs_prog, rs_cycle, rs_frame)


@pytest.fixture(scope="session")
def rs_phi(rs_prog, rs_cycle, rs_nf):
    return compute_phi(rs_prog, rs_cycle, rs_nf, rho=1.0)


@pytest.fixture(scope="session")
def rs_map100(rs_nf, rs_phi):
    return SingularLimitMap.from_normal_form(rs_nf, rs_phi, 100.0)
