"""Bundled radial-shear benchmark system.

Polar dynamics dr/dt = -lam (r - 1), dtheta/dt = 1 + beta (r - 1) with
radial forcing F = sin(theta) r_hat.  Everything downstream has a closed
form on the unit-circle cycle, which makes this the standard oracle for
tests and the `shearlab validate` command:

    p0 = L = 2 pi,  b0 = 1,  b1 = -beta,  A = -lam,
    Sigma = -4 pi beta,  sigma = 4 pi |beta|,
    Phi(s) = sign(beta) (cos(s + rho) - cos s),
    f_a(s) = s + a + rho - Lambda Phi(s)   (mod 4 pi).
"""

import numpy as np

from .dsl import parse_field

SOURCE_TEMPLATE = """\
param lam = {lam};
param beta = {beta};
r = sqrt(x1^2 + x2^2);
f1 = -lam*(r - 1)*x1/r - (1 + beta*(r - 1))*x2;
f2 = -lam*(r - 1)*x2/r + (1 + beta*(r - 1))*x1;
F1 = x1*x2/r^2;
F2 = x2^2/r^2;
"""


def radial_shear_source(lam=0.05, beta=1.0):
    return SOURCE_TEMPLATE.format(lam=repr(float(lam)), beta=repr(float(beta)))


def make_radial_shear(lam=0.05, beta=1.0):
    return parse_field(radial_shear_source(lam, beta))


def phi_closed(s, rho=1.0, beta=1.0):
    return np.sign(beta) * (np.cos(np.asarray(s) + rho) - np.cos(s))


def dphi_closed(s, rho=1.0, beta=1.0):
    return np.sign(beta) * (-np.sin(np.asarray(s) + rho) + np.sin(s))


def d2phi_closed(s, rho=1.0, beta=1.0):
    return np.sign(beta) * (-np.cos(np.asarray(s) + rho) + np.cos(s))


def f_a_closed(s, a, Lambda, rho=1.0, beta=1.0):
    """Lift of the singular-limit map (reduce mod 4 pi for circle values)."""
    return np.asarray(s) + a + rho - Lambda * phi_closed(s, rho, beta)


def critical_points_phi(rho=1.0):
    """Critical points of Phi on [0, 4 pi) for beta > 0."""
    base = [(np.pi - rho) / 2.0, (3.0 * np.pi - rho) / 2.0]
    return sorted([b % (4 * np.pi) for b in base]
                  + [(b + 2 * np.pi) % (4 * np.pi) for b in base])
