"""Backend parity and integrator behavior shared by both kernels."""

import numpy as np
import pytest

from shearlab.dsl import parse_field
from shearlab.kernels import available_backends, dense_eval, get_backend
from shearlab.radial_shear import radial_shear_source

both_backends = pytest.mark.parametrize("backend", available_backends())


def _tape():
    return parse_field(radial_shear_source(0.05, 1.0)).tape


@both_backends
def test_endpoint_accuracy(backend):
    seg = get_backend(backend)
    tape = parse_field("f1 = -x2; f2 = x1;").tape
    status, y, t, h, nsteps, *_ = seg(
        tape, 0.0, np.array([1.0, 0.0]), 0.0, 2 * np.pi,
        1e-12, 1e-12, 1.0, 0.0, False, False, False, 10 ** 6)
    assert status == 0
    assert np.max(np.abs(y - [1.0, 0.0])) < 1e-9


def test_backends_agree_closely():
    if len(available_backends()) < 2:
        pytest.skip("compiled backend unavailable")
    tape = _tape()
    y0 = np.array([1.4, 0.2, 1.0, 0.0, 0.0, 1.0])
    ends = {}
    for b in available_backends():
        status, y, *_ = get_backend(b)(
            tape, 0.01, y0, 0.0, 7.0, 1e-11, 1e-11, 1.0, 0.0,
            True, False, False, 10 ** 6)
        assert status == 0
        ends[b] = y
    a, b = ends.values()
    assert np.max(np.abs(a - b)) < 1e-8


@both_backends
def test_dense_output_matches_endpoint(backend):
    seg = get_backend(backend)
    tape = _tape()
    y0 = np.array([1.3, 0.0])
    status, y, t, h, nsteps, ts, ys, rc = seg(
        tape, 0.0, y0, 0.0, 3.0, 1e-11, 1e-11, 0.5, 0.0,
        False, False, True, 10 ** 6)
    assert status == 0
    # interpolant hits the recorded mesh points and interior states
    for j in range(nsteps):
        hj = ts[j + 1] - ts[j]
        end = dense_eval(rc[j], ts[j], hj, ts[j + 1])
        assert np.max(np.abs(end - ys[j + 1])) < 1e-9
        mid_t = ts[j] + 0.5 * hj
        mid = dense_eval(rc[j], ts[j], hj, mid_t)
        status2, y2, *_ = seg(tape, 0.0, ys[j], ts[j], mid_t, 1e-12, 1e-12,
                              0.5, 0.0, False, False, False, 10 ** 6)
        assert np.max(np.abs(mid - y2)) < 1e-8


@both_backends
def test_backward_integration(backend):
    seg = get_backend(backend)
    tape = _tape()
    y0 = np.array([1.2, 0.1])
    _, y1, *_ = seg(tape, 0.0, y0, 0.0, 5.0, 1e-12, 1e-12, 1.0, 0.0,
                    False, False, False, 10 ** 6)
    _, y2, *_ = seg(tape, 0.0, y1, 5.0, 0.0, 1e-12, 1e-12, 1.0, 0.0,
                    False, False, False, 10 ** 6)
    assert np.max(np.abs(y2 - y0)) < 1e-9


@both_backends
def test_domain_error_reported(backend):
    seg = get_backend(backend)
    tape = parse_field("f1 = -1/x1; f2 = 0;").tape  # hits x1 = 0 in finite time
    status, y, t, *_ = seg(tape, 0.0, np.array([1.0, 0.0]), 0.0, 10.0,
                           1e-10, 1e-10, 1.0, 0.0, False, False, False, 10 ** 6)
    assert status != 0


@both_backends
def test_arclength_augmentation(backend):
    seg = get_backend(backend)
    tape = parse_field("f1 = -x2; f2 = x1;").tape
    y0 = np.array([1.0, 0.0, 0.0])
    _, y, *_ = seg(tape, 0.0, y0, 0.0, np.pi, 1e-12, 1e-12, 1.0, 0.0,
                   False, True, False, 10 ** 6)
    assert abs(y[2] - np.pi) < 1e-9  # unit-speed circle: arc == time
