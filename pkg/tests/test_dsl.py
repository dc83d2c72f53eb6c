import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from shearlab.dsl import (
    Bin, Call, FieldDomainError, Neg, Num, ParseError, PowInt, Ref, Var,
    eval_jet, parse_field,
)

RS_SRC = """
param lam = 0.05; param beta = 1.0;
r = sqrt(x1^2 + x2^2);
f1 = -lam*(r-1)*x1/r - (1 + beta*(r-1))*x2;
f2 = -lam*(r-1)*x2/r + (1 + beta*(r-1))*x1;
F1 = x1*x2/r^2;
F2 = x2^2/r^2;
"""


def test_minimal_program_parses():
    prog = parse_field("f1 = -x2; f2 = x1;")
    assert prog.dim == 2
    assert not prog.has_forcing


def test_let_binding_ast_shape():
    # oracle: the let must resolve to the hand-built tree sqrt(x1^2 + x2^2)
    prog = parse_field("r = sqrt(x1^2 + x2^2); f1 = r; f2 = r;")
    expected = Call("sqrt", (Bin("+", PowInt(Var(0), 2), PowInt(Var(1), 2)),))
    assert prog.lets == (("r", expected),)
    assert prog.f_exprs == (Ref("r"), Ref("r"))


def test_unknown_variable_is_an_error():
    with pytest.raises(ParseError, match="x3"):
        parse_field("f1 = -x3; f2 = x1;")


def test_missing_component_is_an_error():
    with pytest.raises(ParseError, match="missing component f2"):
        parse_field("f1 = x1; f3 = x2;")


def test_syntax_error_carries_location():
    with pytest.raises(ParseError) as exc:
        parse_field("f1 = x1 + ; f2 = x2;")
    assert exc.value.line == 1
    assert exc.value.col > 0


def test_arity_error():
    with pytest.raises(ParseError, match="atan2 takes 2"):
        parse_field("f1 = atan2(x1); f2 = x2;")


def test_duplicate_component_rejected():
    with pytest.raises(ParseError, match="duplicate"):
        parse_field("f1 = x1; f1 = x2; f2 = x2;")


def test_noninteger_exponent_rejected():
    with pytest.raises(ParseError, match="integer"):
        parse_field("f1 = x1^2.5; f2 = x2;")


def test_roundtrip_reparses_equivalent():
    prog = parse_field(RS_SRC)
    again = parse_field(prog.to_source())
    assert again.f_exprs == prog.f_exprs
    assert again.F_exprs == prog.F_exprs
    assert again.lets == prog.lets
    assert again.params == prog.params


def test_rotation_jet_order1():
    prog = parse_field("f1 = -x2; f2 = x1;")
    jets = eval_jet(prog, "intrinsic", [1.0, 0.0], order=1)
    assert [j.value for j in jets] == [0.0, 1.0]
    J = np.array([j.first for j in jets])
    assert np.array_equal(J, np.array([[0.0, -1.0], [1.0, 0.0]]))


def test_rs_on_cycle_value():
    prog = parse_field(RS_SRC)
    jets = eval_jet(prog, "intrinsic", [1.0, 0.0], order=0)
    assert abs(jets[0].value) < 1e-15
    assert abs(jets[1].value - 1.0) < 1e-15


def _fd_gradient(prog, which, x, i, h=1e-6):
    xp, xm = x.copy(), x.copy()
    xp[i] += h
    xm[i] -= h
    up = [j.value for j in eval_jet(prog, which, xp, 0)]
    um = [j.value for j in eval_jet(prog, which, xm, 0)]
    return (np.array(up) - np.array(um)) / (2 * h)


def test_gradient_matches_central_differences():
    prog = parse_field(RS_SRC)
    rng = np.random.default_rng(42)
    for _ in range(10):
        x = rng.uniform(0.5, 1.5, size=2)
        jets = eval_jet(prog, "intrinsic", x, 1)
        J = np.array([j.first for j in jets])
        Jfd = np.stack([_fd_gradient(prog, "intrinsic", x, i)
                        for i in range(2)], axis=1)
        assert np.max(np.abs(J - Jfd)) / max(1.0, np.max(np.abs(Jfd))) < 1e-6


def test_hessian_symmetric_and_matches_fd():
    prog = parse_field(RS_SRC)
    x = np.array([1.1, 0.3])
    jets = eval_jet(prog, "intrinsic", x, 2)
    h = 1e-5
    for comp, jet in enumerate(jets):
        assert np.array_equal(jet.second, jet.second.T)
        for i in range(2):
            xp, xm = x.copy(), x.copy()
            xp[i] += h
            xm[i] -= h
            gp = eval_jet(prog, "intrinsic", xp, 1)[comp].first
            gm = eval_jet(prog, "intrinsic", xm, 1)[comp].first
            fd = (gp - gm) / (2 * h)
            assert np.max(np.abs(jet.second[i] - fd)) < 1e-6


def test_domain_errors_raise():
    prog = parse_field("f1 = log(x1); f2 = sqrt(x2);")
    with pytest.raises(FieldDomainError):
        eval_jet(prog, "intrinsic", [-1.0, 1.0], 0)
    with pytest.raises(FieldDomainError):
        eval_jet(prog, "intrinsic", [1.0, -1.0], 0)
    prog2 = parse_field("f1 = 1/x1; f2 = x2;")
    with pytest.raises(FieldDomainError):
        eval_jet(prog2, "intrinsic", [0.0, 1.0], 0)


def test_forcing_absent_evaluates_to_zero():
    prog = parse_field("f1 = -x2; f2 = x1;")
    jets = eval_jet(prog, "forcing", [0.3, 0.4], 1)
    assert all(j.value == 0.0 for j in jets)


def test_with_params_rebinds():
    prog = parse_field(RS_SRC)
    prog2 = prog.with_params(beta=3.0)
    assert prog2.params["beta"] == 3.0
    j = eval_jet(prog2, "intrinsic", [1.5, 0.0], 0)
    # dtheta/dt on r=1.5 is 1 + 3*0.5 = 2.5 -> f2 = 2.5 * 1.5
    assert abs(j[1].value - 2.5 * 1.5) < 1e-12
    with pytest.raises(KeyError):
        prog.with_params(nope=1.0)


# -- grammar fuzzing: generated well-formed programs parse and round-trip ---

_names = st.sampled_from(["u", "v", "w2", "aux"])


def _expr(depth):
    if depth == 0:
        return st.one_of(
            st.floats(min_value=-5, max_value=5, allow_nan=False,
                      allow_infinity=False).map(lambda v: "%r" % abs(v)),
            st.sampled_from(["x1", "x2"]),
        )
    sub = _expr(depth - 1)
    return st.one_of(
        sub,
        st.tuples(sub, st.sampled_from("+-*"), sub).map(
            lambda t: "(%s %s %s)" % (t[0], t[1], t[2])),
        st.tuples(st.sampled_from(["sin", "cos", "exp"]), sub).map(
            lambda t: "%s(%s)" % t),
        sub.map(lambda e: "-(%s)" % e),
        st.tuples(sub, st.integers(min_value=0, max_value=4)).map(
            lambda t: "(%s)^%d" % t),
    )


@given(e1=_expr(3), e2=_expr(2))
@settings(max_examples=60, deadline=None)
def test_fuzz_wellformed_programs_parse(e1, e2):
    src = "f1 = %s; f2 = %s;" % (e1, e2)
    prog = parse_field(src)
    again = parse_field(prog.to_source())
    assert again.f_exprs == prog.f_exprs
    try:
        eval_jet(prog, "intrinsic", [0.7, -0.3], 1)
    except FieldDomainError:
        pass  # structured failure is acceptable; crashes are not


@given(st.text(alphabet="fx12=+-*/^(); .parmsinco", max_size=40))
@settings(max_examples=80, deadline=None)
def test_fuzz_malformed_inputs_yield_parse_errors(src):
    try:
        parse_field(src)
    except ParseError:
        pass
