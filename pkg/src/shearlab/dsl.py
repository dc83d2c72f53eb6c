"""Vector-field definition language.

A field program is a list of ``;``-separated bindings::

    param lam = 0.05;
    r  = sqrt(x1^2 + x2^2);
    f1 = -lam*(r - 1)*x1/r - (1 + (r - 1))*x2;
    f2 = -lam*(r - 1)*x2/r + (1 + (r - 1))*x1;
    F1 = x1*x2/r^2;
    F2 = x2^2/r^2;

``f1..fn`` define the intrinsic field, ``F1..Fn`` the (optional) forcing
field, ``param`` declares named constants, and any other name introduces a
let-binding evaluated once per point.  Variables are ``x1..xn`` with ``n``
inferred from the ``f`` components.  Allowed operations: ``+ - * /``,
``^`` with an integer exponent, ``sin cos exp log sqrt atan2``.

Programs compile to a flat register tape shared by the pure-Python and the
compiled evaluation kernels; let-bindings therefore evaluate once per point.
All derivatives are exact forward-mode jets, never finite differences.
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ParseError",
    "FieldDomainError",
    "FieldProgram",
    "JetValue",
    "parse_field",
    "eval_jet",
]


class ParseError(ValueError):
    """Syntax or semantic error in a field program, with source location."""

    def __init__(self, message, line, col):
        super().__init__("line %d, col %d: %s" % (line, col, message))
        self.line = line
        self.col = col


class FieldDomainError(ArithmeticError):
    """Evaluation hit a singularity (division by zero, log/sqrt of a
    negative number, 0 raised to a negative power)."""


FUNCTIONS = {"sin": 1, "cos": 1, "exp": 1, "log": 1, "sqrt": 1, "atan2": 2}

# ---------------------------------------------------------------------------
# tokenizer


@dataclass
class _Token:
    kind: str  # NUM, IDENT, OP, END
    text: str
    line: int
    col: int


_OPS = set("+-*/^()=,;")


def _tokenize(source):
    toks = []
    line, col = 1, 1
    i, m = 0, len(source)
    while i < m:
        c = source[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if c.isspace():
            col += 1
            i += 1
            continue
        if c in _OPS:
            toks.append(_Token("OP", c, line, col))
            i += 1
            col += 1
            continue
        if c.isdigit() or (c == "." and i + 1 < m and source[i + 1].isdigit()):
            j = i
            while j < m and (source[j].isdigit() or source[j] == "."):
                j += 1
            if j < m and source[j] in "eE":
                k = j + 1
                if k < m and source[k] in "+-":
                    k += 1
                if k < m and source[k].isdigit():
                    j = k
                    while j < m and source[j].isdigit():
                        j += 1
            text = source[i:j]
            try:
                float(text)
            except ValueError:
                raise ParseError("malformed number %r" % text, line, col)
            toks.append(_Token("NUM", text, line, col))
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < m and (source[j].isalnum() or source[j] == "_"):
                j += 1
            toks.append(_Token("IDENT", source[i:j], line, col))
            col += j - i
            i = j
            continue
        raise ParseError("unexpected character %r" % c, line, col)
    toks.append(_Token("END", "", line, col))
    return toks


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    index: int  # 0-based


@dataclass(frozen=True)
class Ref:
    name: str  # parameter or let-binding, resolved at compile time


@dataclass(frozen=True)
class Bin:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class Call:
    fn: str
    args: tuple


@dataclass(frozen=True)
class PowInt:
    base: object
    exponent: int


class _Parser:
    def __init__(self, toks):
        self.toks = toks
        self.pos = 0

    def peek(self):
        return self.toks[self.pos]

    def next(self):
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def expect(self, text):
        t = self.next()
        if t.text != text:
            raise ParseError("expected %r, found %r" % (text, t.text or "end of input"), t.line, t.col)
        return t

    def parse_expr(self):
        node = self.parse_term()
        while self.peek().text in ("+", "-"):
            op = self.next().text
            rhs = self.parse_term()
            node = Bin(op, node, rhs)
        return node

    def parse_term(self):
        node = self.parse_unary()
        while self.peek().text in ("*", "/"):
            op = self.next().text
            rhs = self.parse_unary()
            node = Bin(op, node, rhs)
        return node

    def parse_unary(self):
        t = self.peek()
        if t.text == "-":
            self.next()
            return Neg(self.parse_unary())
        if t.text == "+":
            self.next()
            return self.parse_unary()
        return self.parse_power()

    def parse_power(self):
        base = self.parse_atom()
        if self.peek().text == "^":
            carat = self.next()
            sign = 1
            if self.peek().text == "-":
                self.next()
                sign = -1
            t = self.next()
            if t.kind != "NUM" or any(ch in t.text for ch in ".eE"):
                raise ParseError("exponent must be an integer literal", carat.line, carat.col)
            return PowInt(base, sign * int(t.text))
        return base

    def parse_atom(self):
        t = self.next()
        if t.kind == "NUM":
            return Num(float(t.text))
        if t.text == "(":
            node = self.parse_expr()
            self.expect(")")
            return node
        if t.kind == "IDENT":
            if self.peek().text == "(":
                if t.text not in FUNCTIONS:
                    raise ParseError("unknown function %r" % t.text, t.line, t.col)
                self.next()
                args = [self.parse_expr()]
                while self.peek().text == ",":
                    self.next()
                    args.append(self.parse_expr())
                close = self.expect(")")
                if len(args) != FUNCTIONS[t.text]:
                    raise ParseError(
                        "%s takes %d argument(s), got %d" % (t.text, FUNCTIONS[t.text], len(args)),
                        close.line,
                        close.col,
                    )
                return Call(t.text, tuple(args))
            return Ref(t.text)
        raise ParseError("expected expression, found %r" % (t.text or "end of input"), t.line, t.col)


def _parse_bindings(source):
    """Parse into ([(name, ast)], {param: value}) preserving order."""
    toks = _tokenize(source)
    p = _Parser(toks)
    bindings = []
    params = {}
    while p.peek().kind != "END":
        t = p.peek()
        if t.kind == "IDENT" and t.text == "param":
            p.next()
            name_tok = p.next()
            if name_tok.kind != "IDENT":
                raise ParseError("expected parameter name", name_tok.line, name_tok.col)
            p.expect("=")
            sign = 1.0
            if p.peek().text == "-":
                p.next()
                sign = -1.0
            v = p.next()
            if v.kind != "NUM":
                raise ParseError("parameter value must be a numeric literal", v.line, v.col)
            if name_tok.text in params:
                raise ParseError("duplicate parameter %r" % name_tok.text, name_tok.line, name_tok.col)
            params[name_tok.text] = sign * float(v.text)
        else:
            name_tok = p.next()
            if name_tok.kind != "IDENT":
                raise ParseError("expected binding name", name_tok.line, name_tok.col)
            p.expect("=")
            bindings.append((name_tok.text, p.parse_expr(), name_tok.line, name_tok.col))
        if p.peek().text == ";":
            p.next()
        elif p.peek().kind != "END":
            t = p.peek()
            raise ParseError("expected ';' between bindings", t.line, t.col)
    return bindings, params


# ---------------------------------------------------------------------------
# tape

OP_CONST = 0
OP_VAR = 1
OP_ADD = 2
OP_SUB = 3
OP_MUL = 4
OP_DIV = 5
OP_NEG = 6
OP_SIN = 7
OP_COS = 8
OP_EXP = 9
OP_LOG = 10
OP_SQRT = 11
OP_ATAN2 = 12
OP_POWI = 13


@dataclass
class Tape:
    """Flat register program: both kernels interpret the same arrays.

    ``code`` columns are (op, dst, a, b); ``a``/``b`` are register indices
    except for OP_CONST (const-pool index) / OP_VAR (variable index) /
    OP_POWI (b is the exponent immediate).
    """

    dim: int
    code: np.ndarray  # (n_instr, 4) int32
    consts: np.ndarray  # float64
    n_regs: int
    f_out: np.ndarray  # int32, dim entries
    F_out: np.ndarray  # int32, dim entries (empty if no forcing)


class _TapeBuilder:
    def __init__(self, dim, params):
        self.dim = dim
        self.params = params
        self.code = []
        self.consts = []
        self.const_ix = {}
        self.names = {}  # let name -> register
        self.n_regs = 0

    def reg(self):
        r = self.n_regs
        self.n_regs += 1
        return r

    def const(self, value):
        key = float(value)
        if key not in self.const_ix:
            self.const_ix[key] = len(self.consts)
            self.consts.append(key)
        dst = self.reg()
        self.code.append((OP_CONST, dst, self.const_ix[key], 0))
        return dst

    def emit(self, op, a, b=0):
        dst = self.reg()
        self.code.append((op, dst, a, b))
        return dst

    def compile(self, node, line, col):
        if isinstance(node, Num):
            return self.const(node.value)
        if isinstance(node, Var):
            return self.emit(OP_VAR, node.index)
        if isinstance(node, Ref):
            nm = node.name
            if nm in self.names:
                return self.names[nm]
            if nm in self.params:
                return self.const(self.params[nm])
            if len(nm) > 1 and nm[0] == "x" and nm[1:].isdigit():
                raise ParseError(
                    "variable %r out of range for dimension %d" % (nm, self.dim), line, col
                )
            raise ParseError("unknown identifier %r" % nm, line, col)
        if isinstance(node, Neg):
            return self.emit(OP_NEG, self.compile(node.arg, line, col))
        if isinstance(node, Bin):
            a = self.compile(node.left, line, col)
            b = self.compile(node.right, line, col)
            op = {"+": OP_ADD, "-": OP_SUB, "*": OP_MUL, "/": OP_DIV}[node.op]
            return self.emit(op, a, b)
        if isinstance(node, PowInt):
            return self.emit(OP_POWI, self.compile(node.base, line, col), node.exponent)
        if isinstance(node, Call):
            args = [self.compile(a, line, col) for a in node.args]
            op = {
                "sin": OP_SIN,
                "cos": OP_COS,
                "exp": OP_EXP,
                "log": OP_LOG,
                "sqrt": OP_SQRT,
                "atan2": OP_ATAN2,
            }[node.fn]
            if node.fn == "atan2":
                return self.emit(op, args[0], args[1])
            return self.emit(op, args[0])
        raise TypeError(node)


def _resolve_vars(node, dim, let_names, line, col):
    """Rewrite Refs that are x-variables into Var nodes; check ranges."""
    if isinstance(node, Ref):
        nm = node.name
        if len(nm) > 1 and nm[0] == "x" and nm[1:].isdigit():
            ix = int(nm[1:])
            if not 1 <= ix <= dim:
                raise ParseError(
                    "variable %r out of range for dimension %d" % (nm, dim), line, col
                )
            return Var(ix - 1)
        return node
    if isinstance(node, Bin):
        return Bin(node.op, _resolve_vars(node.left, dim, let_names, line, col),
                   _resolve_vars(node.right, dim, let_names, line, col))
    if isinstance(node, Neg):
        return Neg(_resolve_vars(node.arg, dim, let_names, line, col))
    if isinstance(node, PowInt):
        return PowInt(_resolve_vars(node.base, dim, let_names, line, col), node.exponent)
    if isinstance(node, Call):
        return Call(node.fn, tuple(_resolve_vars(a, dim, let_names, line, col) for a in node.args))
    return node


def _component_index(name, prefix):
    if name.startswith(prefix) and name[len(prefix):].isdigit():
        return int(name[len(prefix):])
    return None


@dataclass
class FieldProgram:
    """Parsed, differentiable vector-field pair (intrinsic f, forcing F).

    Immutable after parse; evaluation is pure, so programs are safe to share
    across workers.
    """

    dim: int
    f_exprs: tuple
    F_exprs: tuple
    lets: tuple  # ordered (name, ast)
    params: dict
    source: str = ""
    _tape: Tape = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self._tape is None:
            object.__setattr__(self, "_tape", self._build_tape())

    def _build_tape(self):
        b = _TapeBuilder(self.dim, self.params)
        for name, ast in self.lets:
            b.names[name] = b.compile(ast, 0, 0)
        f_out = np.array([b.compile(ast, 0, 0) for ast in self.f_exprs], dtype=np.int32)
        F_out = np.array([b.compile(ast, 0, 0) for ast in self.F_exprs], dtype=np.int32)
        code = np.array(b.code, dtype=np.int32).reshape(-1, 4)
        consts = np.array(b.consts, dtype=np.float64)
        return Tape(self.dim, code, consts, b.n_regs, f_out, F_out)

    @property
    def tape(self):
        return self._tape

    @property
    def has_forcing(self):
        return len(self.F_exprs) > 0

    def with_params(self, **overrides):
        """New program with parameter values replaced (names must exist)."""
        params = dict(self.params)
        for k, v in overrides.items():
            if k not in params:
                raise KeyError("unknown parameter %r" % k)
            params[k] = float(v)
        return FieldProgram(self.dim, self.f_exprs, self.F_exprs, self.lets, params,
                            source=self.source)

    def to_source(self):
        """Pretty-print; reparsing yields an equivalent program."""
        parts = ["param %s = %s" % (k, repr(v)) for k, v in self.params.items()]
        parts += ["%s = %s" % (name, _unparse(ast)) for name, ast in self.lets]
        parts += ["f%d = %s" % (i + 1, _unparse(ast)) for i, ast in enumerate(self.f_exprs)]
        parts += ["F%d = %s" % (i + 1, _unparse(ast)) for i, ast in enumerate(self.F_exprs)]
        return ";\n".join(parts) + ";\n"


def _unparse(node, prec=0):
    # precedence: 1 add, 2 mul, 3 unary, 4 power
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return "x%d" % (node.index + 1)
    if isinstance(node, Ref):
        return node.name
    if isinstance(node, Bin):
        p = 1 if node.op in "+-" else 2
        s = "%s %s %s" % (_unparse(node.left, p), node.op, _unparse(node.right, p + 1))
        return "(" + s + ")" if p < prec else s
    if isinstance(node, Neg):
        s = "-%s" % _unparse(node.arg, 4)
        return "(" + s + ")" if prec > 3 else s
    if isinstance(node, PowInt):
        s = "%s^%d" % (_unparse(node.base, 5), node.exponent)
        return "(" + s + ")" if prec >= 5 else s
    if isinstance(node, Call):
        return "%s(%s)" % (node.fn, ", ".join(_unparse(a) for a in node.args))
    raise TypeError(node)


def parse_field(source):
    """Parse a field program; raises ParseError with line/column on bad input."""
    bindings, params = _parse_bindings(source)
    f_parts, F_parts, lets = {}, {}, []
    let_names = set()
    for name, ast, line, col in bindings:
        fi = _component_index(name, "f")
        Fi = _component_index(name, "F")
        if fi is not None:
            if fi in f_parts:
                raise ParseError("duplicate component f%d" % fi, line, col)
            f_parts[fi] = (ast, line, col)
        elif Fi is not None:
            if Fi in F_parts:
                raise ParseError("duplicate component F%d" % Fi, line, col)
            F_parts[Fi] = (ast, line, col)
        else:
            if name in let_names or name in params:
                raise ParseError("duplicate binding %r" % name, line, col)
            if name == "param" or name in FUNCTIONS:
                raise ParseError("reserved name %r" % name, line, col)
            let_names.add(name)
            lets.append((name, ast, line, col))
    if not f_parts:
        raise ParseError("no f components defined", 1, 1)
    dim = max(f_parts)
    for i in range(1, dim + 1):
        if i not in f_parts:
            raise ParseError("missing component f%d" % i, 1, 1)
    if F_parts:
        if max(F_parts) != dim or any(i not in F_parts for i in range(1, dim + 1)):
            raise ParseError("forcing components must be F1..F%d" % dim, 1, 1)

    known = set(params)
    resolved_lets = []
    for name, ast, line, col in lets:
        ast = _resolve_vars(ast, dim, known, line, col)
        _check_refs(ast, known, line, col)
        known.add(name)
        resolved_lets.append((name, ast))
    f_exprs, F_exprs = [], []
    for i in range(1, dim + 1):
        ast, line, col = f_parts[i]
        ast = _resolve_vars(ast, dim, known, line, col)
        _check_refs(ast, known, line, col)
        f_exprs.append(ast)
    for i in range(1, dim + 1) if F_parts else ():
        ast, line, col = F_parts[i]
        ast = _resolve_vars(ast, dim, known, line, col)
        _check_refs(ast, known, line, col)
        F_exprs.append(ast)
    return FieldProgram(dim, tuple(f_exprs), tuple(F_exprs), tuple(resolved_lets),
                        dict(params), source=source)


def _check_refs(node, known, line, col):
    if isinstance(node, Ref):
        if node.name not in known:
            raise ParseError("unknown identifier %r" % node.name, line, col)
    elif isinstance(node, Bin):
        _check_refs(node.left, known, line, col)
        _check_refs(node.right, known, line, col)
    elif isinstance(node, Neg):
        _check_refs(node.arg, known, line, col)
    elif isinstance(node, PowInt):
        _check_refs(node.base, known, line, col)
    elif isinstance(node, Call):
        for a in node.args:
            _check_refs(a, known, line, col)


# ---------------------------------------------------------------------------
# jet evaluation (pure Python reference; kernels reimplement orders 0-1)


@dataclass
class JetValue:
    """Value, gradient and (on demand) symmetric Hessian of one component."""

    value: float
    first: np.ndarray = None
    second: np.ndarray = None


def _powi(x, k):
    if k == 0:
        return 1.0
    if x == 0.0 and k < 0:
        raise FieldDomainError("0 raised to negative power %d" % k)
    return float(x) ** k


def _tape_values(tape, x):
    regs = np.empty(tape.n_regs)
    for op, dst, a, b in tape.code:
        if op == OP_CONST:
            regs[dst] = tape.consts[a]
        elif op == OP_VAR:
            regs[dst] = x[a]
        elif op == OP_ADD:
            regs[dst] = regs[a] + regs[b]
        elif op == OP_SUB:
            regs[dst] = regs[a] - regs[b]
        elif op == OP_MUL:
            regs[dst] = regs[a] * regs[b]
        elif op == OP_DIV:
            if regs[b] == 0.0:
                raise FieldDomainError("division by zero")
            regs[dst] = regs[a] / regs[b]
        elif op == OP_NEG:
            regs[dst] = -regs[a]
        elif op == OP_SIN:
            regs[dst] = np.sin(regs[a])
        elif op == OP_COS:
            regs[dst] = np.cos(regs[a])
        elif op == OP_EXP:
            regs[dst] = np.exp(regs[a])
        elif op == OP_LOG:
            if regs[a] <= 0.0:
                raise FieldDomainError("log of non-positive value %g" % regs[a])
            regs[dst] = np.log(regs[a])
        elif op == OP_SQRT:
            if regs[a] < 0.0:
                raise FieldDomainError("sqrt of negative value %g" % regs[a])
            regs[dst] = np.sqrt(regs[a])
        elif op == OP_ATAN2:
            regs[dst] = np.arctan2(regs[a], regs[b])
        elif op == OP_POWI:
            regs[dst] = _powi(regs[a], b)
    return regs


def _tape_jets(tape, x, order):
    """Forward-mode propagation of (value, grad, hess) through the tape."""
    n = tape.dim
    val = np.empty(tape.n_regs)
    grad = np.zeros((tape.n_regs, n))
    hess = np.zeros((tape.n_regs, n, n)) if order >= 2 else None

    def unary(dst, a, f, df, d2f):
        v = val[a]
        val[dst] = f(v)
        grad[dst] = df(v) * grad[a]
        if order >= 2:
            hess[dst] = df(v) * hess[a] + d2f(v) * np.outer(grad[a], grad[a])

    for op, dst, a, b in tape.code:
        if op == OP_CONST:
            val[dst] = tape.consts[a]
            grad[dst] = 0.0
            if order >= 2:
                hess[dst] = 0.0
        elif op == OP_VAR:
            val[dst] = x[a]
            grad[dst] = 0.0
            grad[dst, a] = 1.0
            if order >= 2:
                hess[dst] = 0.0
        elif op == OP_ADD:
            val[dst] = val[a] + val[b]
            grad[dst] = grad[a] + grad[b]
            if order >= 2:
                hess[dst] = hess[a] + hess[b]
        elif op == OP_SUB:
            val[dst] = val[a] - val[b]
            grad[dst] = grad[a] - grad[b]
            if order >= 2:
                hess[dst] = hess[a] - hess[b]
        elif op == OP_MUL:
            val[dst] = val[a] * val[b]
            grad[dst] = val[b] * grad[a] + val[a] * grad[b]
            if order >= 2:
                cross = np.outer(grad[a], grad[b])
                hess[dst] = val[b] * hess[a] + val[a] * hess[b] + cross + cross.T
        elif op == OP_DIV:
            if val[b] == 0.0:
                raise FieldDomainError("division by zero")
            inv = 1.0 / val[b]
            val[dst] = val[a] * inv
            grad[dst] = inv * grad[a] - val[a] * inv * inv * grad[b]
            if order >= 2:
                gb = grad[b]
                cross = np.outer(grad[a], gb)
                hess[dst] = (
                    inv * hess[a]
                    - val[a] * inv * inv * hess[b]
                    - inv * inv * (cross + cross.T)
                    + 2.0 * val[a] * inv ** 3 * np.outer(gb, gb)
                )
        elif op == OP_NEG:
            val[dst] = -val[a]
            grad[dst] = -grad[a]
            if order >= 2:
                hess[dst] = -hess[a]
        elif op == OP_SIN:
            unary(dst, a, np.sin, np.cos, lambda v: -np.sin(v))
        elif op == OP_COS:
            unary(dst, a, np.cos, lambda v: -np.sin(v), lambda v: -np.cos(v))
        elif op == OP_EXP:
            unary(dst, a, np.exp, np.exp, np.exp)
        elif op == OP_LOG:
            if val[a] <= 0.0:
                raise FieldDomainError("log of non-positive value %g" % val[a])
            unary(dst, a, np.log, lambda v: 1.0 / v, lambda v: -1.0 / (v * v))
        elif op == OP_SQRT:
            if val[a] < 0.0:
                raise FieldDomainError("sqrt of negative value %g" % val[a])
            if val[a] == 0.0 and (np.any(grad[a]) or order >= 2):
                raise FieldDomainError("sqrt derivative at zero")
            unary(dst, a, np.sqrt,
                  lambda v: 0.5 / np.sqrt(v),
                  lambda v: -0.25 / v ** 1.5)
        elif op == OP_ATAN2:
            y, xx = val[a], val[b]
            r2 = y * y + xx * xx
            if r2 == 0.0:
                raise FieldDomainError("atan2 at origin")
            val[dst] = np.arctan2(y, xx)
            gy, gx = grad[a], grad[b]
            grad[dst] = (xx * gy - y * gx) / r2
            if order >= 2:
                # d/dz (xx*gy - y*gx)/r2 with product/quotient rules
                num_h = (
                    xx * hess[a] - y * hess[b]
                    + np.outer(gx, gy) - np.outer(gy, gx)
                )
                dr2 = 2.0 * (y * gy + xx * gx)
                hess[dst] = num_h / r2 - np.outer(xx * gy - y * gx, dr2) / (r2 * r2)
                hess[dst] = 0.5 * (hess[dst] + hess[dst].T)
        elif op == OP_POWI:
            k = b
            v = val[a]
            val[dst] = _powi(v, k)
            if k == 0:
                grad[dst] = 0.0
                if order >= 2:
                    hess[dst] = 0.0
            else:
                if v == 0.0 and k < 2:
                    if k < 0:
                        raise FieldDomainError("0 raised to negative power")
                    # k == 1: identity
                dv = k * _powi(v, k - 1) if (v != 0.0 or k >= 1) else 0.0
                grad[dst] = dv * grad[a]
                if order >= 2:
                    d2v = k * (k - 1) * _powi(v, k - 2) if (v != 0.0 or k >= 2) else 0.0
                    hess[dst] = dv * hess[a] + d2v * np.outer(grad[a], grad[a])
    return val, grad, hess


def eval_jet(prog, which, x, order=1):
    """Evaluate the intrinsic or forcing field with exact derivatives.

    Parameters
    ----------
    prog : FieldProgram
    which : {"intrinsic", "forcing"}
    x : array_like, shape (n,)
        Evaluation point; must be finite.
    order : {0, 1, 2}
        0 values only, 1 adds the gradient rows, 2 adds Hessians.

    Returns
    -------
    list of JetValue, one per component.
    """
    if which not in ("intrinsic", "forcing"):
        raise ValueError("which must be 'intrinsic' or 'forcing'")
    if order not in (0, 1, 2):
        raise ValueError("order must be 0, 1 or 2")
    x = np.asarray(x, dtype=float)
    if x.shape != (prog.dim,) or not np.all(np.isfinite(x)):
        raise ValueError("x must be a finite point in R^%d" % prog.dim)
    tape = prog.tape
    out = tape.f_out if which == "intrinsic" else tape.F_out
    if which == "forcing" and not prog.has_forcing:
        return [JetValue(0.0, np.zeros(prog.dim),
                         np.zeros((prog.dim, prog.dim)) if order >= 2 else None)
                for _ in range(prog.dim)]
    if order == 0:
        regs = _tape_values(tape, x)
        return [JetValue(float(regs[i])) for i in out]
    val, grad, hess = _tape_jets(tape, x, order)
    jets = []
    for i in out:
        h = None
        if order >= 2:
            h = 0.5 * (hess[i] + hess[i].T)  # enforce exact symmetry
        jets.append(JetValue(float(val[i]), grad[i].copy(), h))
    return jets


def field_values(prog, x, eps_eff=0.0):
    """f(x) + eps_eff*F(x) as a plain array (no derivatives)."""
    tape = prog.tape
    regs = _tape_values(tape, np.asarray(x, dtype=float))
    g = regs[tape.f_out].astype(float)
    if eps_eff != 0.0 and prog.has_forcing:
        g = g + eps_eff * regs[tape.F_out]
    return g


def field_jacobian(prog, x, eps_eff=0.0):
    """(g, Dg) for g = f + eps_eff*F via one forward-mode pass."""
    tape = prog.tape
    val, grad, _ = _tape_jets(tape, np.asarray(x, dtype=float), 1)
    g = val[tape.f_out].astype(float)
    J = grad[tape.f_out].copy()
    if eps_eff != 0.0 and prog.has_forcing:
        g = g + eps_eff * val[tape.F_out]
        J = J + eps_eff * grad[tape.F_out]
    return g, J
