"""Symbolic expression trees for coordinate formulas.

Immutable expression nodes over a fixed, ordered variable list.  Subtrees
are shared rather than copied (differentiating a product reuses the factor
trees), equality is structural, and every node carries a precomputed key so
repeated comparisons during simplification stay cheap.

Only what the geometry needs lives here: arithmetic, integer powers, and
the analytic primitives sin/cos/exp/log/sqrt.  Exponents are integers by
construction; that keeps differentiation closed over the node set and rules
out fractional-power surprises in the structure formulas.
"""

from __future__ import annotations

import math
import re

__all__ = [
    "Expr", "Const", "Var", "Add", "Mul", "Div", "Neg", "Pow", "Call",
    "ExprError", "ExprSyntaxError", "UnknownIdentifierError",
    "NonIntegerExponentError",
    "parse", "diff", "simplify", "evaluate", "substitute", "compile_exprs",
    "variables", "phase_variables",
]


class ExprError(ValueError):
    """Base class for expression failures; carries a byte offset when known."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = "%s (byte offset %d)" % (message, offset)
        super().__init__(message)
        self.offset = offset


class ExprSyntaxError(ExprError):
    pass


class UnknownIdentifierError(ExprError):
    pass


class NonIntegerExponentError(ExprError):
    pass


# Structural keys mix a small node-kind code with child keys.  Only int and
# float payloads are hashed, so keys are stable across interpreter runs
# (string hashing would not be).
_K_CONST, _K_VAR, _K_ADD, _K_MUL, _K_DIV, _K_NEG, _K_POW, _K_CALL = range(8)

_FUNC_CODES = {"sin": 0, "cos": 1, "exp": 2, "log": 3, "sqrt": 4}
_FUNC_EVAL = {
    "sin": math.sin, "cos": math.cos, "exp": math.exp,
    "log": math.log, "sqrt": math.sqrt,
}


class Expr:
    """Base node.  Instances are immutable and safe to share."""

    __slots__ = ("key",)

    def __add__(self, other):
        return Add((self, _coerce(other)))

    def __radd__(self, other):
        return Add((_coerce(other), self))

    def __sub__(self, other):
        return Add((self, Neg(_coerce(other))))

    def __rsub__(self, other):
        return Add((_coerce(other), Neg(self)))

    def __mul__(self, other):
        return Mul((self, _coerce(other)))

    def __rmul__(self, other):
        return Mul((_coerce(other), self))

    def __truediv__(self, other):
        return Div(self, _coerce(other))

    def __rtruediv__(self, other):
        return Div(_coerce(other), self)

    def __pow__(self, k):
        if not isinstance(k, int):
            raise NonIntegerExponentError("exponent must be an integer, got %r" % (k,))
        return Pow(self, k)

    def __neg__(self):
        return Neg(self)

    def __hash__(self):
        return self.key

    def __repr__(self):
        return to_text(self)


def _coerce(value):
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, float)):
        return Const(float(value))
    raise TypeError("cannot use %r in an expression" % (value,))


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value):
        object.__setattr__(self, "value", float(value))
        object.__setattr__(self, "key", hash((_K_CONST, self.value)))

    def __setattr__(self, name, value):
        raise AttributeError("expression nodes are immutable")

    def __eq__(self, other):
        return isinstance(other, Const) and other.value == self.value

    __hash__ = Expr.__hash__


class Var(Expr):
    __slots__ = ("index",)

    def __init__(self, index):
        object.__setattr__(self, "index", int(index))
        object.__setattr__(self, "key", hash((_K_VAR, self.index)))

    def __setattr__(self, name, value):
        raise AttributeError("expression nodes are immutable")

    def __eq__(self, other):
        return isinstance(other, Var) and other.index == self.index

    __hash__ = Expr.__hash__


class Add(Expr):
    __slots__ = ("terms",)

    def __init__(self, terms):
        terms = tuple(terms)
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "key", hash((_K_ADD,) + tuple(t.key for t in terms)))

    def __setattr__(self, name, value):
        raise AttributeError("expression nodes are immutable")

    def __eq__(self, other):
        return (isinstance(other, Add) and other.key == self.key
                and other.terms == self.terms)

    __hash__ = Expr.__hash__


class Mul(Expr):
    __slots__ = ("factors",)

    def __init__(self, factors):
        factors = tuple(factors)
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "key", hash((_K_MUL,) + tuple(f.key for f in factors)))

    def __setattr__(self, name, value):
        raise AttributeError("expression nodes are immutable")

    def __eq__(self, other):
        return (isinstance(other, Mul) and other.key == self.key
                and other.factors == self.factors)

    __hash__ = Expr.__hash__


class Div(Expr):
    __slots__ = ("num", "den")

    def __init__(self, num, den):
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)
        object.__setattr__(self, "key", hash((_K_DIV, num.key, den.key)))

    def __setattr__(self, name, value):
        raise AttributeError("expression nodes are immutable")

    def __eq__(self, other):
        return (isinstance(other, Div) and other.key == self.key
                and other.num == self.num and other.den == self.den)

    __hash__ = Expr.__hash__


class Neg(Expr):
    __slots__ = ("arg",)

    def __init__(self, arg):
        object.__setattr__(self, "arg", arg)
        object.__setattr__(self, "key", hash((_K_NEG, arg.key)))

    def __setattr__(self, name, value):
        raise AttributeError("expression nodes are immutable")

    def __eq__(self, other):
        return isinstance(other, Neg) and other.key == self.key and other.arg == self.arg

    __hash__ = Expr.__hash__


class Pow(Expr):
    """Integer power.  The exponent is a plain int, never a subtree."""

    __slots__ = ("base", "exponent")

    def __init__(self, base, exponent):
        if not isinstance(exponent, int) or isinstance(exponent, bool):
            raise NonIntegerExponentError(
                "exponent must be an integer, got %r" % (exponent,))
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "exponent", exponent)
        object.__setattr__(self, "key", hash((_K_POW, base.key, exponent)))

    def __setattr__(self, name, value):
        raise AttributeError("expression nodes are immutable")

    def __eq__(self, other):
        return (isinstance(other, Pow) and other.key == self.key
                and other.exponent == self.exponent and other.base == self.base)

    __hash__ = Expr.__hash__


class Call(Expr):
    __slots__ = ("fn", "arg")

    def __init__(self, fn, arg):
        if fn not in _FUNC_CODES:
            raise ExprError("unknown function %r" % fn)
        object.__setattr__(self, "fn", fn)
        object.__setattr__(self, "arg", arg)
        object.__setattr__(self, "key", hash((_K_CALL, _FUNC_CODES[fn], arg.key)))

    def __setattr__(self, name, value):
        raise AttributeError("expression nodes are immutable")

    def __eq__(self, other):
        return (isinstance(other, Call) and other.key == self.key
                and other.fn == self.fn and other.arg == self.arg)

    __hash__ = Expr.__hash__


def sin(e):
    return Call("sin", _coerce(e))


def cos(e):
    return Call("cos", _coerce(e))


def exp(e):
    return Call("exp", _coerce(e))


def log(e):
    return Call("log", _coerce(e))


def sqrt(e):
    return Call("sqrt", _coerce(e))


ZERO = Const(0.0)
ONE = Const(1.0)


def variables(n, prefix="x"):
    """Names x1..xn (or another prefix) for an n-dimensional chart."""
    return ["%s%d" % (prefix, i + 1) for i in range(n)]


def phase_variables(n):
    """Chart variables followed by fiber variables: x1..xn, p1..pn."""
    return variables(n) + variables(n, prefix="p")


# ----------------------------------------------------------------------
# Parsing


_TOKEN_NUM = re.compile(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_TOKEN_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_INT_LEXEME = re.compile(r"\d+\Z")


class _Token:
    __slots__ = ("kind", "text", "pos")

    def __init__(self, kind, text, pos):
        self.kind = kind
        self.text = text
        self.pos = pos


def _byte_offset(text, pos):
    return len(text[:pos].encode("utf-8"))


def _tokenize(text):
    tokens = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c in " \t\r\n":
            i += 1
            continue
        if c.isdigit() or c == ".":
            m = _TOKEN_NUM.match(text, i)
            if m is None:
                raise ExprSyntaxError("malformed number", _byte_offset(text, i))
            tokens.append(_Token("num", m.group(), i))
            i = m.end()
            continue
        if c.isalpha() or c == "_":
            m = _TOKEN_IDENT.match(text, i)
            tokens.append(_Token("ident", m.group(), i))
            i = m.end()
            continue
        if c in "+-*/^()":
            tokens.append(_Token(c, c, i))
            i += 1
            continue
        raise ExprSyntaxError("unexpected character %r" % c, _byte_offset(text, i))
    tokens.append(_Token("end", "", n))
    return tokens


class _Parser:
    """Recursive descent with the usual precedence ladder; '^' binds
    tightest and only accepts an integer literal exponent."""

    def __init__(self, text, variables):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0
        self.vars = {name: i for i, name in enumerate(variables)}

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, message, tok, cls=ExprSyntaxError):
        raise cls(message, _byte_offset(self.text, tok.pos))

    def parse(self):
        e = self.expression()
        tok = self.peek()
        if tok.kind != "end":
            self.fail("unexpected %r" % tok.text, tok)
        return e

    def expression(self):
        e = self.term()
        while self.peek().kind in ("+", "-"):
            op = self.advance()
            rhs = self.term()
            e = Add((e, rhs)) if op.kind == "+" else Add((e, Neg(rhs)))
        return e

    def term(self):
        e = self.unary()
        while self.peek().kind in ("*", "/"):
            op = self.advance()
            rhs = self.unary()
            e = Mul((e, rhs)) if op.kind == "*" else Div(e, rhs)
        return e

    def unary(self):
        if self.peek().kind == "-":
            self.advance()
            return Neg(self.unary())
        if self.peek().kind == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek().kind == "^":
            self.advance()
            return Pow(base, self.exponent())
        return base

    def exponent(self):
        # Integer literal, optionally signed, optionally in one pair of
        # parentheses.  Anything else is a non-integer exponent.
        parens = False
        if self.peek().kind == "(":
            self.advance()
            parens = True
        sign = 1
        if self.peek().kind == "-":
            self.advance()
            sign = -1
        tok = self.peek()
        if tok.kind != "num":
            self.fail("exponent must be an integer literal", tok,
                      NonIntegerExponentError)
        if not _INT_LEXEME.match(tok.text):
            self.fail("non-integer exponent %r" % tok.text, tok,
                      NonIntegerExponentError)
        self.advance()
        if parens:
            close = self.advance()
            if close.kind != ")":
                self.fail("expected ')' in exponent", close)
        return sign * int(tok.text)

    def atom(self):
        tok = self.advance()
        if tok.kind == "num":
            return Const(float(tok.text))
        if tok.kind == "(":
            e = self.expression()
            close = self.advance()
            if close.kind != ")":
                self.fail("expected ')'", close)
            return e
        if tok.kind == "ident":
            if self.peek().kind == "(":
                if tok.text not in _FUNC_CODES:
                    self.fail("unknown function %r" % tok.text, tok,
                              UnknownIdentifierError)
                self.advance()
                arg = self.expression()
                close = self.advance()
                if close.kind != ")":
                    self.fail("expected ')'", close)
                return Call(tok.text, arg)
            if tok.text in self.vars:
                return Var(self.vars[tok.text])
            if tok.text in _FUNC_CODES:
                self.fail("function %r needs an argument list" % tok.text, tok)
            self.fail("unknown identifier %r" % tok.text, tok,
                      UnknownIdentifierError)
        self.fail("unexpected %r" % (tok.text or "end of input"), tok)


def parse(text, variables):
    """Parse `text` over the ordered variable names in `variables`."""
    return _Parser(text, variables).parse()


# ----------------------------------------------------------------------
# Differentiation


def diff(e, var):
    """Exact derivative with respect to variable index `var`.

    Returns an unsimplified tree; pair with simplify() when iterating.
    """
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.index == var else ZERO
    if isinstance(e, Add):
        return Add(tuple(diff(t, var) for t in e.terms))
    if isinstance(e, Neg):
        return Neg(diff(e.arg, var))
    if isinstance(e, Mul):
        terms = []
        factors = e.factors
        for i in range(len(factors)):
            di = diff(factors[i], var)
            if isinstance(di, Const) and di.value == 0.0:
                continue
            terms.append(Mul(factors[:i] + (di,) + factors[i + 1:]))
        if not terms:
            return ZERO
        return terms[0] if len(terms) == 1 else Add(tuple(terms))
    if isinstance(e, Div):
        du = diff(e.num, var)
        dv = diff(e.den, var)
        return Div(Add((Mul((du, e.den)), Neg(Mul((e.num, dv))))), Pow(e.den, 2))
    if isinstance(e, Pow):
        if e.exponent == 0:
            return ZERO
        db = diff(e.base, var)
        scaled = Mul((Const(float(e.exponent)), Pow(e.base, e.exponent - 1), db))
        return scaled
    if isinstance(e, Call):
        du = diff(e.arg, var)
        if e.fn == "sin":
            return Mul((Call("cos", e.arg), du))
        if e.fn == "cos":
            return Neg(Mul((Call("sin", e.arg), du)))
        if e.fn == "exp":
            return Mul((e, du))
        if e.fn == "log":
            return Div(du, e.arg)
        if e.fn == "sqrt":
            return Div(du, Mul((Const(2.0), e)))
    raise TypeError("cannot differentiate %r" % (e,))


# ----------------------------------------------------------------------
# Simplification


def simplify(e):
    """One bottom-up pass: constant folding, neutral elements, flattening
    of nested sums/products, like-term and like-power merging.

    Semantics-preserving on the evaluation domain; x^0 folds to 1 by the
    usual symbolic convention.
    """
    return _simp(e, {})


def _simp(e, memo):
    found = memo.get(id(e))
    if found is not None:
        return found
    if isinstance(e, (Const, Var)):
        out = e
    elif isinstance(e, Add):
        out = _simp_add([_simp(t, memo) for t in e.terms])
    elif isinstance(e, Mul):
        out = _simp_mul([_simp(f, memo) for f in e.factors])
    elif isinstance(e, Neg):
        a = _simp(e.arg, memo)
        out = Const(-a.value) if isinstance(a, Const) else _simp_mul([Const(-1.0), a])
    elif isinstance(e, Div):
        out = _simp_div(_simp(e.num, memo), _simp(e.den, memo))
    elif isinstance(e, Pow):
        out = _simp_pow(_simp(e.base, memo), e.exponent)
    elif isinstance(e, Call):
        a = _simp(e.arg, memo)
        out = _fold_call(e.fn, a)
    else:
        raise TypeError("cannot simplify %r" % (e,))
    memo[id(e)] = out
    return out


def _split_coeff(term):
    # term -> (float coefficient, core expr or None for pure constants)
    if isinstance(term, Const):
        return term.value, None
    if isinstance(term, Mul) and term.factors and isinstance(term.factors[0], Const):
        rest = term.factors[1:]
        core = rest[0] if len(rest) == 1 else Mul(rest)
        return term.factors[0].value, core
    return 1.0, term


def _simp_add(terms):
    const = 0.0
    groups = {}  # core expr -> accumulated coefficient
    order = []
    for t in terms:
        stack = [t]
        while stack:
            item = stack.pop()
            if isinstance(item, Add):
                stack.extend(reversed(item.terms))
                continue
            coeff, core = _split_coeff(item)
            if core is None:
                const += coeff
                continue
            if core in groups:
                groups[core] += coeff
            else:
                groups[core] = coeff
                order.append(core)
    out = []
    for core in sorted(order, key=lambda c: c.key):
        coeff = groups[core]
        if coeff == 0.0:
            continue
        if coeff == 1.0:
            out.append(core)
        elif isinstance(core, Mul):
            out.append(Mul((Const(coeff),) + core.factors))
        else:
            out.append(Mul((Const(coeff), core)))
    if const != 0.0 or not out:
        out.insert(0, Const(const))
    if len(out) == 1:
        return out[0]
    return Add(tuple(out))


def _simp_mul(factors):
    coeff = 1.0
    powers = {}  # base expr -> integer exponent
    order = []
    stack = list(reversed(factors))
    while stack:
        f = stack.pop()
        if isinstance(f, Mul):
            stack.extend(reversed(f.factors))
            continue
        if isinstance(f, Const):
            coeff *= f.value
            continue
        base, k = (f.base, f.exponent) if isinstance(f, Pow) else (f, 1)
        if base in powers:
            powers[base] += k
        else:
            powers[base] = k
            order.append(base)
    if coeff == 0.0:
        return ZERO
    out = []
    for base in sorted(order, key=lambda b: b.key):
        k = powers[base]
        if k == 0:
            continue
        out.append(base if k == 1 else Pow(base, k))
    if not out:
        return Const(coeff)
    if coeff != 1.0:
        out.insert(0, Const(coeff))
    if len(out) == 1:
        return out[0]
    return Mul(tuple(out))


def _simp_div(num, den):
    if isinstance(num, Const) and num.value == 0.0:
        return ZERO
    if isinstance(den, Const):
        if den.value == 0.0:
            raise ZeroDivisionError("division by constant zero in simplify")
        if isinstance(num, Const):
            return Const(num.value / den.value)
        return _simp_mul([Const(1.0 / den.value), num])
    return Div(num, den)


def _simp_pow(base, k):
    if k == 0:
        return ONE
    if k == 1:
        return base
    if isinstance(base, Const):
        if base.value == 0.0 and k < 0:
            raise ZeroDivisionError("0 raised to a negative power in simplify")
        return Const(base.value ** k)
    if isinstance(base, Pow):
        return _simp_pow(base.base, base.exponent * k)
    return Pow(base, k)


def _fold_call(fn, arg):
    if isinstance(arg, Const):
        try:
            return Const(_FUNC_EVAL[fn](arg.value))
        except (ValueError, OverflowError):
            pass
    return Call(fn, arg)


# ----------------------------------------------------------------------
# Evaluation, substitution, compilation


def evaluate(e, values):
    """Evaluate at a point given as an indexable of floats."""
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        return float(values[e.index])
    if isinstance(e, Add):
        return math.fsum(evaluate(t, values) for t in e.terms)
    if isinstance(e, Mul):
        out = 1.0
        for f in e.factors:
            out *= evaluate(f, values)
        return out
    if isinstance(e, Div):
        return evaluate(e.num, values) / evaluate(e.den, values)
    if isinstance(e, Neg):
        return -evaluate(e.arg, values)
    if isinstance(e, Pow):
        return evaluate(e.base, values) ** e.exponent
    if isinstance(e, Call):
        return _FUNC_EVAL[e.fn](evaluate(e.arg, values))
    raise TypeError("cannot evaluate %r" % (e,))


def substitute(e, mapping):
    """Replace variables by expressions; mapping is {index: Expr|number}."""
    repl = {i: _coerce(v) for i, v in mapping.items()}

    def walk(node, memo):
        found = memo.get(id(node))
        if found is not None:
            return found
        if isinstance(node, Const):
            out = node
        elif isinstance(node, Var):
            out = repl.get(node.index, node)
        elif isinstance(node, Add):
            out = Add(tuple(walk(t, memo) for t in node.terms))
        elif isinstance(node, Mul):
            out = Mul(tuple(walk(f, memo) for f in node.factors))
        elif isinstance(node, Div):
            out = Div(walk(node.num, memo), walk(node.den, memo))
        elif isinstance(node, Neg):
            out = Neg(walk(node.arg, memo))
        elif isinstance(node, Pow):
            out = Pow(walk(node.base, memo), node.exponent)
        elif isinstance(node, Call):
            out = Call(node.fn, walk(node.arg, memo))
        else:
            raise TypeError("cannot substitute in %r" % (node,))
        memo[id(node)] = out
        return out

    return walk(e, {})


def _atom_source(e):
    if isinstance(e, Const):
        return "(%r)" % e.value if e.value < 0 else repr(e.value)
    if isinstance(e, Var):
        return "v[%d]" % e.index
    return None


def compile_exprs(exprs, name="geoflow_compiled"):
    """Compile expressions into one positional evaluator.

    Returns f(values) -> tuple of floats, one per input expression.
    Structurally identical subtrees are emitted once, so shared subtrees act
    as free common-subexpression elimination in the generated code.
    """
    exprs = list(exprs)
    names = {}   # node (structural) -> local name or atom source
    lines = []
    counter = [0]

    def emit(node):
        src = _atom_source(node)
        if src is not None:
            return src
        found = names.get(node)
        if found is not None:
            return found
        if isinstance(node, Add):
            body = " + ".join(emit(t) for t in node.terms)
        elif isinstance(node, Mul):
            body = "*".join(emit(f) for f in node.factors)
        elif isinstance(node, Div):
            body = "%s / %s" % (emit(node.num), emit(node.den))
        elif isinstance(node, Neg):
            body = "-%s" % emit(node.arg)
        elif isinstance(node, Pow):
            body = "%s**(%d)" % (emit(node.base), node.exponent)
        elif isinstance(node, Call):
            body = "_%s(%s)" % (node.fn, emit(node.arg))
        else:
            raise TypeError("cannot compile %r" % (node,))
        local = "t%d" % counter[0]
        counter[0] += 1
        lines.append("    %s = %s" % (local, body))
        names[node] = local
        return local

    results = [emit(e) for e in exprs]
    source = "def %s(v):\n%s\n    return (%s%s)\n" % (
        name,
        "\n".join(lines) if lines else "    pass",
        ", ".join(results),
        "," if len(results) == 1 else "",
    )
    namespace = {"_%s" % fn: _FUNC_EVAL[fn] for fn in _FUNC_EVAL}
    exec(compile(source, "<geoflow-expr>", "exec"), namespace)
    return namespace[name]


# ----------------------------------------------------------------------
# Printing (round-trippable through parse with the same variable order)


_PREC_ADD, _PREC_MUL, _PREC_UNARY, _PREC_POW, _PREC_ATOM = range(5)


def to_text(e, names=None):
    """Render an expression; `names` maps variable indices to names
    (defaults to x<i+1>)."""

    def name_of(i):
        if names is None:
            return "x%d" % (i + 1)
        return names[i]

    def render(node, ctx):
        if isinstance(node, Const):
            v = node.value
            text = repr(int(v)) if v == int(v) and abs(v) < 1e16 else repr(v)
            if v < 0 and ctx > _PREC_ADD:
                return "(%s)" % text
            return text
        if isinstance(node, Var):
            return name_of(node.index)
        if isinstance(node, Add):
            text = " + ".join(render(t, _PREC_ADD + 1) for t in node.terms)
            text = text.replace("+ -", "- ")
            return "(%s)" % text if ctx > _PREC_ADD else text
        if isinstance(node, Mul):
            text = "*".join(render(f, _PREC_MUL + 1) for f in node.factors)
            return "(%s)" % text if ctx > _PREC_MUL else text
        if isinstance(node, Div):
            text = "%s / %s" % (render(node.num, _PREC_MUL + 1),
                                render(node.den, _PREC_MUL + 1))
            return "(%s)" % text if ctx > _PREC_MUL else text
        if isinstance(node, Neg):
            return "-%s" % render(node.arg, _PREC_UNARY)
        if isinstance(node, Pow):
            return "%s^%d" % (render(node.base, _PREC_ATOM), node.exponent)
        if isinstance(node, Call):
            return "%s(%s)" % (node.fn, render(node.arg, _PREC_ADD))
        raise TypeError("cannot render %r" % (node,))

    return render(e, _PREC_ADD)
