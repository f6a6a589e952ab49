"""Fully expanded polynomial systems, their text format, and homotopies.

System file grammar (UTF-8)::

    vars: x0 x1 x2
    x0*x1 + (1.5 - 2*i)*x2^2 - 3;
    #(0x1.0p+0 0x1.0p-80)+i#(0x0.0p+0)*x0 + x1;

The ``vars:`` line is optional when the variables are named ``x0 .. x{n-1}``.
Each polynomial ends with ``;``.  Coefficients are decimals, parenthesized
complex decimals ``(a + b*i)``, or hex-limb arrays ``#(h1 h2 ..)`` with an
optional imaginary part ``+i#(..)`` giving bit-exact double-double and
quad-double values.
"""

from __future__ import annotations

import cmath
import json
import math
import re
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence

import mpmath
import numpy as np

from .multiprec import MPComplex, MPReal, Precision
from .multiprec import kernels as K

QD_LIMBS = 4


# ---------------------------------------------------------------------------
# coefficients
# ---------------------------------------------------------------------------

def _qd_limbs(limbs: Sequence[float]) -> tuple[float, ...]:
    limbs = [float(x) for x in limbs][:QD_LIMBS * 2]
    while len(limbs) < QD_LIMBS:
        limbs.append(0.0)
    if len(limbs) > QD_LIMBS:
        with mpmath.workprec(320):
            total = mpmath.fsum(mpmath.mpf(x) for x in limbs)
        return _mpf_limbs(total)
    out = K.qd_renorm(tuple(np.float64(x) for x in limbs))
    return tuple(float(x) + 0.0 for x in out)


def _mpf_limbs(x) -> tuple[float, ...]:
    out = []
    with mpmath.workprec(320):
        r = mpmath.mpf(x)
        for _ in range(QD_LIMBS):
            c = float(r)
            out.append(c + 0.0)
            r -= c
    return tuple(out)


@dataclass(frozen=True)
class Coefficient:
    """Complex coefficient stored as normalized quad-double limbs."""

    re: tuple[float, ...] = (0.0, 0.0, 0.0, 0.0)
    im: tuple[float, ...] = (0.0, 0.0, 0.0, 0.0)

    @classmethod
    def from_complex(cls, z) -> Coefficient:
        z = complex(z)
        return cls((z.real + 0.0, 0.0, 0.0, 0.0), (z.imag + 0.0, 0.0, 0.0, 0.0))

    @classmethod
    def from_mpc(cls, z) -> Coefficient:
        z = mpmath.mpmathify(z)
        return cls(_mpf_limbs(z.real), _mpf_limbs(z.imag))

    @classmethod
    def from_limbs(cls, re_limbs, im_limbs=()) -> Coefficient:
        return cls(_qd_limbs(re_limbs), _qd_limbs(im_limbs or (0.0,)))

    def to_mpc(self):
        with mpmath.workprec(320):
            return mpmath.mpc(mpmath.fsum(self.re), mpmath.fsum(self.im))

    def __complex__(self):
        return complex(self.re[0], self.im[0])

    def is_zero(self) -> bool:
        return self.re[0] == 0.0 and self.im[0] == 0.0

    def __add__(self, other: Coefficient) -> Coefficient:
        re = K.qd_add(self.re, other.re)
        im = K.qd_add(self.im, other.im)
        return Coefficient(tuple(float(x) + 0.0 for x in re), tuple(float(x) + 0.0 for x in im))

    def __neg__(self) -> Coefficient:
        return Coefficient(tuple(-x + 0.0 for x in self.re), tuple(-x + 0.0 for x in self.im))

    def to_mp(self, precision=Precision.D) -> MPComplex:
        return coefficients_to_array([self], precision)[0]

    def hex_text(self) -> str:
        def limbs(v):
            used = list(v)
            while len(used) > 1 and used[-1] == 0.0:
                used.pop()
            return "#(" + " ".join(float(x).hex() for x in used) + ")"
        text = limbs(self.re)
        if any(x != 0.0 for x in self.im):
            text += "+i" + limbs(self.im)
        return text


ONE = Coefficient.from_complex(1.0)


def coefficients_to_array(coefs: Sequence[Coefficient], precision=Precision.D) -> MPComplex:
    """Stack coefficients into a length-``len(coefs)`` complex array."""
    nl = Precision.parse(precision).limbs
    re = np.array([c.re for c in coefs], dtype=np.float64).reshape(len(coefs), QD_LIMBS)
    im = np.array([c.im for c in coefs], dtype=np.float64).reshape(len(coefs), QD_LIMBS)
    # normalized quad-double limbs truncate to the shorter formats
    return MPComplex(tuple(np.stack([re[:, i], im[:, i]]) for i in range(nl)))


# ---------------------------------------------------------------------------
# terms and systems
# ---------------------------------------------------------------------------

Support = tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class Term:
    coefficient: Coefficient
    support: Support = ()

    def __post_init__(self):
        last = -1
        for var, exp in self.support:
            if var <= last:
                raise ValueError(f"support variables must be strictly increasing: {self.support}")
            if exp < 1:
                raise ValueError(f"exponents must be at least 1: {self.support}")
            last = var

    @property
    def degree(self) -> int:
        return sum(e for _, e in self.support)

    def variables(self) -> tuple[int, ...]:
        return tuple(v for v, _ in self.support)


def normalize_support(factors: Iterable[tuple[int, int]]) -> Support:
    """Merge repeated variables and sort by index."""
    acc: dict[int, int] = {}
    for var, exp in factors:
        acc[var] = acc.get(var, 0) + exp
    return tuple((v, acc[v]) for v in sorted(acc) if acc[v] > 0)


def canonical_polynomial(terms: Iterable[Term]) -> tuple[Term, ...]:
    """Merge duplicate supports, drop zero coefficients, sort by support."""
    acc: dict[Support, Coefficient] = {}
    for t in terms:
        acc[t.support] = acc[t.support] + t.coefficient if t.support in acc else t.coefficient
    return tuple(Term(acc[s], s) for s in sorted(acc) if not acc[s].is_zero())


@dataclass(frozen=True)
class PolynomialSystem:
    n_variables: int
    polynomials: tuple[tuple[Term, ...], ...]
    variable_names: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.variable_names:
            object.__setattr__(self, "variable_names",
                               tuple(f"x{i}" for i in range(self.n_variables)))
        if len(self.variable_names) != self.n_variables:
            raise ValueError("variable_names must list one name per variable")
        for poly in self.polynomials:
            for term in poly:
                for var, _ in term.support:
                    if not 0 <= var < self.n_variables:
                        raise ValueError(f"variable index {var} out of range for "
                                         f"{self.n_variables} variables")

    @classmethod
    def build(cls, n_variables: int, polynomials: Iterable[Iterable[Term]],
              variable_names: Sequence[str] = ()) -> PolynomialSystem:
        return cls(n_variables, tuple(canonical_polynomial(p) for p in polynomials),
                   tuple(variable_names))

    @property
    def n_equations(self) -> int:
        return len(self.polynomials)

    def term_counts(self) -> tuple[int, ...]:
        return tuple(len(p) for p in self.polynomials)

    def degrees(self) -> tuple[int, ...]:
        return tuple(max((t.degree for t in p), default=0) for p in self.polynomials)

    def extend(self, polynomials: Iterable[Iterable[Term]]) -> PolynomialSystem:
        return PolynomialSystem.build(self.n_variables, list(self.polynomials) + list(polynomials),
                                      self.variable_names)

    def evaluate_direct(self, point) -> list:
        """Term-by-term evaluation in mpmath; an oracle, not a fast path."""
        out = []
        with mpmath.workprec(320):
            x = [mpmath.mpmathify(v) for v in point]
            for poly in self.polynomials:
                acc = mpmath.mpc(0)
                for t in poly:
                    m = t.coefficient.to_mpc()
                    for var, exp in t.support:
                        m *= x[var] ** exp
                    acc += m
                out.append(acc)
        return out


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

class SystemSyntaxError(ValueError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(f"line {line}, column {col}: {message}" if line else message)
        self.line = line
        self.col = col


_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<hex>\#\([^)]*\))
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*^();])
""", re.VERBOSE)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str, line0: int):
    toks = []
    pos = 0
    line, col = line0, 1
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise SystemSyntaxError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        val = m.group()
        if kind != "ws":
            toks.append(_Tok(kind if kind != "op" else val, val, line, col))
        for ch in val:
            if ch == "\n":
                line, col = line + 1, 1
            else:
                col += 1
        pos = m.end()
    toks.append(_Tok("eof", "", line, col))
    return toks


class _Parser:
    def __init__(self, toks, names: dict[str, int], n: int | None):
        self.toks = toks
        self.i = 0
        self.names = names
        self.n = n

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, msg, tok=None):
        tok = tok or self.tok
        raise SystemSyntaxError(msg, tok.line, tok.col)

    def take(self, kind=None) -> _Tok:
        tok = self.tok
        if kind is not None and tok.kind != kind:
            self.error(f"expected {kind!r}, found {tok.text or 'end of input'!r}")
        self.i += 1
        return tok

    def polynomials(self):
        polys = []
        while self.tok.kind != "eof":
            polys.append(self.polynomial())
        return polys

    def polynomial(self):
        start = self.tok
        if start.kind == ";":
            self.error("empty polynomial")
        terms = [self.term(sign=self._sign())]
        while self.tok.kind in ("+", "-"):
            terms.append(self.term(sign=self._sign()))
        if self.tok.kind != ";":
            self.error(f"expected '+', '-' or ';', found {self.tok.text or 'end of input'!r}")
        self.take(";")
        return terms

    def _sign(self) -> int:
        sign = 1
        while self.tok.kind in ("+", "-"):
            if self.take().kind == "-":
                sign = -sign
        return sign

    def term(self, sign: int) -> Term:
        coef = None
        factors = []
        if self.tok.kind in ("num", "hex", "("):
            coef = self.coefficient()
            if self.tok.kind == "*":
                self.take("*")
                factors.append(self.factor())
        else:
            factors.append(self.factor())
        while self.tok.kind == "*":
            self.take("*")
            factors.append(self.factor())
        coef = coef if coef is not None else ONE
        if sign < 0:
            coef = -coef
        return Term(coef, normalize_support(factors))

    def factor(self):
        tok = self.take()
        if tok.kind != "name":
            self.error(f"expected a variable, found {tok.text or 'end of input'!r}", tok)
        var = self.names.get(tok.text)
        if var is None:
            m = re.fullmatch(r"x(\d+)", tok.text)
            if m and self.n is not None and not self.names:
                var = int(m.group(1))
                if var >= self.n:
                    self.error(f"variable {tok.text} out of range for {self.n} variables", tok)
            elif m and self.names:
                self.error(f"variable {tok.text} out of range for {len(self.names)} variables", tok)
            else:
                self.error(f"unknown variable {tok.text!r}", tok)
        exp = 1
        if self.tok.kind == "^":
            self.take("^")
            etok = self.take("num")
            if not etok.text.isdigit() or int(etok.text) < 1:
                self.error("exponent must be a positive integer", etok)
            exp = int(etok.text)
        return var, exp

    def coefficient(self) -> Coefficient:
        tok = self.tok
        if tok.kind == "num":
            self.take()
            return Coefficient.from_mpc(_decimal(tok.text))
        if tok.kind == "hex":
            re_limbs = self.hex_limbs(self.take())
            im_limbs: list[float] = []
            if (self.tok.kind in ("+", "-") and self.toks[self.i + 1].kind == "name"
                    and self.toks[self.i + 1].text == "i" and self.toks[self.i + 2].kind == "hex"):
                sign = -1.0 if self.take().kind == "-" else 1.0
                self.take("name")
                im_limbs = [sign * v for v in self.hex_limbs(self.take())]
            return Coefficient.from_limbs(re_limbs, im_limbs)
        # parenthesized complex decimal
        self.take("(")
        re_part = mpmath.mpf(0)
        im_part = mpmath.mpf(0)
        sign = self._sign()
        val = _decimal(self.take("num").text) * sign
        if self._imag_suffix():
            im_part = val
        else:
            re_part = val
            if self.tok.kind in ("+", "-"):
                sign = self._sign()
                val = _decimal(self.take("num").text) * sign
                if not self._imag_suffix():
                    self.error("expected '*i' after the imaginary part")
                im_part = val
        self.take(")")
        return Coefficient.from_mpc(mpmath.mpc(re_part, im_part))

    def _imag_suffix(self) -> bool:
        if self.tok.kind == "*" and self.toks[self.i + 1].text == "i":
            self.take("*")
            self.take("name")
            return True
        return False

    def hex_limbs(self, tok: _Tok) -> list[float]:
        body = tok.text[2:-1].split()
        if not body:
            self.error("empty hex-limb array", tok)
        try:
            return [float.fromhex(h) for h in body]
        except ValueError:
            self.error(f"invalid hex limb in {tok.text!r}", tok)


def _decimal(text: str):
    with mpmath.workprec(320):
        return mpmath.mpf(text)


def parse_system(text: str, n_variables: int | None = None) -> PolynomialSystem:
    """Parse a system file into canonical form."""
    lines = text.splitlines()
    names: list[str] = []
    body_start = 0
    for idx, line in enumerate(lines):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("vars:"):
            names = stripped[len("vars:"):].split()
            for nm in names:
                if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", nm):
                    raise SystemSyntaxError(f"invalid variable name {nm!r}", idx + 1, 1)
            if len(set(names)) != len(names):
                raise SystemSyntaxError("duplicate variable name", idx + 1, 1)
            body_start = idx + 1
        break
    body = "\n".join(lines[body_start:])
    toks = _tokenize(body, body_start + 1)
    n = len(names) if names else n_variables
    if names and n_variables is not None and n_variables != len(names):
        raise SystemSyntaxError(f"vars line declares {len(names)} variables, expected {n_variables}")
    parser = _Parser(toks, {nm: i for i, nm in enumerate(names)}, n)
    polys = parser.polynomials()
    if not polys:
        raise SystemSyntaxError("empty polynomial list")
    if n is None:
        n = 1 + max((v for p in polys for t in p for v, _ in t.support), default=-1)
    return PolynomialSystem.build(n, polys, names or ())


def _term_text(term: Term, names: Sequence[str]) -> str:
    factors = [names[v] if e == 1 else f"{names[v]}^{e}" for v, e in term.support]
    return "*".join([term.coefficient.hex_text()] + factors)


def serialize_system(system: PolynomialSystem) -> str:
    """Text form with hex-limb coefficients; ``parse_system`` inverts it."""
    out = ["vars: " + " ".join(system.variable_names)]
    for poly in system.polynomials:
        out.append(" + ".join(_term_text(t, system.variable_names) for t in poly) + ";")
    return "\n".join(out) + "\n"


def load_system(path) -> PolynomialSystem:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        return parse_system(text)
    except SystemSyntaxError as exc:
        raise SystemSyntaxError(f"{path}: {exc}", exc.line, exc.col) from None


# ---------------------------------------------------------------------------
# homotopy
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HomotopyParameters:
    """The constant ``gamma = exp(i*theta)`` and the relaxation power ``k``."""

    gamma: Coefficient = ONE
    relaxation: int = 2
    theta: float | None = None

    def __post_init__(self):
        if not isinstance(self.gamma, Coefficient):
            object.__setattr__(self, "gamma", Coefficient.from_complex(complex(self.gamma)))
        if self.relaxation < 1:
            raise ValueError("relaxation power must be at least 1")
        if abs(abs(complex(self.gamma)) - 1.0) > 1e-12:
            raise ValueError(f"|gamma| must be 1, got {abs(complex(self.gamma))}")

    @classmethod
    def from_theta(cls, theta: float, relaxation: int = 2) -> HomotopyParameters:
        with mpmath.workprec(320):
            g = mpmath.expjpi(mpmath.mpf(theta) / mpmath.pi)
        return cls(Coefficient.from_mpc(g), relaxation, float(theta))

    @classmethod
    def random(cls, rng: np.random.Generator | int, relaxation: int = 2) -> HomotopyParameters:
        rng = np.random.default_rng(rng)
        return cls.from_theta(float(rng.uniform(0.0, 2.0 * math.pi)), relaxation)

    @classmethod
    def from_gamma(cls, gamma: complex, relaxation: int = 2) -> HomotopyParameters:
        return cls(Coefficient.from_complex(gamma), relaxation, cmath.phase(gamma) % (2 * math.pi))


def random_unit_complex(rng: np.random.Generator) -> Coefficient:
    return HomotopyParameters.random(rng).gamma


@dataclass(frozen=True)
class Homotopy:
    """``h(x, t) = gamma (1-t)^k g(x) + t^k f(x)`` kept as two systems."""

    start: PolynomialSystem
    target: PolynomialSystem
    params: HomotopyParameters = field(default_factory=HomotopyParameters)

    @property
    def n_variables(self) -> int:
        return self.target.n_variables

    @property
    def n_equations(self) -> int:
        return self.target.n_equations


def make_homotopy(start: PolynomialSystem, target: PolynomialSystem,
                  params: HomotopyParameters | None = None) -> Homotopy:
    if start.n_variables != target.n_variables:
        raise ValueError(f"start has {start.n_variables} variables, target has "
                         f"{target.n_variables}")
    if start.n_equations != target.n_equations:
        raise ValueError(f"start has {start.n_equations} equations, target has "
                         f"{target.n_equations}")
    return Homotopy(start, target, params or HomotopyParameters())


def homotopy_weights(params: HomotopyParameters, t, precision=Precision.D):
    """Return ``(gamma (1-t)^k, t^k)`` as complex scalars in ``precision``."""
    precision = Precision.parse(precision)
    tf = t.to_float() if isinstance(t, MPReal) else float(t)
    if not 0.0 <= tf <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {tf}")
    tt = t if isinstance(t, MPReal) else MPReal.from_float(tf, precision)
    s = 1.0 - tt
    ws, wt = MPReal.from_float(1.0, precision), MPReal.from_float(1.0, precision)
    for _ in range(params.relaxation):
        ws = ws * s
        wt = wt * tt
    gamma = params.gamma.to_mp(precision)
    return gamma.scale(ws), MPComplex.from_parts(wt, MPReal.zeros((), precision))


# ---------------------------------------------------------------------------
# solutions files (JSON lines, hex limbs)
# ---------------------------------------------------------------------------

@dataclass
class SolutionRecord:
    point: MPComplex
    t: float = 1.0
    residual: float = float("nan")
    update_norm: float = float("nan")
    extra: dict = field(default_factory=dict)


def point_to_hex(point: MPComplex) -> list:
    return [list(point[j].hex()) for j in range(point.shape[0])]


def point_from_hex(items, precision=None) -> MPComplex:
    from .multiprec import stack
    comps = [MPComplex.fromhex(re_l, im_l, precision) for re_l, im_l in items]
    nl = max(len(c.limbs) for c in comps)
    return stack([c.with_precision(nl) for c in comps])


def write_solutions(fh: IO[str], records: Iterable[SolutionRecord], header: dict | None = None):
    if header is not None:
        fh.write(json.dumps({"header": header}) + "\n")
    for rec in records:
        row = {"t": [float(rec.t).hex()], "x": point_to_hex(rec.point),
               "residual": rec.residual, "update": rec.update_norm}
        row.update(rec.extra)
        fh.write(json.dumps(row) + "\n")


def read_solutions(fh: IO[str], precision=None) -> tuple[dict, list[SolutionRecord]]:
    header: dict = {}
    records = []
    for lineno, line in enumerate(fh, 1):
        line = line.strip()
        if not line:
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SystemSyntaxError(f"invalid solutions record: {exc.msg}", lineno, exc.colno)
        if "header" in row:
            header = row["header"]
            continue
        if "x" not in row:
            raise SystemSyntaxError("solutions record without 'x'", lineno, 1)
        extra = {k: v for k, v in row.items() if k not in ("t", "x", "residual", "update")}
        t = float.fromhex(row["t"][0]) if "t" in row else 1.0
        records.append(SolutionRecord(point_from_hex(row["x"], precision), t,
                                      float(row.get("residual", "nan")),
                                      float(row.get("update", "nan")), extra))
    return header, records
