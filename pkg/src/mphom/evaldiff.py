"""Evaluation and differentiation of polynomial systems.

A system is compiled once into an :class:`EvaluationPlan`.  Every distinct
monomial support is stored once, the table is sorted by support size, and
all monomials are differentiated together with the reverse mode: forward
prefix products, backward suffix products, then cross products.  Because
rows are sorted by size, the rows still active at each sweep step form a
suffix of the table, so one vectorized multiply handles a whole step.

Terms contribute ``coefficient * (value or partial)`` to output slots, and
each slot is reduced by a pairwise tree whose shape depends only on the
plan.  Results are therefore bit-reproducible, whatever the worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .multiprec import MPComplex, Precision
from .multiprec import kernels as K
from .multiprec.arrays import _cmul
from .polysys import (Homotopy, HomotopyParameters, PolynomialSystem, Support,
                      coefficients_to_array, homotopy_weights)


@dataclass(frozen=True)
class Bucket:
    """Output slots whose contribution count rounds up to the same power of two."""

    width: int
    slots: np.ndarray       # (S,) output slot indices
    sources: np.ndarray     # (S, width) contribution indices, padded with the zero entry


@dataclass(frozen=True)
class EvaluationPlan:
    n_variables: int
    n_equations: int
    supports: tuple[Support, ...]
    sizes: np.ndarray               # (M,) variables per monomial, non-decreasing
    left: np.ndarray                # (M, smax) variable indices, padded with n
    right: np.ndarray               # (M, smax) the same, right aligned
    exponents: np.ndarray           # (M, smax) exponents, left aligned, padded with 0
    fwd_start: np.ndarray           # first row taking part in forward step c
    bwd_start: np.ndarray           # first row taking part in backward step c
    partial_row: np.ndarray         # (P,) monomial of each partial
    partial_var: np.ndarray         # (P,) variable of each partial
    partial_kind: np.ndarray        # 0 one, 1 prefix, 2 suffix, 3 cross
    partial_f: np.ndarray           # flat prefix index (kinds 1, 3)
    partial_b: np.ndarray           # flat suffix index (kinds 2, 3)
    power_rows: np.ndarray          # monomials with some exponent above one
    coef_table: tuple               # per term Coefficient
    term_poly: np.ndarray           # (T,) polynomial row of each term
    term_mono: np.ndarray           # (T,) monomial index, -1 for constants
    contrib_term: np.ndarray        # (C,) term behind each contribution
    contrib_src: np.ndarray         # (C,) index into [values, partials, one]
    contrib_slot: np.ndarray        # (C,) output slot
    buckets: tuple[Bucket, ...]
    structure: np.ndarray           # (N, n) bool, True where the Jacobian can be nonzero
    _coef_cache: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def n_monomials(self) -> int:
        return len(self.supports)

    @property
    def n_partials(self) -> int:
        return len(self.partial_row)

    @property
    def n_slots(self) -> int:
        return self.n_equations * (1 + self.n_variables)

    def ownership(self, term: int) -> tuple[int, tuple[int, ...]]:
        """Polynomial row and Jacobian columns written by ``term``."""
        mono = self.term_mono[term]
        cols = () if mono < 0 else tuple(v for v, _ in self.supports[mono])
        return int(self.term_poly[term]), cols

    def term_coefficients(self, precision) -> MPComplex:
        precision = Precision.parse(precision)
        if precision not in self._coef_cache:
            self._coef_cache[precision] = coefficients_to_array(self.coef_table, precision)
        return self._coef_cache[precision]

    def multiplication_count(self) -> int:
        """Multiplications of the reverse mode for the whole table (pure products)."""
        s = self.sizes
        return int(np.sum(np.where(s >= 3, 3 * s - 5, np.maximum(s - 1, 0))))


@dataclass
class EvalResult:
    values: MPComplex       # (N,)
    jacobian: MPComplex     # (N, n)


def compile_plan(system: PolynomialSystem) -> EvaluationPlan:
    n, N = system.n_variables, system.n_equations
    distinct = sorted({t.support for p in system.polynomials for t in p if t.support},
                      key=lambda s: (len(s), s))
    index = {s: i for i, s in enumerate(distinct)}
    M = len(distinct)
    sizes = np.array([len(s) for s in distinct], dtype=np.int64)
    smax = int(sizes.max()) if M else 1
    left = np.full((M, smax), n, dtype=np.int64)
    right = np.full((M, smax), n, dtype=np.int64)
    exps = np.zeros((M, smax), dtype=np.int64)
    for r, sup in enumerate(distinct):
        s = len(sup)
        for k, (v, e) in enumerate(sup):
            left[r, k] = v
            right[r, smax - s + k] = v
            exps[r, k] = e
    fwd_start = np.searchsorted(sizes, np.arange(smax) + 1, side="left")
    # suffix product at right column c is needed by rows with size > smax - c
    bwd_start = np.searchsorted(sizes, smax - np.arange(smax) + 1, side="left")

    prow, pvar, pkind, pf, pb = [], [], [], [], []
    for r, sup in enumerate(distinct):
        s = len(sup)
        off = smax - s
        for k, (v, _) in enumerate(sup):
            prow.append(r)
            pvar.append(v)
            if s == 1:
                pkind.append(0); pf.append(0); pb.append(0)
            elif k == 0:
                pkind.append(2); pf.append(0); pb.append(r * smax + off + 1)
            elif k == s - 1:
                pkind.append(1); pf.append(r * smax + s - 2); pb.append(0)
            else:
                pkind.append(3); pf.append(r * smax + k - 1); pb.append(r * smax + off + k + 1)
    partial_offset = np.zeros(M + 1, dtype=np.int64)
    partial_offset[1:] = np.cumsum(sizes)
    power_rows = np.nonzero((exps > 1).any(axis=1))[0]

    coef_table, term_poly, term_mono = [], [], []
    c_term, c_src, c_slot = [], [], []
    P = int(partial_offset[-1])
    one = M + P
    structure = np.zeros((N, n), dtype=bool)
    for i, poly in enumerate(system.polynomials):
        for term in poly:
            t = len(coef_table)
            coef_table.append(term.coefficient)
            term_poly.append(i)
            if not term.support:
                term_mono.append(-1)
                c_term.append(t); c_src.append(one); c_slot.append(i)
                continue
            r = index[term.support]
            term_mono.append(r)
            c_term.append(t); c_src.append(r); c_slot.append(i)
            for k, (v, _) in enumerate(term.support):
                structure[i, v] = True
                c_term.append(t); c_src.append(M + partial_offset[r] + k)
                c_slot.append(N + i * n + v)

    c_slot_arr = np.array(c_slot, dtype=np.int64)
    C = len(c_slot)
    per_slot: dict[int, list[int]] = {}
    for c, slot in enumerate(c_slot):
        per_slot.setdefault(slot, []).append(c)
    by_width: dict[int, list[int]] = {}
    for slot, items in per_slot.items():
        w = 1 << (len(items) - 1).bit_length()
        by_width.setdefault(w, []).append(slot)
    buckets = []
    for w in sorted(by_width):
        slots = sorted(by_width[w])
        src = np.full((len(slots), w), C, dtype=np.int64)
        for row, slot in enumerate(slots):
            items = per_slot[slot]
            src[row, :len(items)] = items
        buckets.append(Bucket(w, np.array(slots, dtype=np.int64), src))

    arr = lambda v: np.array(v, dtype=np.int64)  # noqa: E731
    return EvaluationPlan(
        n_variables=n, n_equations=N, supports=tuple(distinct), sizes=sizes,
        left=left, right=right, exponents=exps, fwd_start=fwd_start, bwd_start=bwd_start,
        partial_row=arr(prow), partial_var=arr(pvar), partial_kind=arr(pkind),
        partial_f=arr(pf), partial_b=arr(pb), power_rows=power_rows,
        coef_table=tuple(coef_table), term_poly=arr(term_poly), term_mono=arr(term_mono),
        contrib_term=arr(c_term), contrib_src=arr(c_src), contrib_slot=c_slot_arr,
        buckets=tuple(buckets), structure=structure,
    )


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def _take(limbs, idx):
    return tuple(x[:, idx] for x in limbs)


def _cpow(limbs, e):
    """Entrywise complex power for a non-negative integer array ``e``."""
    one = np.zeros_like(limbs[0])
    one[0] = 1.0
    result = (one,) + tuple(np.zeros_like(x) for x in limbs[1:])
    base = limbs
    e = np.array(e)
    while np.any(e > 0):
        odd = (e & 1).astype(bool)
        if odd.any():
            prod = _cmul(result, base)
            result = tuple(np.where(odd, p, q) for p, q in zip(prod, result))
        e = e >> 1
        if np.any(e > 0):
            base = _cmul(base, base)
    return result


def _monomials(plan: EvaluationPlan, xl):
    """Values ``(2, M)`` and partials ``(2, P)`` of every monomial, as limb tuples."""
    M = plan.n_monomials
    smax = plan.left.shape[1]
    V = _take(xl, plan.left)          # (2, M, smax)
    W = _take(xl, plan.right)
    F = tuple(np.array(x) for x in V)
    for c in range(1, smax):
        r0 = plan.fwd_start[c]
        if r0 >= M:
            break
        prod = _cmul(tuple(f[:, r0:, c - 1] for f in F), tuple(v[:, r0:, c] for v in V))
        for f, p in zip(F, prod):
            f[:, r0:, c] = p
    B = tuple(np.array(x) for x in W)
    for c in range(smax - 2, 0, -1):
        r0 = plan.bwd_start[c]
        if r0 >= M:
            continue
        prod = _cmul(tuple(w[:, r0:, c] for w in W), tuple(b[:, r0:, c + 1] for b in B))
        for b, p in zip(B, prod):
            b[:, r0:, c] = p

    rows = np.arange(M)
    values = tuple(f[:, rows, plan.sizes - 1] for f in F) if M else tuple(
        np.zeros((2, 0)) for _ in xl)
    Ff = tuple(f.reshape(2, -1) for f in F)
    Bf = tuple(b.reshape(2, -1) for b in B)
    kind = plan.partial_kind
    partials = tuple(np.zeros((2, plan.n_partials)) for _ in xl)
    partials[0][0, kind == 0] = 1.0
    for sel, src, idx in ((kind == 1, Ff, plan.partial_f), (kind == 2, Bf, plan.partial_b)):
        for p, s in zip(partials, src):
            p[:, sel] = s[:, idx[sel]]
    cross = kind == 3
    if cross.any():
        prod = _cmul(_take(Ff, plan.partial_f[cross]), _take(Bf, plan.partial_b[cross]))
        for p, q in zip(partials, prod):
            p[:, cross] = q

    if len(plan.power_rows):
        values, partials = _apply_powers(plan, xl, values, partials)
    return values, partials


def _apply_powers(plan, xl, values, partials):
    rows = plan.power_rows
    e = plan.exponents[rows]
    pw = _cpow(_take(xl, plan.left[rows]), np.maximum(e - 1, 0))
    Q = tuple(x[:, :, 0] for x in pw)
    for c in range(1, e.shape[1]):
        Q = _cmul(Q, tuple(x[:, :, c] for x in pw))
    values = tuple(np.array(v) for v in values)
    newv = _cmul(_take(values, rows), Q)
    for v, q in zip(values, newv):
        v[:, rows] = q
    # partials of power rows: e_j * Q * (product of the other bases)
    where_row = np.full(plan.n_monomials, -1, dtype=np.int64)
    where_row[rows] = np.arange(len(rows))
    sel = np.nonzero(where_row[plan.partial_row] >= 0)[0]
    qsel = _take(Q, where_row[plan.partial_row[sel]])
    k_of = sel - np.searchsorted(plan.partial_row, plan.partial_row[sel], side="left")
    ej = plan.exponents[plan.partial_row[sel], k_of].astype(np.float64)
    scaled = _cmul(_take(partials, sel), qsel)
    scaled = K.mul_d(scaled, ej[None, :])
    partials = tuple(np.array(p) for p in partials)
    for p, s in zip(partials, scaled):
        p[:, sel] = s
    return values, partials


def _reduce(plan: EvaluationPlan, contrib, nl, workers: int):
    out = tuple(np.zeros((2, plan.n_slots)) for _ in range(nl))
    zero_pad = tuple(np.concatenate([c, np.zeros((2, 1))], axis=1) for c in contrib)

    def run(bucket_rows):
        bucket, lo, hi = bucket_rows
        acc = tuple(c[:, bucket.sources[lo:hi]] for c in zero_pad)
        w = bucket.width
        while w > 1:
            acc = K.add(tuple(a[:, :, 0::2] for a in acc), tuple(a[:, :, 1::2] for a in acc))
            w //= 2
        return bucket.slots[lo:hi], tuple(a[:, :, 0] for a in acc)

    jobs = []
    for b in plan.buckets:
        S = len(b.slots)
        chunks = max(1, min(workers, S))
        bounds = np.linspace(0, S, chunks + 1).astype(int)
        jobs.extend((b, lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo)
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(j) for j in jobs]
    for slots, vals in results:
        for o, v in zip(out, vals):
            o[:, slots] = v
    return out


def _point_limbs(plan: EvaluationPlan, x: MPComplex):
    if x.shape != (plan.n_variables,):
        raise ValueError(f"point has shape {x.shape}, plan expects ({plan.n_variables},)")
    # one trailing slot holding the constant 1 used to pad supports
    pad = MPComplex.from_complex([1.0], x.precision)
    return tuple(np.concatenate([a, b], axis=1) for a, b in zip(x._full(), pad.limbs))


def evaluate_raw(plan: EvaluationPlan, x: MPComplex, workers: int = 1):
    """Values and Jacobian as one flat ``(N + N*n,)`` limb tuple."""
    nl = len(x.limbs)
    xl = _point_limbs(plan, x)
    values, partials = _monomials(plan, xl)
    one = tuple(np.zeros((2, 1)) for _ in range(nl))
    one[0][0, 0] = 1.0
    mult = tuple(np.concatenate([v, p, o], axis=1) for v, p, o in zip(values, partials, one))
    coefs = plan.term_coefficients(x.precision).limbs
    contrib = _cmul(_take(coefs, plan.contrib_term), _take(mult, plan.contrib_src))
    return _reduce(plan, contrib, nl, workers)


def _split(plan: EvaluationPlan, flat) -> EvalResult:
    N, n = plan.n_equations, plan.n_variables
    return EvalResult(MPComplex(tuple(f[:, :N] for f in flat)),
                      MPComplex(tuple(f[:, N:].reshape(2, N, n) for f in flat)))


def evaluate_system(plan: EvaluationPlan, x: MPComplex, workers: int = 1) -> EvalResult:
    """Values ``f(x)`` and Jacobian ``J_f(x)`` in the precision of ``x``."""
    return _split(plan, evaluate_raw(plan, x, workers))


def eval_monomial_derivatives(support, x: MPComplex):
    """Value and partials of one monomial; ``support`` lists ``(var, exp)`` or variables."""
    support = tuple((s, 1) if isinstance(s, (int, np.integer)) else tuple(s) for s in support)
    if not support:
        raise ValueError("support must be nonempty")
    if max(v for v, _ in support) >= x.shape[0]:
        raise ValueError("point has too few coordinates for the support")
    from .polysys import ONE, Term
    system = PolynomialSystem.build(x.shape[0], [[Term(ONE, support)]])
    plan = compile_plan(system)
    nl = len(x.limbs)
    values, partials = _monomials(plan, _point_limbs(plan, x))
    value = MPComplex(tuple(v[:, 0] for v in values[:nl]))
    return value, MPComplex(partials)


# ---------------------------------------------------------------------------
# homotopies
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HomotopyPlan:
    start: EvaluationPlan
    target: EvaluationPlan
    params: HomotopyParameters
    # both systems stacked as one, so a single pass evaluates g and f; every
    # slot keeps its own reduction tree, so the results are bit-identical
    joint: EvaluationPlan | None = None

    @classmethod
    def compile(cls, h: Homotopy) -> HomotopyPlan:
        joint = None
        if h.start.n_variables == h.target.n_variables:
            joint = compile_plan(PolynomialSystem.build(
                h.start.n_variables, list(h.start.polynomials) + list(h.target.polynomials)))
        return cls(compile_plan(h.start), compile_plan(h.target), h.params, joint)

    def evaluate_pair(self, x: MPComplex, workers: int = 1):
        """Flat results of ``g`` and ``f`` in the layout of :func:`evaluate_raw`."""
        if self.joint is None:
            return evaluate_raw(self.start, x, workers), evaluate_raw(self.target, x, workers)
        flat = evaluate_raw(self.joint, x, workers)
        Ng, Nf, n = self.start.n_equations, self.target.n_equations, self.n_variables
        N = Ng + Nf

        def part(lo, cnt):
            return tuple(np.concatenate([f[:, lo:lo + cnt],
                                         f[:, N + lo * n:N + (lo + cnt) * n]], axis=1)
                         for f in flat)
        return part(0, Ng), part(Ng, Nf)

    @property
    def n_variables(self) -> int:
        return self.target.n_variables

    @property
    def n_equations(self) -> int:
        return self.target.n_equations


def _combine(ws: MPComplex, g, wt: MPComplex, f):
    a = _cmul(g, tuple(x[:, None] for x in ws.limbs))
    b = _cmul(f, tuple(x[:, None] for x in wt.limbs))
    return K.add(a, b)


def evaluate_homotopy(hplan: HomotopyPlan, x: MPComplex, t, workers: int = 1,
                      weights=None) -> EvalResult:
    """``h(x, t)`` and its Jacobian in x, combining both systems with the weights."""
    ws, wt = weights or homotopy_weights(hplan.params, t, x.precision)
    g, f = hplan.evaluate_pair(x, workers)
    return _split(hplan.target, _combine(ws, g, wt, f))


class HomotopyEvaluator:
    """Evaluator of ``h(., t)`` at a fixed ``t``, as used by the corrector."""

    def __init__(self, hplan: HomotopyPlan, t, precision, workers: int = 1):
        self.hplan = hplan
        self.t = t
        self.precision = Precision.parse(precision)
        self.workers = workers
        self.weights = homotopy_weights(hplan.params, t, self.precision)

    @property
    def n_variables(self) -> int:
        return self.hplan.n_variables

    def __call__(self, x: MPComplex) -> EvalResult:
        return evaluate_homotopy(self.hplan, x, self.t, self.workers, self.weights)


class SystemEvaluator:
    """Evaluator of a plain system, so the corrector can run on ``f`` alone."""

    def __init__(self, plan: EvaluationPlan, workers: int = 1):
        self.plan = plan
        self.workers = workers

    @property
    def n_variables(self) -> int:
        return self.plan.n_variables

    def __call__(self, x: MPComplex) -> EvalResult:
        return evaluate_system(self.plan, x, self.workers)


# ---------------------------------------------------------------------------
# symbolic reverse-mode schedule
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Product:
    """One multiplication ``prod(left) * prod(right)`` of a reverse-mode sweep."""

    left: tuple[int, ...]
    right: tuple[int, ...]

    @property
    def variables(self) -> tuple[int, ...]:
        return tuple(sorted(self.left + self.right))

    def __str__(self):
        name = lambda vs: "".join(f"x{v}" for v in vs)  # noqa: E731
        return f"{name(self.left)}*{name(self.right)}" if self.right else name(self.left)


@dataclass(frozen=True)
class ReverseSchedule:
    forward: tuple[Product, ...]     # prefix products, the last one is the value
    backward: tuple[Product, ...]    # suffix products, longest last
    partials: tuple[Product, ...]    # derivative for each variable, in support order

    @property
    def multiplications(self) -> int:
        s = len(self.partials)
        cross = sum(1 for k, p in enumerate(self.partials) if 0 < k < s - 1)
        return len(self.forward) + len(self.backward) + cross


def reverse_mode_schedule(variables) -> ReverseSchedule:
    """The products formed for a pure product of ``variables``."""
    v = tuple(variables)
    s = len(v)
    forward = tuple(Product(v[:k], (v[k],)) for k in range(1, s))
    backward = tuple(Product((v[k],), v[k + 1:]) for k in range(s - 2, 0, -1))
    parts = []
    for k in range(s):
        if s == 1:
            parts.append(Product((), ()))
        elif k == 0:
            parts.append(Product((v[1],), v[2:]) if s > 2 else Product((v[1],), ()))
        elif k == s - 1:
            parts.append(Product(v[:k], ()))
        else:
            parts.append(Product(v[:k], v[k + 1:]))
    return ReverseSchedule(forward, backward, tuple(parts))
