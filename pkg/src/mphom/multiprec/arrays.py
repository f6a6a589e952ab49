"""Real and complex arrays in double, double-double or quad-double precision.

``MPReal`` keeps one float64 array per limb.  ``MPComplex`` keeps one
float64 array per limb with a leading axis of length two (real part,
imaginary part), so that additions of complex arrays cost a single kernel
call.  Both types broadcast like numpy arrays and treat plain Python
numbers as exact binary64 operands.
"""

from __future__ import annotations

from enum import IntEnum

import mpmath
import numpy as np

from . import kernels as K

_CONVERT_PREC = 320


class Precision(IntEnum):
    """Working precision, ordered ``D < DD < QD``; the value is the limb count."""

    D = 1
    DD = 2
    QD = 4

    @property
    def limbs(self) -> int:
        return int(self)

    @property
    def eps(self) -> float:
        return {1: 2.0**-52, 2: 2.0**-104, 4: 2.0**-209}[int(self)]

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def parse(cls, value) -> Precision:
        if isinstance(value, Precision):
            return value
        if isinstance(value, int):
            return cls(value)
        try:
            return cls[str(value).upper()]
        except KeyError:
            raise ValueError(f"unknown precision {value!r}, expected d, dd or qd") from None


def _limbs_of_mpf(x, nlimbs):
    out = []
    with mpmath.workprec(_CONVERT_PREC):
        r = mpmath.mpf(x)
        for _ in range(nlimbs):
            c = float(r)
            out.append(c)
            r = r - c
    return out


def _pad(limbs, nlimbs, like):
    limbs = list(limbs[:nlimbs])
    while len(limbs) < nlimbs:
        limbs.append(np.zeros_like(like))
    return tuple(limbs)


class MPReal:
    """Real array in one of the three precisions."""

    __slots__ = ("limbs",)
    __array_ufunc__ = None

    def __init__(self, limbs):
        self.limbs = tuple(np.asarray(x, dtype=np.float64) for x in limbs)

    # -- construction ------------------------------------------------------
    @classmethod
    def from_float(cls, values, precision=Precision.D) -> MPReal:
        hi = np.array(values, dtype=np.float64)
        return cls(_pad([hi], Precision.parse(precision).limbs, hi))

    @classmethod
    def zeros(cls, shape, precision=Precision.D) -> MPReal:
        return cls.from_float(np.zeros(shape), precision)

    @classmethod
    def from_mpf(cls, values, precision=Precision.D) -> MPReal:
        """Round mpmath values (scalar or nested sequence) limb by limb."""
        nl = Precision.parse(precision).limbs
        obj = np.array(values, dtype=object)
        flat = [_limbs_of_mpf(v, nl) for v in obj.reshape(-1)]
        limbs = [np.array([f[i] for f in flat], dtype=np.float64).reshape(obj.shape)
                 for i in range(nl)]
        return cls(limbs)

    @classmethod
    def from_limbs(cls, limbs, precision) -> MPReal:
        """Build from an explicit limb list, padding or renormalizing to ``precision``."""
        nl = Precision.parse(precision).limbs
        limbs = [np.asarray(x, dtype=np.float64) for x in limbs]
        if len(limbs) > nl:
            with mpmath.workprec(_CONVERT_PREC):
                vals = np.vectorize(lambda *c: sum(mpmath.mpf(float(v)) for v in c),
                                    otypes=[object])(*limbs)
            return cls.from_mpf(vals, precision)
        return cls(_pad(limbs, nl, limbs[0]))

    def _coerce(self, other) -> MPReal:
        if isinstance(other, MPReal):
            if len(other.limbs) != len(self.limbs):
                raise TypeError("precision mismatch between operands")
            return other
        return MPReal.from_float(other, self.precision)

    # -- properties --------------------------------------------------------
    @property
    def precision(self) -> Precision:
        return Precision(len(self.limbs))

    @property
    def shape(self):
        return np.broadcast_shapes(*(x.shape for x in self.limbs))

    @property
    def ndim(self) -> int:
        return len(self.shape)

    def __len__(self):
        return self.shape[0]

    def __repr__(self):
        return f"MPReal({self.precision.name}, {self.to_float()!r})"

    # -- arithmetic --------------------------------------------------------
    def __neg__(self):
        return MPReal(K.neg(self.limbs))

    def __add__(self, other):
        if isinstance(other, MPComplex):
            return NotImplemented
        return MPReal(K.add(self.limbs, self._coerce(other).limbs))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, MPComplex):
            return NotImplemented
        return MPReal(K.sub(self.limbs, self._coerce(other).limbs))

    def __rsub__(self, other):
        return MPReal(K.sub(self._coerce(other).limbs, self.limbs))

    def __mul__(self, other):
        if isinstance(other, MPComplex):
            return NotImplemented
        if isinstance(other, (int, float)) and not isinstance(other, bool):
            return MPReal(K.mul_d(self.limbs, float(other)))
        return MPReal(K.mul(self.limbs, self._coerce(other).limbs))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, MPComplex):
            return NotImplemented
        return MPReal(K.div(self.limbs, self._coerce(other).limbs))

    def __rtruediv__(self, other):
        return MPReal(K.div(self._coerce(other).limbs, self.limbs))

    def sqrt(self) -> MPReal:
        return MPReal(K.sqrt(self.limbs))

    def abs(self) -> MPReal:
        sign = np.where(self.limbs[0] < 0.0, -1.0, 1.0)
        return MPReal(tuple(x * sign for x in self.limbs))

    def renormalize(self) -> MPReal:
        return MPReal(K.renormalize(self.limbs))

    def sum(self, axis=0) -> MPReal:
        return MPReal(tree_sum_limbs(self.limbs, axis))

    # -- indexing and conversion ------------------------------------------
    def __getitem__(self, idx):
        return MPReal(tuple(np.broadcast_to(x, self.shape)[idx] for x in self.limbs))

    def __setitem__(self, idx, value):
        value = self._coerce(value)
        limbs = []
        for x, v in zip(self.limbs, value.limbs):
            x = np.array(np.broadcast_to(x, self.shape))
            x[idx] = v
            limbs.append(x)
        self.limbs = tuple(limbs)

    def copy(self) -> MPReal:
        return MPReal(tuple(x.copy() for x in self.limbs))

    def to_float(self):
        """Nearest binary64 value(s); equals the leading limb for normalized input."""
        return self.limbs[0].copy() if self.limbs[0].ndim else float(self.limbs[0])

    def to_mpf(self):
        with mpmath.workprec(_CONVERT_PREC):
            f = np.vectorize(lambda *c: sum((mpmath.mpf(float(v)) for v in c), mpmath.mpf(0)),
                             otypes=[object])
            out = f(*np.broadcast_arrays(*self.limbs))
        return out.item() if out.ndim == 0 else out

    def with_precision(self, precision) -> MPReal:
        nl = Precision.parse(precision).limbs
        if nl == len(self.limbs):
            return self
        return MPReal.from_limbs(self.limbs, nl)

    def hex(self):
        """Hex-encoded limbs of a scalar (bit-exact persistence)."""
        return [float(x).hex() for x in self.limbs]

    @classmethod
    def fromhex(cls, items, precision=None) -> MPReal:
        limbs = [float.fromhex(h) for h in items]
        return cls.from_limbs(limbs, precision or len(limbs))


class MPComplex:
    """Complex array; ``limbs[i]`` has shape ``(2, *shape)``."""

    __slots__ = ("limbs",)
    __array_ufunc__ = None

    def __init__(self, limbs):
        self.limbs = tuple(np.asarray(x, dtype=np.float64) for x in limbs)

    # -- construction ------------------------------------------------------
    @classmethod
    def from_parts(cls, re: MPReal, im: MPReal) -> MPComplex:
        shape = np.broadcast_shapes(re.shape, im.shape)
        return cls(tuple(np.stack([np.broadcast_to(a, shape), np.broadcast_to(b, shape)])
                         for a, b in zip(re.limbs, im.limbs)))

    @classmethod
    def from_complex(cls, values, precision=Precision.D) -> MPComplex:
        z = np.array(values, dtype=np.complex128)
        hi = np.stack([z.real, z.imag])
        return cls(_pad([hi], Precision.parse(precision).limbs, hi))

    @classmethod
    def zeros(cls, shape, precision=Precision.D) -> MPComplex:
        return cls.from_complex(np.zeros(shape, dtype=np.complex128), precision)

    @classmethod
    def from_mpc(cls, values, precision=Precision.D) -> MPComplex:
        obj = np.array(values, dtype=object)
        re = np.vectorize(lambda v: mpmath.mpmathify(v).real, otypes=[object])(obj)
        im = np.vectorize(lambda v: mpmath.mpmathify(v).imag, otypes=[object])(obj)
        return cls.from_parts(MPReal.from_mpf(re, precision), MPReal.from_mpf(im, precision))

    def _coerce(self, other) -> MPComplex:
        if isinstance(other, MPComplex):
            if len(other.limbs) != len(self.limbs):
                raise TypeError("precision mismatch between operands")
            return other
        if isinstance(other, MPReal):
            return MPComplex.from_parts(other, MPReal.zeros(other.shape, other.precision))
        return MPComplex.from_complex(other, self.precision)

    # -- properties --------------------------------------------------------
    @property
    def precision(self) -> Precision:
        return Precision(len(self.limbs))

    @property
    def shape(self):
        return np.broadcast_shapes(*(x.shape for x in self.limbs))[1:]

    @property
    def ndim(self) -> int:
        return len(self.shape)

    def __len__(self):
        return self.shape[0]

    @property
    def re(self) -> MPReal:
        return MPReal(tuple(x[0] for x in self.limbs))

    @property
    def im(self) -> MPReal:
        return MPReal(tuple(x[1] for x in self.limbs))

    def __repr__(self):
        return f"MPComplex({self.precision.name}, {self.to_complex()!r})"

    # -- arithmetic --------------------------------------------------------
    def __neg__(self):
        return MPComplex(K.neg(self.limbs))

    def __add__(self, other):
        other = self._coerce(other)
        a, b = _align(self.limbs, other.limbs)
        return MPComplex(K.add(a, b))

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        a, b = _align(self.limbs, other.limbs)
        return MPComplex(K.sub(a, b))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, MPReal):
            return self.scale(other)
        if isinstance(other, (int, float)) and not isinstance(other, bool):
            return MPComplex(K.mul_d(self.limbs, float(other)))
        return MPComplex(_cmul(self.limbs, self._coerce(other).limbs))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, MPReal):
            shape = np.broadcast_shapes(self.shape, other.shape)
            a = tuple(np.broadcast_to(x, (2,) + shape) for x in self.limbs)
            b = tuple(np.broadcast_to(x, shape)[None] for x in other.limbs)
            return MPComplex(K.div(a, b))
        return MPComplex(_cdiv(self.limbs, self._coerce(other).limbs))

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def scale(self, r: MPReal) -> MPComplex:
        """Multiply by a real array."""
        r = r if isinstance(r, MPReal) else MPReal.from_float(r, self.precision)
        shape = np.broadcast_shapes(self.shape, r.shape)
        a = tuple(np.broadcast_to(x, (2,) + shape) for x in self.limbs)
        b = tuple(np.broadcast_to(x, shape)[None] for x in r.limbs)
        return MPComplex(K.mul(a, b))

    def conj(self) -> MPComplex:
        sign = np.array([1.0, -1.0]).reshape((2,) + (1,) * self.ndim)
        return MPComplex(tuple(x * sign for x in self.limbs))

    def abs2(self) -> MPReal:
        sq = K.mul(self.limbs, self.limbs)
        return MPReal(K.add(tuple(x[0] for x in sq), tuple(x[1] for x in sq)))

    def modulus(self) -> MPReal:
        return self.abs2().sqrt()

    def sqrt(self) -> MPComplex:
        """Principal square root, cancellation-free branch selection."""
        re, im = self.re, self.im
        t = ((self.modulus() + re.abs()) * 0.5).sqrt()
        tsafe = MPReal(tuple(np.where(t.limbs[0] == 0.0, 1.0 if i == 0 else 0.0, x)
                             for i, x in enumerate(t.limbs)))
        other = im.abs() / (tsafe * 2.0)
        pos = re.limbs[0] >= 0.0
        sgn = np.where(im.limbs[0] < 0.0, -1.0, 1.0)
        out_re = MPReal(tuple(np.where(pos, a, b) for a, b in zip(t.limbs, other.limbs)))
        out_im = MPReal(tuple(np.where(pos, b * sgn, a * sgn)
                              for a, b in zip(t.limbs, other.limbs)))
        return MPComplex.from_parts(out_re, out_im)

    def renormalize(self) -> MPComplex:
        return MPComplex(K.renormalize(self.limbs))

    def sum(self, axis=0) -> MPComplex:
        ax = axis if axis < 0 else axis + 1
        return MPComplex(tree_sum_limbs(self.limbs, ax))

    # -- indexing and conversion ------------------------------------------
    def _full(self):
        shape = (2,) + self.shape
        return tuple(x if x.shape == shape else np.broadcast_to(x, shape) for x in self.limbs)

    def __getitem__(self, idx):
        if not isinstance(idx, tuple):
            idx = (idx,)
        return MPComplex(tuple(x[(slice(None),) + idx] for x in self._full()))

    def __setitem__(self, idx, value):
        value = self._coerce(value)
        if not isinstance(idx, tuple):
            idx = (idx,)
        limbs = []
        for x, v in zip(self._full(), value.limbs):
            x = np.array(x)
            x[(slice(None),) + idx] = v
            limbs.append(x)
        self.limbs = tuple(limbs)

    def copy(self) -> MPComplex:
        return MPComplex(tuple(np.array(x) for x in self._full()))

    def reshape(self, *shape) -> MPComplex:
        if len(shape) == 1 and isinstance(shape[0], tuple):
            shape = shape[0]
        return MPComplex(tuple(x.reshape((2,) + tuple(shape)) for x in self._full()))

    @property
    def T(self) -> MPComplex:
        return MPComplex(tuple(np.swapaxes(x, -1, -2) for x in self._full()))

    def to_complex(self):
        """Nearest complex128 value(s), taken from the leading limbs."""
        hi = np.broadcast_to(self.limbs[0], (2,) + self.shape)
        z = hi[0] + 1j * hi[1]
        return z if z.ndim else complex(z)

    def to_mpc(self):
        re, im = self.re.to_mpf(), self.im.to_mpf()
        with mpmath.workprec(_CONVERT_PREC):
            if isinstance(re, np.ndarray):
                return np.vectorize(mpmath.mpc, otypes=[object])(re, im)
            return mpmath.mpc(re, im)

    def with_precision(self, precision) -> MPComplex:
        nl = Precision.parse(precision).limbs
        if nl == len(self.limbs):
            return self
        return MPComplex.from_parts(self.re.with_precision(nl), self.im.with_precision(nl))

    def hex(self):
        """``(re_limbs, im_limbs)`` hex strings for a scalar."""
        return self.re.hex(), self.im.hex()

    @classmethod
    def fromhex(cls, re_items, im_items, precision=None) -> MPComplex:
        re = MPReal.fromhex(re_items, precision)
        im = MPReal.fromhex(im_items, precision or len(re.limbs))
        nl = max(len(re.limbs), len(im.limbs))
        return cls.from_parts(re.with_precision(nl), im.with_precision(nl))


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def _align(a, b):
    shape = a[0].shape
    if all(x.shape == shape for x in a) and all(x.shape == shape for x in b):
        return a, b
    # complex limbs are (2, *shape): broadcast the value shapes behind the re/im axis
    shape = (2,) + np.broadcast_shapes(*(x.shape[1:] for x in a), *(x.shape[1:] for x in b))

    def fit(x):
        x = x.reshape(x.shape[:1] + (1,) * (len(shape) - x.ndim) + x.shape[1:])
        return np.broadcast_to(x, shape)
    return tuple(fit(x) for x in a), tuple(fit(x) for x in b)


def _pair(re, im):
    """Stack real and imaginary parts into one ``(2, *shape)`` limb."""
    re, im = np.asarray(re), np.asarray(im)
    shape = re.shape if re.shape == im.shape else np.broadcast_shapes(re.shape, im.shape)
    out = np.empty((2,) + shape)
    out[0] = re
    out[1] = im
    return out


def _cmul(a, b):
    n = len(a)
    if n == 1:
        ar, ai = a[0][0], a[0][1]
        br, bi = b[0][0], b[0][1]
        return (_pair(ar * br + (-(ai * bi)), ar * bi + ai * br),)
    if K.get_backend() == "compiled":
        out = (K._jit.dd_cmul if n == 2 else K._jit.qd_cmul)(
            *(x[0] for x in a), *(x[1] for x in a), *(x[0] for x in b), *(x[1] for x in b))
        return tuple(_pair(out[k], out[k + n]) for k in range(n))
    a, b = _align(a, b)
    # one kernel call on [ar*br, ai*bi, ar*bi, ai*br]
    left = tuple(np.concatenate([x, x]) for x in a)
    right = tuple(np.concatenate([x, x[::-1]]) for x in b)
    p = K.mul(left, right)
    sign = np.array([-1.0, 1.0]).reshape((2,) + (1,) * (p[0].ndim - 1))
    first = tuple(x[0::2] for x in p)
    second = tuple(x[1::2] * sign for x in p)
    return K.add(first, second)


def _cdiv(a, b):
    a, b = _align(a, b)
    # scale the divisor by a power of two so |b| is near one
    big = np.maximum(np.abs(b[0][0]), np.abs(b[0][1]))
    _, expo = np.frexp(np.where(big == 0.0, 1.0, big))
    s = np.ldexp(1.0, -expo)
    bs = tuple(x * s for x in b)
    conj = np.array([1.0, -1.0]).reshape((2,) + (1,) * (bs[0].ndim - 1))
    num = _cmul(a, tuple(x * conj for x in bs))
    sq = K.mul(bs, bs)
    den = K.add(tuple(x[0] for x in sq), tuple(x[1] for x in sq))
    q = K.div(num, tuple(x[None] for x in den))
    return tuple(x * s for x in q)


def tree_sum_limbs(limbs, axis):
    """Pairwise sum along ``axis`` with a reduction tree fixed by the length."""
    shape = np.broadcast_shapes(*(x.shape for x in limbs))
    xs = tuple(np.moveaxis(x if x.shape == shape else np.broadcast_to(x, shape), axis, 0)
               for x in limbs)
    n = xs[0].shape[0]
    if n == 0:
        return tuple(np.zeros(xs[0].shape[1:]) for _ in xs)
    while n > 1:
        if n % 2:
            pad = np.zeros((1,) + xs[0].shape[1:])
            xs = tuple(np.concatenate([x, pad]) for x in xs)
            n += 1
        xs = K.add(tuple(x[0::2] for x in xs), tuple(x[1::2] for x in xs))
        n //= 2
    return tuple(x[0] for x in xs)


def where(mask, a, b):
    """Elementwise select between two arrays of the same type and precision."""
    mask = np.asarray(mask)
    if isinstance(a, MPComplex):
        return MPComplex(tuple(np.where(mask, x, y) for x, y in zip(*_align(a.limbs, b.limbs))))
    return MPReal(tuple(np.where(mask, x, y) for x, y in zip(a.limbs, b.limbs)))


def concatenate(items, axis=0):
    items = list(items)
    if isinstance(items[0], MPComplex):
        ax = axis + 1 if axis >= 0 else axis
        return MPComplex(tuple(np.concatenate([it._full()[i] for it in items], axis=ax)
                               for i in range(len(items[0].limbs))))
    return MPReal(tuple(np.concatenate([np.broadcast_to(it.limbs[i], it.shape) for it in items],
                                       axis=axis)
                        for i in range(len(items[0].limbs))))


def stack(items, axis=0):
    items = list(items)
    if isinstance(items[0], MPComplex):
        ax = axis + 1 if axis >= 0 else axis
        return MPComplex(tuple(np.stack([it._full()[i] for it in items], axis=ax)
                               for i in range(len(items[0].limbs))))
    return MPReal(tuple(np.stack([np.broadcast_to(it.limbs[i], it.shape) for it in items],
                                 axis=axis)
                        for i in range(len(items[0].limbs))))
