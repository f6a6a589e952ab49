"""Extrapolation predictor through the most recent accepted points."""

from __future__ import annotations

from collections import deque

from .multiprec import MPComplex, MPReal, stack

DEFAULT_DEGREE = 4
MAX_DEGREE = 8


class PathHistory:
    """Ring of accepted ``(t, x)`` pairs with strictly increasing ``t``."""

    def __init__(self, degree: int = DEFAULT_DEGREE):
        if not 0 <= degree <= MAX_DEGREE:
            raise ValueError(f"extrapolation degree must be in 0..{MAX_DEGREE}, got {degree}")
        self.degree = degree
        self._items: deque = deque(maxlen=degree + 1)

    @property
    def capacity(self) -> int:
        return self.degree + 1

    def __len__(self):
        return len(self._items)

    @property
    def ts(self) -> list[float]:
        return [t for t, _ in self._items]

    @property
    def points(self) -> list[MPComplex]:
        return [x for _, x in self._items]

    @property
    def last(self):
        if not self._items:
            raise ValueError("history is empty")
        return self._items[-1]

    def push(self, t: float, x: MPComplex) -> PathHistory:
        if self._items and not t > self._items[-1][0]:
            raise ValueError(f"t must increase: {t} after {self._items[-1][0]}")
        self._items.append((float(t), x.copy()))
        return self

    def copy(self) -> PathHistory:
        other = PathHistory(self.degree)
        other._items.extend(self._items)
        return other


def history_push(history: PathHistory, t: float, x: MPComplex) -> PathHistory:
    return history.push(t, x)


def divided_differences(ts, ys: MPComplex) -> MPComplex:
    """Newton coefficients for nodes ``ts`` and values ``ys`` of shape ``(m, n)``."""
    prec = ys.precision
    tt = MPReal.from_float(list(ts), prec)
    coefs = [ys[0]]
    d = ys
    m = len(ts)
    for level in range(1, m):
        # node gaps are differences of doubles, exact in DD and QD
        gap = tt[level:] - tt[:m - level]
        d = (d[1:] - d[:-1]) / gap[:, None]
        coefs.append(d[0])
    return stack(coefs)


def predict(history: PathHistory, t_new: float) -> MPComplex:
    """Value at ``t_new`` of the interpolant through the stored points."""
    if not len(history):
        raise ValueError("cannot predict from an empty history")
    ts = history.ts
    if not t_new > ts[-1]:
        raise ValueError(f"t_new must exceed the last accepted t ({t_new} <= {ts[-1]})")
    if len(ts) == 1:
        return history.points[0].copy()
    coefs = divided_differences(ts, stack(history.points))
    prec = coefs.precision
    tn = MPReal.from_float(t_new, prec)
    p = coefs[len(ts) - 1]
    for j in range(len(ts) - 2, -1, -1):
        p = p.scale(tn - MPReal.from_float(ts[j], prec)) + coefs[j]
    return p
