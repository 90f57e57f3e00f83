"""Scalar reverse-mode automatic differentiation.

Every differentiable quantity in this package is a :class:`DualScalar`: a
float value plus a record of how it was computed. Calling :func:`backward`
on a result walks the record in reverse and accumulates exact derivatives
into the ``grad`` field of every node that contributed, in particular the
parameter leaves held by a formula's parameter set.

The engine is deliberately small. Graphs here are a few thousand nodes per
training batch, so hot reductions (softmin/softmax over a window, the
sigmoid-count inside a soft p-value) are single fused nodes with analytic
partials instead of long chains of elementary ops.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

__all__ = [
    "DualScalar",
    "as_dual",
    "backward",
    "grad_vector",
    "sigmoid",
    "softplus",
    "exp",
    "log",
    "relu",
    "clamp_min",
    "softmin",
    "softmax",
    "soft_count_ge",
    "dsum",
    "dmean",
]


class DualScalar:
    """A float with a handle into the computation record.

    ``_parents`` holds the nodes this value was computed from and ``_grads``
    the matching local partial derivatives, frozen at construction time.
    Leaves (parameters, constants) have empty parents.
    """

    __slots__ = ("value", "grad", "_parents", "_grads")

    def __init__(self, value, parents=(), grads=()):
        self.value = float(value)
        self.grad = 0.0
        self._parents = parents
        self._grads = grads

    def __repr__(self):
        return f"DualScalar({self.value!r})"

    # Arithmetic folds plain floats into the local partials instead of
    # wrapping them in constant nodes; this roughly halves graph size.

    def __add__(self, other):
        if isinstance(other, DualScalar):
            return DualScalar(self.value + other.value, (self, other), (1.0, 1.0))
        return DualScalar(self.value + other, (self,), (1.0,))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, DualScalar):
            return DualScalar(self.value - other.value, (self, other), (1.0, -1.0))
        return DualScalar(self.value - other, (self,), (1.0,))

    def __rsub__(self, other):
        return DualScalar(other - self.value, (self,), (-1.0,))

    def __mul__(self, other):
        if isinstance(other, DualScalar):
            return DualScalar(
                self.value * other.value, (self, other), (other.value, self.value)
            )
        return DualScalar(self.value * other, (self,), (float(other),))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, DualScalar):
            inv = 1.0 / other.value
            return DualScalar(
                self.value * inv, (self, other), (inv, -self.value * inv * inv)
            )
        inv = 1.0 / other
        return DualScalar(self.value * inv, (self,), (inv,))

    def __rtruediv__(self, other):
        inv = 1.0 / self.value
        return DualScalar(other * inv, (self,), (-other * inv * inv,))

    def __neg__(self):
        return DualScalar(-self.value, (self,), (-1.0,))


def as_dual(x) -> DualScalar:
    """Wrap a number as a constant leaf; pass DualScalar through untouched."""
    return x if isinstance(x, DualScalar) else DualScalar(x)


def _value(x) -> float:
    return x.value if isinstance(x, DualScalar) else float(x)


def backward(root: DualScalar) -> None:
    """Accumulate d(root)/d(node) into ``node.grad`` for the whole graph.

    Grads of every node reachable from ``root`` are zeroed first, so
    persistent parameter leaves can be reused across batches.
    """
    topo = []
    visited = set()
    stack = [(root, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            topo.append(node)
            continue
        nid = id(node)
        if nid in visited:
            continue
        visited.add(nid)
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in visited:
                stack.append((parent, False))
    for node in topo:
        node.grad = 0.0
    root.grad = 1.0
    for node in reversed(topo):
        g = node.grad
        if g == 0.0 or not node._parents:
            continue
        for parent, local in zip(node._parents, node._grads):
            parent.grad += g * local


def grad_vector(root: DualScalar, leaves: Sequence[DualScalar]):
    """Run backward from ``root`` and return [leaf.grad for leaf in leaves]."""
    backward(root)
    return [leaf.grad for leaf in leaves]


# ---------------------------------------------------------------------------
# Elementary smooth functions
# ---------------------------------------------------------------------------


def _sigmoid_float(z: float) -> float:
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def sigmoid(x) -> DualScalar:
    """Logistic function, saturation-safe for large |x| (incl. +/-inf)."""
    if not isinstance(x, DualScalar):
        return DualScalar(_sigmoid_float(float(x)))
    s = _sigmoid_float(x.value)
    return DualScalar(s, (x,), (s * (1.0 - s),))


def _softplus_float(z: float) -> float:
    if z > 30.0:
        return z
    if z < -30.0:
        return math.exp(z)
    return math.log1p(math.exp(z))


def softplus(x, temperature: float = 1.0) -> DualScalar:
    """Smoothed ReLU: T * ln(1 + exp(x / T))."""
    if temperature <= 0.0:
        raise ValueError("softplus temperature must be positive")
    if not isinstance(x, DualScalar):
        return DualScalar(temperature * _softplus_float(float(x) / temperature))
    z = x.value / temperature
    return DualScalar(
        temperature * _softplus_float(z), (x,), (_sigmoid_float(z),)
    )


def exp(x) -> DualScalar:
    if not isinstance(x, DualScalar):
        return DualScalar(math.exp(float(x)))
    v = math.exp(x.value)
    return DualScalar(v, (x,), (v,))


def log(x) -> DualScalar:
    if not isinstance(x, DualScalar):
        return DualScalar(math.log(float(x)))
    return DualScalar(math.log(x.value), (x,), (1.0 / x.value,))


def relu(x) -> DualScalar:
    """Hard hinge; subgradient 0 at the kink."""
    if not isinstance(x, DualScalar):
        return DualScalar(max(0.0, float(x)))
    if x.value > 0.0:
        return DualScalar(x.value, (x,), (1.0,))
    return DualScalar(0.0, (x,), (0.0,))


def clamp_min(x: DualScalar, floor: float) -> DualScalar:
    """max(x, floor) with a hard switch: zero gradient while the floor binds."""
    if x.value > floor:
        return DualScalar(x.value, (x,), (1.0,))
    return DualScalar(floor, (x,), (0.0,))


# ---------------------------------------------------------------------------
# Fused n-ary reductions
# ---------------------------------------------------------------------------


def _softmin_parts(values, temperature):
    """Stable log-sum-exp pieces shared by softmin/softmax.

    Returns (result, weights) for softmin_T(v) = -T ln sum_i exp(-v_i / T);
    weights are the softmax of -v/T and sum to 1 exactly up to float error.
    Summation runs over indices sorted by value so the result is invariant
    under permutation of the inputs.
    """
    vals = [_value(v) for v in values]
    lo = min(vals)
    order = sorted(range(len(vals)), key=lambda i: vals[i])
    exps = [0.0] * len(vals)
    total = 0.0
    for i in order:
        e = math.exp(-(vals[i] - lo) / temperature)
        exps[i] = e
        total += e
    result = lo - temperature * math.log(total)
    weights = [e / total for e in exps]
    return result, weights


def softmin(values: Sequence, temperature: float) -> DualScalar:
    """Smooth minimum: -T * ln(sum_i exp(-v_i / T)).

    A lower bound on min(values); the gap is at most T * ln(len(values)).
    Partials are the convex softmax weights of -v/T.
    """
    if temperature <= 0.0:
        raise ValueError("softmin temperature must be positive")
    if not values:
        raise ValueError("softmin needs at least one value")
    result, weights = _softmin_parts(values, temperature)
    parents = tuple(v for v in values if isinstance(v, DualScalar))
    if not parents:
        return DualScalar(result)
    if len(parents) == len(values):
        return DualScalar(result, parents, tuple(weights))
    grads = tuple(
        w for v, w in zip(values, weights) if isinstance(v, DualScalar)
    )
    return DualScalar(result, parents, grads)


def softmax(values: Sequence, temperature: float) -> DualScalar:
    """Smooth maximum, the mirror of :func:`softmin`: T * ln(sum exp(v_i/T))."""
    if temperature <= 0.0:
        raise ValueError("softmax temperature must be positive")
    negated = [-_value(v) for v in values]
    result, weights = _softmin_parts(negated, temperature)
    parents = tuple(v for v in values if isinstance(v, DualScalar))
    if not parents:
        return DualScalar(-result)
    grads = tuple(
        w for v, w in zip(values, weights) if isinstance(v, DualScalar)
    )
    return DualScalar(-result, parents, grads)


def soft_count_ge(references: Sequence, query, temperature: float) -> DualScalar:
    """Smooth count of references >= query: sum_i sigmoid((r_i - q) / T).

    Fused into one node because it sits inside every soft p-value; partials
    flow to each reference and (negated, summed) to the query.
    """
    if temperature <= 0.0:
        raise ValueError("soft_count_ge temperature must be positive")
    q = _value(query)
    total = 0.0
    ref_grads = []
    query_grad = 0.0
    for r in references:
        s = _sigmoid_float((_value(r) - q) / temperature)
        total += s
        d = s * (1.0 - s) / temperature
        ref_grads.append(d)
        query_grad -= d
    parents = []
    grads = []
    for r, d in zip(references, ref_grads):
        if isinstance(r, DualScalar):
            parents.append(r)
            grads.append(d)
    if isinstance(query, DualScalar):
        parents.append(query)
        grads.append(query_grad)
    if not parents:
        return DualScalar(total)
    return DualScalar(total, tuple(parents), tuple(grads))


def dsum(values: Iterable) -> DualScalar:
    """Sum of a sequence as a single fused node."""
    values = list(values)
    total = math.fsum(_value(v) for v in values)
    parents = tuple(v for v in values if isinstance(v, DualScalar))
    if not parents:
        return DualScalar(total)
    return DualScalar(total, parents, (1.0,) * len(parents))


def dmean(values: Iterable) -> DualScalar:
    """Arithmetic mean as a single fused node."""
    values = list(values)
    if not values:
        raise ValueError("dmean needs at least one value")
    n = len(values)
    total = math.fsum(_value(v) for v in values)
    parents = tuple(v for v in values if isinstance(v, DualScalar))
    if not parents:
        return DualScalar(total / n)
    return DualScalar(total / n, parents, (1.0 / n,) * len(parents))
