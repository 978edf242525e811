"""Dense float64 tensors with define-by-run reverse-mode differentiation.

The graph is rebuilt on every forward pass: each op closes over its inputs
and appends a backward closure. `backward()` walks the tape in reverse
topological order and accumulates into `.grad` buffers.
"""

import contextlib

import numpy as np

_GRAD_ENABLED = True


@contextlib.contextmanager
def no_grad():
    """Disable tape construction inside the block (inference fast path)."""
    global _GRAD_ENABLED
    prev = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = prev


def _unbroadcast(grad, shape):
    """Sum `grad` down to `shape`, undoing numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for i, n in enumerate(shape):
        if n == 1 and grad.shape[i] != 1:
            grad = grad.sum(axis=i, keepdims=True)
    return grad


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad=False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad) and _GRAD_ENABLED
        self._parents = ()
        self._backward = None

    # -- construction helpers -------------------------------------------------

    @staticmethod
    def _make(data, parents, backward):
        out = Tensor(data)
        if _GRAD_ENABLED and any(p.requires_grad for p in parents):
            out.requires_grad = True
            out._parents = tuple(parents)
            out._backward = backward
        return out

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def numpy(self):
        """Detached copy of the values."""
        return self.data.copy()

    def detach(self):
        return Tensor(self.data)

    def zero_grad(self):
        self.grad = None

    def _accum(self, g):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    # -- arithmetic ------------------------------------------------------------

    @staticmethod
    def _coerce(x):
        return x if isinstance(x, Tensor) else Tensor(x)

    def __add__(self, other):
        other = Tensor._coerce(other)
        out_data = self.data + other.data

        def backward(g):
            if self.requires_grad:
                self._accum(_unbroadcast(g, self.shape))
            if other.requires_grad:
                other._accum(_unbroadcast(g, other.shape))

        return Tensor._make(out_data, (self, other), backward)

    __radd__ = __add__

    def __neg__(self):
        def backward(g):
            self._accum(-g)

        return Tensor._make(-self.data, (self,), backward)

    def __sub__(self, other):
        return self + (-Tensor._coerce(other))

    def __rsub__(self, other):
        return Tensor._coerce(other) + (-self)

    def __mul__(self, other):
        other = Tensor._coerce(other)
        out_data = self.data * other.data

        def backward(g):
            if self.requires_grad:
                self._accum(_unbroadcast(g * other.data, self.shape))
            if other.requires_grad:
                other._accum(_unbroadcast(g * self.data, other.shape))

        return Tensor._make(out_data, (self, other), backward)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = Tensor._coerce(other)
        out_data = self.data / other.data

        def backward(g):
            if self.requires_grad:
                self._accum(_unbroadcast(g / other.data, self.shape))
            if other.requires_grad:
                other._accum(_unbroadcast(-g * self.data / other.data**2, other.shape))

        return Tensor._make(out_data, (self, other), backward)

    def __rtruediv__(self, other):
        return Tensor._coerce(other) / self

    def __pow__(self, exponent):
        if not np.isscalar(exponent):
            raise TypeError("only scalar exponents are supported")
        out_data = self.data**exponent

        def backward(g):
            self._accum(g * exponent * self.data ** (exponent - 1))

        return Tensor._make(out_data, (self,), backward)

    def __matmul__(self, other):
        return matmul(self, other)

    # -- indexing / shaping ----------------------------------------------------

    def __getitem__(self, key):
        out_data = self.data[key]

        def backward(g):
            gx = np.zeros_like(self.data)
            np.add.at(gx, key, g)
            self._accum(gx)

        return Tensor._make(out_data, (self,), backward)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        old_shape = self.shape
        out_data = self.data.reshape(shape)

        def backward(g):
            self._accum(g.reshape(old_shape))

        return Tensor._make(out_data, (self,), backward)

    def transpose(self, axes):
        axes = tuple(axes)
        inv = tuple(np.argsort(axes))

        def backward(g):
            self._accum(np.transpose(g, inv))

        return Tensor._make(np.transpose(self.data, axes), (self,), backward)

    # -- reductions ------------------------------------------------------------

    def sum(self, axis=None, keepdims=False):
        out_data = self.data.sum(axis=axis, keepdims=keepdims)

        def backward(g):
            if axis is None:
                self._accum(np.broadcast_to(g, self.shape).copy())
            else:
                if not keepdims:
                    g = np.expand_dims(g, axis)
                self._accum(np.broadcast_to(g, self.shape).copy())

        return Tensor._make(out_data, (self,), backward)

    def mean(self, axis=None, keepdims=False):
        n = self.size if axis is None else self.shape[axis]
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / n)

    def max(self, axis, keepdims=False):
        out_data = self.data.max(axis=axis, keepdims=keepdims)

        def backward(g):
            expanded = out_data if keepdims else np.expand_dims(out_data, axis)
            mask = (self.data == expanded).astype(np.float64)
            mask /= mask.sum(axis=axis, keepdims=True)  # split ties evenly
            gg = g if keepdims else np.expand_dims(g, axis)
            self._accum(mask * gg)

        return Tensor._make(out_data, (self,), backward)

    # -- autodiff --------------------------------------------------------------

    def backward(self):
        """Populate gradients of everything this scalar depends on."""
        if self.size != 1:
            raise ValueError(f"backward() requires a scalar loss, got shape {self.shape}")
        topo = []
        visited = set()
        stack = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in visited:
                    stack.append((p, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, grad={'set' if self.grad is not None else 'none'})"


class Parameter:
    """Named trainable tensor. Names are unique within one model."""

    def __init__(self, name, data, trainable=True):
        self.name = name
        self.tensor = Tensor(data, requires_grad=trainable)
        self.trainable = trainable

    @property
    def data(self):
        return self.tensor.data

    @data.setter
    def data(self, value):
        self.tensor.data = np.asarray(value, dtype=np.float64)

    @property
    def grad(self):
        return self.tensor.grad

    def zero_grad(self):
        self.tensor.grad = None

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.tensor.shape})"


# -- free functions -----------------------------------------------------------


def matmul(a, b):
    """Matrix product; operands must both have ndim >= 2.

    Batch dimensions broadcast like numpy matmul; gradients flow to both sides.
    """
    a = Tensor._coerce(a)
    b = Tensor._coerce(b)
    if a.ndim < 2 or b.ndim < 2:
        raise ValueError(f"matmul needs ndim >= 2 operands, got {a.shape} @ {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ValueError(f"matmul inner dimensions disagree: {a.shape} @ {b.shape}")
    out_data = a.data @ b.data

    def backward(g):
        if a.requires_grad:
            ga = g @ np.swapaxes(b.data, -1, -2)
            a._accum(_unbroadcast(ga, a.shape))
        if b.requires_grad:
            gb = np.swapaxes(a.data, -1, -2) @ g
            b._accum(_unbroadcast(gb, b.shape))

    return Tensor._make(out_data, (a, b), backward)


def exp(x):
    x = Tensor._coerce(x)
    out_data = np.exp(x.data)

    def backward(g):
        x._accum(g * out_data)

    return Tensor._make(out_data, (x,), backward)


def log(x):
    x = Tensor._coerce(x)

    def backward(g):
        x._accum(g / x.data)

    return Tensor._make(np.log(x.data), (x,), backward)


def sqrt(x):
    """Square root with zero subgradient at x == 0 (keeps norms NaN-free)."""
    x = Tensor._coerce(x)
    out_data = np.sqrt(x.data)

    def backward(g):
        denom = 2.0 * out_data
        gx = np.where(out_data > 0.0, g / np.where(denom > 0.0, denom, 1.0), 0.0)
        x._accum(gx)

    return Tensor._make(out_data, (x,), backward)


def absolute(x):
    x = Tensor._coerce(x)

    def backward(g):
        x._accum(g * np.sign(x.data))

    return Tensor._make(np.abs(x.data), (x,), backward)


def tanh(x):
    x = Tensor._coerce(x)
    out_data = np.tanh(x.data)

    def backward(g):
        x._accum(g * (1.0 - out_data**2))

    return Tensor._make(out_data, (x,), backward)


def gelu(x):
    """tanh-approximation GELU; smooth, so finite-difference checks stay clean."""
    c = np.sqrt(2.0 / np.pi)
    x = Tensor._coerce(x)
    u = x.data
    inner = c * (u + 0.044715 * u**3)
    t = np.tanh(inner)
    out_data = 0.5 * u * (1.0 + t)

    def backward(g):
        dinner = c * (1.0 + 3 * 0.044715 * u**2)
        gx = 0.5 * (1.0 + t) + 0.5 * u * (1.0 - t**2) * dinner
        x._accum(g * gx)

    return Tensor._make(out_data, (x,), backward)


def leaky_relu(x, slope=0.1):
    x = Tensor._coerce(x)
    factor = np.where(x.data > 0.0, 1.0, slope)

    def backward(g):
        x._accum(g * factor)

    return Tensor._make(x.data * factor, (x,), backward)


def clip_min(x, low):
    """Elementwise max(x, low) for a scalar floor; gradient passes where x > low."""
    x = Tensor._coerce(x)
    mask = (x.data > low).astype(np.float64)

    def backward(g):
        x._accum(g * mask)

    return Tensor._make(np.maximum(x.data, low), (x,), backward)


def softmax(x, axis):
    """Stable softmax along `axis`; -1e9 sentinel entries come out below 1e-12."""
    x = Tensor._coerce(x)
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out_data = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        dot = (g * out_data).sum(axis=axis, keepdims=True)
        x._accum(out_data * (g - dot))

    return Tensor._make(out_data, (x,), backward)


def concat(tensors, axis):
    tensors = [Tensor._coerce(t) for t in tensors]
    sizes = [t.shape[axis] for t in tensors]
    out_data = np.concatenate([t.data for t in tensors], axis=axis)
    offsets = np.cumsum([0] + sizes)

    def backward(g):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                idx = [slice(None)] * g.ndim
                idx[axis] = slice(lo, hi)
                t._accum(g[tuple(idx)])

    return Tensor._make(out_data, tuple(tensors), backward)


def stack(tensors, axis=0):
    return concat([t.reshape(t.shape[:axis] + (1,) + t.shape[axis:]) for t in tensors], axis)


def gather(x, index):
    """x[index] for an integer index array on axis 0; backward scatter-adds."""
    x = Tensor._coerce(x)
    index = np.asarray(index)
    out_data = x.data[index]

    def backward(g):
        gx = np.zeros_like(x.data)
        np.add.at(gx, index, g)
        x._accum(gx)

    return Tensor._make(out_data, (x,), backward)


def roll(x, shift, axis):
    """Cyclic shift; gradient rolls back."""
    x = Tensor._coerce(x)
    shift = tuple(np.atleast_1d(shift))
    axis = tuple(np.atleast_1d(axis))

    def backward(g):
        x._accum(np.roll(g, tuple(-s for s in shift), axis))

    return Tensor._make(np.roll(x.data, shift, axis), (x,), backward)


def dropout(x, p, rng, training):
    """Inverted dropout; identity when not training or p == 0."""
    if not training or p <= 0.0:
        return x
    x = Tensor._coerce(x)
    keep = (rng.random(x.shape) >= p) / (1.0 - p)

    def backward(g):
        x._accum(g * keep)

    return Tensor._make(x.data * keep, (x,), backward)


def where_mask(mask, x):
    """Multiply by a constant 0/1 mask (zeroing invalid positions)."""
    x = Tensor._coerce(x)
    mask = np.asarray(mask, dtype=np.float64)

    def backward(g):
        x._accum(_unbroadcast(g * mask, x.shape))

    return Tensor._make(x.data * mask, (x,), backward)
