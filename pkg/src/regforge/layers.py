"""Building blocks shared by the network modules: parameter registry,
linear/MLP layers, layer norm. Weight init is uniform in +-sqrt(1/fan_in);
pose output layers opt into zero init so a fresh model predicts identity.
"""

import numpy as np

from . import tensor as T
from .tensor import Parameter, Tensor


class ParamStore:
    """Registry enforcing unique parameter names within one model."""

    def __init__(self, rng):
        self.rng = rng
        self._params = {}

    def create(self, name, shape, fan_in=None, zero=False, value=None):
        if name in self._params:
            raise ValueError(f"duplicate parameter name: {name}")
        if value is not None:
            data = np.asarray(value, dtype=np.float64).reshape(shape)
        elif zero:
            data = np.zeros(shape)
        else:
            bound = np.sqrt(1.0 / (fan_in if fan_in else shape[0]))
            data = self.rng.uniform(-bound, bound, size=shape)
        p = Parameter(name, data)
        self._params[name] = p
        return p

    def parameters(self):
        return list(self._params.values())

    def state_dict(self):
        return {name: p.data.copy() for name, p in self._params.items()}

    def load_state_dict(self, state):
        missing = set(self._params) - set(state)
        extra = set(state) - set(self._params)
        if missing or extra:
            raise KeyError(f"weight mismatch: missing={sorted(missing)} extra={sorted(extra)}")
        for name, arr in state.items():
            p = self._params[name]
            if p.data.shape != arr.shape:
                raise ValueError(f"{name}: shape {arr.shape} != expected {p.data.shape}")
            p.data = arr


class Linear:
    def __init__(self, store, name, in_dim, out_dim, zero=False, bias_value=None):
        self.w = store.create(f"{name}.w", (in_dim, out_dim), fan_in=in_dim, zero=zero)
        if bias_value is not None:
            self.b = store.create(f"{name}.b", (out_dim,), value=bias_value)
        else:
            self.b = store.create(f"{name}.b", (out_dim,), zero=True)

    def __call__(self, x):
        flat = x.reshape((-1, self.w.data.shape[0]))
        out = T.matmul(flat, self.w.tensor) + self.b.tensor
        return out.reshape(x.shape[:-1] + (self.w.data.shape[1],))


class Mlp:
    """Stack of linear layers. `act` between layers; `final_act` controls the last."""

    def __init__(self, store, name, in_dim, widths, act="leaky_relu", final_act=True):
        self.layers = []
        self.act = act
        self.final_act = final_act
        d = in_dim
        for i, w in enumerate(widths):
            self.layers.append(Linear(store, f"{name}.{i}", d, w))
            d = w
        self.out_dim = d

    def __call__(self, x):
        for i, layer in enumerate(self.layers):
            x = layer(x)
            if i < len(self.layers) - 1 or self.final_act:
                x = T.gelu(x) if self.act == "gelu" else T.leaky_relu(x, 0.1)
        return x


class LayerNorm:
    """Normalization over the trailing channel axis with learned affine."""

    def __init__(self, store, name, dim, eps=1e-5):
        self.gamma = store.create(f"{name}.gamma", (dim,), value=np.ones(dim))
        self.beta = store.create(f"{name}.beta", (dim,), zero=True)
        self.eps = eps

    def __call__(self, x):
        mu = x.mean(axis=-1, keepdims=True)
        centered = x - mu
        var = (centered * centered).mean(axis=-1, keepdims=True)
        normed = centered / T.sqrt(var + self.eps)
        return normed * self.gamma.tensor + self.beta.tensor


def as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)
