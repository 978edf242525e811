"""Adaptive-moment gradient descent with exponential learning-rate decay."""

import numpy as np


class Adam:
    """From-scratch Adam (beta1=0.9, beta2=0.999) over a list of Parameters."""

    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8,
                 decay_every=200_000, decay_gamma=0.5, min_lr=1e-5):
        self.params = [p for p in params if p.trainable]
        self.lr = float(lr)
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.decay_every = int(decay_every)
        self.decay_gamma = float(decay_gamma)
        self.min_lr = float(min_lr)
        self.t = 0
        self._m = [np.zeros_like(p.data) for p in self.params]
        self._v = [np.zeros_like(p.data) for p in self.params]

    def current_lr(self):
        n_decays = self.t // self.decay_every
        return max(self.min_lr, self.lr * self.decay_gamma**n_decays)

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()

    def step(self):
        self.t += 1
        lr = self.current_lr()
        b1, b2 = self.beta1, self.beta2
        for p, m, v in zip(self.params, self._m, self._v):
            g = p.grad
            if g is None:
                continue
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            m_hat = m / (1 - b1**self.t)
            v_hat = v / (1 - b2**self.t)
            p.data = p.data - lr * m_hat / (np.sqrt(v_hat) + self.eps)
