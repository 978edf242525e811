import numpy as np
import pytest

from regforge.tensor import Tensor


def central_diff(fn, arrays, which, index, h=1e-5):
    """Central finite difference of scalar fn at arrays[which][index]."""
    plus = [a.copy() for a in arrays]
    minus = [a.copy() for a in arrays]
    plus[which][index] += h
    minus[which][index] -= h
    return (fn(plus) - fn(minus)) / (2 * h)


def gradcheck(build, arrays, h=1e-5, rtol=1e-4, floor=1e-3, max_coords=None, rng=None):
    """Compare reverse-mode gradients of `build` against central differences.

    `build` maps a list of Tensors to a scalar Tensor. Relative error uses an
    absolute floor so finite-difference roundoff on near-zero gradients does
    not dominate. Returns the number of coordinates checked.
    """
    tensors = [Tensor(a, requires_grad=True) for a in arrays]
    loss = build(tensors)
    loss.backward()
    grads = [t.grad if t.grad is not None else np.zeros_like(t.data) for t in tensors]

    def scalar_fn(arrs):
        with_np = [Tensor(a) for a in arrs]
        return float(build(with_np).data)

    checked = 0
    for which, arr in enumerate(arrays):
        coords = list(np.ndindex(arr.shape))
        if max_coords is not None and len(coords) > max_coords:
            rng = rng or np.random.default_rng(0)
            picks = rng.choice(len(coords), size=max_coords, replace=False)
            coords = [coords[i] for i in picks]
        for index in coords:
            fd = central_diff(scalar_fn, arrays, which, index, h=h)
            an = grads[which][index]
            rel = abs(an - fd) / max(abs(an), abs(fd), floor)
            assert rel < rtol, (
                f"grad mismatch at input {which}{index}: analytic={an} fd={fd} rel={rel}"
            )
            checked += 1
    return checked


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
