"""Dense ReLU networks with a hand-written backward pass, and Adam."""

from __future__ import annotations

from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import InputError

HIDDEN_SIZES = (256, 256, 128, 128, 64)


def layer_sizes(input_size: int, output_size: int, hidden: Sequence[int] = HIDDEN_SIZES) -> Tuple[int, ...]:
    return (input_size, *hidden, output_size)


class DenseNetwork:
    """Fully connected network, ReLU between layers and identity at the output.

    Weights are stored as ``(fan_in, fan_out)`` matrices and initialised
    uniformly in ``+-1/sqrt(fan_in)``; biases start at zero.
    """

    def __init__(self, sizes: Sequence[int], rng: np.random.Generator, dtype=np.float64):
        if len(sizes) < 2 or min(sizes) < 1:
            raise InputError(f"invalid layer sizes {tuple(sizes)}")
        self.sizes = tuple(int(s) for s in sizes)
        self.dtype = np.dtype(dtype)
        self.weights: List[np.ndarray] = []
        self.biases: List[np.ndarray] = []
        for fan_in, fan_out in zip(self.sizes[:-1], self.sizes[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            self.weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)).astype(self.dtype))
            self.biases.append(np.zeros(fan_out, dtype=self.dtype))

    @property
    def input_size(self) -> int:
        return self.sizes[0]

    @property
    def output_size(self) -> int:
        return self.sizes[-1]

    def params(self) -> List[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    @property
    def n_params(self) -> int:
        return sum(p.size for p in self.params())

    def _check(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=self.dtype)
        if x.shape[-1] != self.input_size:
            raise InputError(f"input has {x.shape[-1]} features, network expects {self.input_size}")
        return x

    def forward(self, x: np.ndarray) -> np.ndarray:
        h = self._check(x)
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if i < last:
                h = np.maximum(h, 0.0)
        return h

    def forward_cached(self, x: np.ndarray) -> Tuple[np.ndarray, List[np.ndarray]]:
        """Forward pass for a batch ``(B, M)``, keeping each layer's input."""
        h = self._check(np.atleast_2d(x))
        inputs = []
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            inputs.append(h)
            h = h @ w + b
            if i < last:
                h = np.maximum(h, 0.0)
        return h, inputs

    def backward(self, inputs: List[np.ndarray], dout: np.ndarray) -> List[np.ndarray]:
        """Gradients ``[dW0, db0, dW1, db1, ...]`` given dLoss/dOutput."""
        grads: List[np.ndarray] = [None] * (2 * len(self.weights))  # type: ignore[list-item]
        delta = np.asarray(dout, dtype=self.dtype)
        for i in range(len(self.weights) - 1, -1, -1):
            grads[2 * i] = inputs[i].T @ delta
            grads[2 * i + 1] = delta.sum(axis=0)
            if i:
                # inputs[i] is the ReLU output of layer i-1; zero where inactive.
                delta = (delta @ self.weights[i].T) * (inputs[i] > 0)
        return grads

    def copy_from(self, other: "DenseNetwork") -> None:
        for mine, theirs in zip(self.params(), other.params()):
            mine[...] = theirs

    def all_finite(self) -> bool:
        return all(np.isfinite(p).all() for p in self.params())


class Adam:
    def __init__(self, params: List[np.ndarray], lr: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads: List[np.ndarray]) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


LossFn = Callable[[np.ndarray], Tuple[float, np.ndarray]]


def squared_loss(target: np.ndarray) -> LossFn:
    def fn(out: np.ndarray) -> Tuple[float, np.ndarray]:
        diff = out - target
        return 0.5 * float(np.sum(diff * diff)), diff
    return fn


def relative_error(analytic: float, numeric: float, floor: float = 1e-6) -> float:
    # The floor stops gradients that are zero up to round-off from dominating.
    return abs(analytic - numeric) / max(abs(analytic) + abs(numeric), floor)


def check_gradients(net: DenseNetwork, x: np.ndarray, loss_fn: LossFn, samples: int = 256,
                    h: float = 1e-5, rng: Optional[np.random.Generator] = None) -> float:
    """Largest relative error between backprop and central differences.

    ``samples`` parameters are drawn at random (all of them if the network
    is smaller); every layer's weight and bias is represented.
    """
    if net.dtype != np.float64:
        raise InputError("gradient checks need a float64 network")
    rng = np.random.default_rng(0) if rng is None else rng
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    out, inputs = net.forward_cached(x)
    _, dout = loss_fn(out)
    grads = net.backward(inputs, dout)
    params = net.params()

    picks: List[Tuple[int, int]] = []
    for k, p in enumerate(params):
        picks.append((k, int(rng.integers(p.size))))
    sizes = np.array([p.size for p in params], dtype=float)
    extra = max(samples - len(picks), 0)
    for k in rng.choice(len(params), size=extra, p=sizes / sizes.sum()):
        picks.append((int(k), int(rng.integers(params[k].size))))

    worst = 0.0
    for k, flat in picks:
        p = params[k].reshape(-1)
        saved = p[flat]
        p[flat] = saved + h
        plus, _ = loss_fn(net.forward(x))
        p[flat] = saved - h
        minus, _ = loss_fn(net.forward(x))
        p[flat] = saved
        numeric = (plus - minus) / (2.0 * h)
        worst = max(worst, relative_error(float(grads[k].reshape(-1)[flat]), numeric))
    return worst


def gradient_check(net: DenseNetwork, x: np.ndarray, target: float, samples: int = 256,
                   h: float = 1e-5, rng: Optional[np.random.Generator] = None) -> float:
    """Gradient check of ``0.5 * sum((net(x) - target)**2)``."""
    return check_gradients(net, x, squared_loss(np.asarray(target, dtype=np.float64)),
                           samples, h, rng)
