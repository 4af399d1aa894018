"""Tiny fully connected networks with hand-rolled forward/backward passes.

Everything is float64 numpy. Hidden layers use rectifier activations; the
output is identity or tanh, optionally scaled per dimension (used to bound
actor outputs to the action limits). Gradients are exact reverse-mode.
"""
from __future__ import annotations

import numpy as np


class Mlp:
    """Fully connected net. Weights are (n_out, n_in); forward is x @ W.T + b."""

    def __init__(self, layer_sizes, rng=None, out_activation="identity",
                 out_scale=None, final_init_scale=None):
        if len(layer_sizes) < 2:
            raise ValueError("need at least input and output sizes")
        if out_activation not in ("identity", "tanh"):
            raise ValueError(f"unknown out_activation {out_activation!r}")
        self.layer_sizes = list(int(s) for s in layer_sizes)
        self.out_activation = out_activation
        self.out_scale = None if out_scale is None else np.asarray(out_scale, float)
        self.weights = []
        self.biases = []
        rng = rng if rng is not None else np.random.default_rng(0)
        last = len(layer_sizes) - 2
        for i, (n_in, n_out) in enumerate(zip(layer_sizes[:-1], layer_sizes[1:])):
            bound = 1.0 / np.sqrt(n_in)
            if i == last and final_init_scale is not None:
                bound = final_init_scale
            self.weights.append(rng.uniform(-bound, bound, size=(n_out, n_in)))
            self.biases.append(rng.uniform(-bound, bound, size=n_out))

    # -- parameter plumbing ---------------------------------------------------

    def parameters(self):
        """Flat list of parameter arrays (weights then bias per layer)."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend([w, b])
        return out

    def copy(self) -> "Mlp":
        dup = Mlp.__new__(Mlp)
        dup.layer_sizes = list(self.layer_sizes)
        dup.out_activation = self.out_activation
        dup.out_scale = None if self.out_scale is None else self.out_scale.copy()
        dup.weights = [w.copy() for w in self.weights]
        dup.biases = [b.copy() for b in self.biases]
        return dup

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(p)) for p in self.parameters())

    # -- forward/backward -------------------------------------------------------

    def forward(self, x):
        """Deterministic forward pass; accepts (n,) or (batch, n)."""
        y, _ = self._forward_cached(np.asarray(x, dtype=np.float64))
        return y

    def _forward_cached(self, x):
        single = x.ndim == 1
        a = x[None, :] if single else x
        if a.shape[1] != self.layer_sizes[0]:
            raise ValueError(
                f"input size {a.shape[1]} != expected {self.layer_sizes[0]}")
        acts = [a]
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = acts[-1] @ w.T + b
            if i < len(self.weights) - 1:
                z = np.maximum(z, 0.0)
            acts.append(z)
        y = acts[-1]
        if self.out_activation == "tanh":
            y = np.tanh(y)
        if self.out_scale is not None:
            y = y * self.out_scale
        return (y[0] if single else y), acts

    def backward(self, acts, grad_out, preactivation_grad=None):
        """Reverse-mode gradients given cached activations.

        `grad_out` is d(loss)/d(output), same shape as the output (summed
        over the batch in the returned parameter grads). An optional
        `preactivation_grad` is added at the final pre-activation (used for
        regularizers that act before the output squashing). Returns
        (param_grads, grad_input) with param_grads ordered like parameters().
        """
        g = np.asarray(grad_out, dtype=np.float64)
        single = g.ndim == 1
        if single:
            g = g[None, :]
        z_out = acts[-1]
        if self.out_scale is not None:
            g = g * self.out_scale
        if self.out_activation == "tanh":
            g = g * (1.0 - np.tanh(z_out) ** 2)
        if preactivation_grad is not None:
            g = g + preactivation_grad
        grads = [None] * (2 * len(self.weights))
        for i in range(len(self.weights) - 1, -1, -1):
            a_prev = acts[i]
            grads[2 * i] = g.T @ a_prev          # dW
            grads[2 * i + 1] = g.sum(axis=0)     # db
            g = g @ self.weights[i]
            if i > 0:
                g = g * (acts[i] > 0.0)
        return grads, (g[0] if single else g)


def gradients(net: Mlp, loss_grad_at_output, x):
    """Exact parameter gradients of <loss_grad_at_output, net(x)>.

    Returns (param_grads, grad_wrt_input).
    """
    _, acts = net._forward_cached(np.asarray(x, dtype=np.float64))
    return net.backward(acts, loss_grad_at_output)


def soft_update(target: Mlp, online: Mlp, tau: float) -> Mlp:
    """Polyak update: every target parameter <- tau*online + (1-tau)*target."""
    if target.layer_sizes != online.layer_sizes:
        raise ValueError("mismatched layer sizes")
    for pt, po in zip(target.parameters(), online.parameters()):
        pt *= 1.0 - tau
        pt += tau * po
    return target


class Adam:
    """Adaptive-moment estimation on one net's parameter list."""

    def __init__(self, net: Mlp, lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in net.parameters()]
        self.v = [np.zeros_like(p) for p in net.parameters()]

    def step(self, net: Mlp, grads):
        self.t += 1
        b1t = 1.0 - self.beta1 ** self.t
        b2t = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(net.parameters(), grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p -= self.lr * (m / b1t) / (np.sqrt(v / b2t) + self.eps)
