"""Globally shared SDF decoder: a shallow MLP with an exact backward pass.

The decoder maps a neural point's latent feature concatenated with the
query's coordinates in that point's local frame to one signed-distance
value.  Parameters are stored in float32; batched math runs in a caller
chosen dtype (float32 for speed, float64 for gradient checks), with
gradient accumulation in float64.
"""

from __future__ import annotations

import numpy as np

FEATURE_DIM = 8
HIDDEN_LAYERS = 2
HIDDEN_WIDTH = 64

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


class Decoder:
    """Two-hidden-layer ReLU MLP, (feature_dim + 3) -> width -> width -> 1."""

    def __init__(self, feature_dim=FEATURE_DIM, width=HIDDEN_WIDTH, seed=0):
        self.feature_dim = feature_dim
        self.width = width
        self.in_dim = feature_dim + 3
        rng = np.random.default_rng(seed)
        dims = [self.in_dim, width, width]
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(dims, dims[1:] + [1]):
            bound = 1.0 / np.sqrt(fan_in)
            w = rng.uniform(-bound, bound, size=(fan_out, fan_in)).astype(np.float32)
            self.weights.append(w)
            self.biases.append(np.zeros(fan_out, dtype=np.float32))

    # -- parameter plumbing ------------------------------------------------

    def parameters(self):
        """Flat list of parameter arrays (weights interleaved with biases)."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend([w, b])
        return out

    def set_parameters(self, params):
        for i in range(len(self.weights)):
            self.weights[i] = params[2 * i].astype(np.float32)
            self.biases[i] = params[2 * i + 1].astype(np.float32)

    def copy(self):
        other = Decoder(self.feature_dim, self.width)
        other.weights = [w.copy() for w in self.weights]
        other.biases = [b.copy() for b in self.biases]
        return other

    # -- forward / backward ------------------------------------------------

    def forward_batch(self, x, dtype=np.float32, want_cache=False):
        """Evaluate the MLP on inputs x (M, feature_dim+3).

        Returns outputs (M,) and, when requested, the activation cache
        needed by backward_batch.
        """
        x = np.asarray(x)
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ValueError(f"expected input of shape (M, {self.in_dim}), got {x.shape}")
        h = x.astype(dtype, copy=False)
        cache = [h]
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            z = h @ w.T.astype(dtype, copy=False)
            z += b.astype(dtype, copy=False)
            np.maximum(z, 0.0, out=z)
            h = z
            cache.append(h)
        out = h @ self.weights[-1].T.astype(dtype, copy=False)
        out += self.biases[-1].astype(dtype, copy=False)
        out = out[:, 0]
        if want_cache:
            return out, cache
        return out

    def backward_batch(self, cache, upstream, want_param_grads=True, dtype=np.float32):
        """Exact gradients for a previous forward_batch.

        upstream is dL/ds per sample (M,).  Returns (grad_input (M, in_dim),
        param_grads) where param_grads is a flat float64 list matching
        parameters(), or None when not requested.  Parameter-gradient GEMMs
        run in the compute dtype; the (small) results accumulate in float64.
        """
        upstream = np.asarray(upstream, dtype=dtype)
        delta = upstream[:, None]  # (M, 1) grad wrt final linear output
        param_grads = [None] * (2 * len(self.weights)) if want_param_grads else None
        for layer in range(len(self.weights) - 1, -1, -1):
            h_in = cache[layer]
            if want_param_grads:
                gw = (delta.T @ h_in).astype(np.float64)
                gb = delta.sum(axis=0, dtype=np.float64)
                param_grads[2 * layer] = gw
                param_grads[2 * layer + 1] = gb
            delta = delta @ self.weights[layer].astype(dtype, copy=False)
            if layer > 0:
                delta *= h_in > 0
        return delta, param_grads

    # -- single-sample convenience (matches the module contract) -----------

    def forward(self, feature, rel_coord, dtype=np.float64):
        """SDF prediction for one (feature, local coordinate) pair."""
        feature = np.asarray(feature, dtype=np.float64).reshape(-1)
        rel_coord = np.asarray(rel_coord, dtype=np.float64).reshape(-1)
        if feature.shape[0] != self.feature_dim or rel_coord.shape[0] != 3:
            raise ValueError("feature / rel_coord size mismatch")
        if not np.all(np.isfinite(rel_coord)):
            raise ValueError("rel_coord must be finite")
        x = np.concatenate([feature, rel_coord])[None, :]
        return float(self.forward_batch(x, dtype=dtype)[0])

    def backward(self, feature, rel_coord, upstream=1.0, dtype=np.float64):
        """Gradients of upstream * output for one sample.

        Returns (param_grads, grad_feature, grad_rel_coord).
        """
        feature = np.asarray(feature, dtype=np.float64).reshape(-1)
        rel_coord = np.asarray(rel_coord, dtype=np.float64).reshape(-1)
        x = np.concatenate([feature, rel_coord])[None, :]
        _, cache = self.forward_batch(x, dtype=dtype, want_cache=True)
        grad_in, param_grads = self.backward_batch(
            cache, np.array([upstream]), want_param_grads=True, dtype=dtype
        )
        return param_grads, grad_in[0, : self.feature_dim], grad_in[0, self.feature_dim :]


class AdamState:
    """Adam optimizer state for one list of parameter arrays."""

    def __init__(self, params, lr, beta1=ADAM_BETA1, beta2=ADAM_BETA2, eps=ADAM_EPS):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = [np.zeros(p.shape, dtype=np.float64) for p in params]
        self.v = [np.zeros(p.shape, dtype=np.float64) for p in params]


def adam_step(params, grads, state: AdamState):
    """One bias-corrected Adam update; returns the updated parameter list."""
    state.step_count += 1
    t = state.step_count
    c1 = 1.0 - state.beta1**t
    c2 = 1.0 - state.beta2**t
    out = []
    for i, (p, g) in enumerate(zip(params, grads)):
        g = np.asarray(g, dtype=np.float64)
        if g.shape != p.shape:
            raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape}")
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g
        m_hat = state.m[i] / c1
        v_hat = state.v[i] / c2
        update = state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
        out.append((p.astype(np.float64) - update).astype(p.dtype))
    return out


class SparseRowAdam:
    """Adam over rows of a growable (N, D) array, stepping only touched rows.

    Each row keeps its own step counter so bias correction stays exact for
    rows that are updated intermittently (points drift in and out of the
    local map).
    """

    def __init__(self, lr, dim, beta1=ADAM_BETA1, beta2=ADAM_BETA2, eps=ADAM_EPS):
        self.lr = lr
        self.dim = dim
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = np.zeros((0, dim), dtype=np.float64)
        self.v = np.zeros((0, dim), dtype=np.float64)
        self.steps = np.zeros(0, dtype=np.int64)

    def ensure_rows(self, n):
        if n > self.m.shape[0]:
            extra = n - self.m.shape[0]
            self.m = np.concatenate([self.m, np.zeros((extra, self.dim))])
            self.v = np.concatenate([self.v, np.zeros((extra, self.dim))])
            self.steps = np.concatenate([self.steps, np.zeros(extra, dtype=np.int64)])

    def step_rows(self, values, rows, row_grads):
        """Update values[rows] in place given per-row gradients (float64)."""
        if len(rows) == 0:
            return
        self.ensure_rows(values.shape[0])
        g = np.asarray(row_grads, dtype=np.float64)
        self.steps[rows] += 1
        m = self.beta1 * self.m[rows] + (1.0 - self.beta1) * g
        v = self.beta2 * self.v[rows] + (1.0 - self.beta2) * g * g
        self.m[rows] = m
        self.v[rows] = v
        t = self.steps[rows].astype(np.float64)[:, None]
        m_hat = m / (1.0 - self.beta1**t)
        v_hat = v / (1.0 - self.beta2**t)
        upd = self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
        values[rows] = (values[rows].astype(np.float64) - upd).astype(values.dtype)
