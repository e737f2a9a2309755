"""Feed-forward regression networks and their Bayesian posterior energy.

Parameters of an M-layer perceptron live in a single flat vector, ordered
layer by layer, each layer's weight matrix in row-major order followed by its
bias. The posterior energy is a Gaussian prior plus a Gaussian likelihood:

    U(q) = |q|^2 / (2 prior_scale^2)
         + sum_i |f_q(x_i) - y_i|^2 / (2 noise_scale^2)

Gradients are computed by hand-rolled reverse-mode sweeps so the derivative
taken at a piecewise-linear activation's kink is an explicit, configurable
choice rather than an accident of a framework.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.special import expit

from .errors import DimensionMismatchError, UnsupportedActivationError
from .potentials import DriftSurfaces, Potential

ACTIVATIONS = ("sigmoid", "tanh", "relu", "leaky_relu")
PIECEWISE_ACTIVATIONS = ("relu", "leaky_relu")


@dataclass(frozen=True)
class MLPArchitecture:
    """Shape and activation of a multilayer perceptron.

    Args:
        layer_dims: (d_0, d_1, ..., d_M) with d_0 the input width and d_M the
            output width. Layers 1..M-1 are activated, layer M is linear.
        activation: one of "sigmoid", "tanh", "relu", "leaky_relu".
        zero_subderivative: value used for the activation derivative exactly at
            a kink (pre-activation equal to zero). Only meaningful for the
            piecewise-linear activations.
        leaky_slope: negative-side slope for leaky_relu.
    """

    layer_dims: Tuple[int, ...]
    activation: str = "relu"
    zero_subderivative: float = 0.0
    leaky_slope: float = 0.01

    def __post_init__(self):
        dims = tuple(int(d) for d in self.layer_dims)
        object.__setattr__(self, "layer_dims", dims)
        if len(dims) < 2:
            raise ValueError("need at least input and output layers")
        if any(d < 1 for d in dims):
            raise ValueError(f"layer widths must be positive, got {dims}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")

    @property
    def n_layers(self) -> int:
        """Number of weight layers M."""
        return len(self.layer_dims) - 1

    @property
    def n_params(self) -> int:
        return sum(d_out * (d_in + 1)
                   for d_in, d_out in zip(self.layer_dims, self.layer_dims[1:]))

    @property
    def hidden_dims(self) -> Tuple[int, ...]:
        return self.layer_dims[1:-1]

    @property
    def n_hidden(self) -> int:
        """Total number of hidden (activated) neurons across layers."""
        return sum(self.hidden_dims)

    def hidden_offset(self, layer: int) -> int:
        """Offset of hidden layer ``layer`` (1-based) in the concatenated order."""
        if not 1 <= layer <= len(self.hidden_dims):
            raise ValueError(f"no hidden layer {layer}")
        return sum(self.hidden_dims[: layer - 1])

    def is_piecewise(self) -> bool:
        return self.activation in PIECEWISE_ACTIVATIONS


def _check_params(arch: MLPArchitecture, params: np.ndarray) -> np.ndarray:
    params = np.asarray(params, dtype=float)
    if params.shape != (arch.n_params,):
        raise DimensionMismatchError(
            f"expected {arch.n_params} parameters, got shape {params.shape}"
        )
    return params


def unflatten(arch: MLPArchitecture, params: np.ndarray):
    """Split a flat parameter vector into [(W_1, b_1), ..., (W_M, b_M)].

    The returned arrays are views into ``params`` whenever possible, so this
    is cheap to call in inner loops.
    """
    params = _check_params(arch, params)
    layers = []
    o = 0
    for d_in, d_out in zip(arch.layer_dims, arch.layer_dims[1:]):
        w = params[o:o + d_out * d_in].reshape(d_out, d_in)
        o += d_out * d_in
        b = params[o:o + d_out]
        o += d_out
        layers.append((w, b))
    return layers


def flatten(arch: MLPArchitecture, layers) -> np.ndarray:
    """Pack [(W_1, b_1), ...] into a flat vector. Inverse of ``unflatten``."""
    if len(layers) != arch.n_layers:
        raise DimensionMismatchError(
            f"expected {arch.n_layers} layers, got {len(layers)}"
        )
    out = np.empty(arch.n_params)
    o = 0
    for (w, b), d_in, d_out in zip(layers, arch.layer_dims, arch.layer_dims[1:]):
        w = np.asarray(w, dtype=float)
        b = np.asarray(b, dtype=float)
        if w.shape != (d_out, d_in) or b.shape != (d_out,):
            raise DimensionMismatchError(
                f"layer shapes {w.shape}/{b.shape} do not match ({d_out},{d_in})"
            )
        out[o:o + w.size] = w.ravel()
        o += w.size
        out[o:o + d_out] = b
        o += d_out
    return out


@dataclass
class RegressionDataset:
    """Paired inputs x (n, d_in) and targets y (n, d_out)."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.x.ndim == 1:
            self.x = self.x[:, None]
        if self.y.ndim == 1:
            self.y = self.y[:, None]
        if self.x.ndim != 2 or self.y.ndim != 2:
            raise DimensionMismatchError("x and y must be 1-D or 2-D arrays")
        if self.x.shape[0] != self.y.shape[0]:
            raise DimensionMismatchError(
                f"x has {self.x.shape[0]} rows, y has {self.y.shape[0]}"
            )
        if self.x.size and not np.isfinite(self.x).all():
            raise ValueError("non-finite values in x")
        if self.y.size and not np.isfinite(self.y).all():
            raise ValueError("non-finite values in y")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @classmethod
    def empty(cls, d_in: int = 1, d_out: int = 1) -> "RegressionDataset":
        """Dataset with no observations (prior-only posterior)."""
        return cls(np.empty((0, d_in)), np.empty((0, d_out)))


@dataclass
class PosteriorSpec:
    """A network architecture, a dataset, and the two Gaussian scales."""

    arch: MLPArchitecture
    data: RegressionDataset
    prior_scale: float = 1.0
    noise_scale: float = 0.1

    def __post_init__(self):
        if self.prior_scale <= 0 or self.noise_scale <= 0:
            raise ValueError("prior_scale and noise_scale must be positive")
        d0, dM = self.arch.layer_dims[0], self.arch.layer_dims[-1]
        if self.data.n and (self.data.x.shape[1] != d0
                            or self.data.y.shape[1] != dM):
            raise DimensionMismatchError(
                f"dataset shapes {self.data.x.shape}/{self.data.y.shape} do not "
                f"match network ({d0} in, {dM} out)"
            )

    @property
    def dim(self) -> int:
        return self.arch.n_params


# ---------------------------------------------------------------------------
# forward passes


def _activate(arch: MLPArchitecture, pre: np.ndarray) -> np.ndarray:
    a = arch.activation
    if a == "relu":
        return np.maximum(pre, 0.0)
    if a == "leaky_relu":
        return np.where(pre > 0.0, pre, arch.leaky_slope * pre)
    if a == "sigmoid":
        return expit(pre)
    return np.tanh(pre)


def _activation_deriv(arch: MLPArchitecture, pre: np.ndarray,
                      hidden: np.ndarray) -> np.ndarray:
    a = arch.activation
    if a == "relu":
        d = (pre > 0.0).astype(float)
        if arch.zero_subderivative != 0.0:
            d[pre == 0.0] = arch.zero_subderivative
        return d
    if a == "leaky_relu":
        d = np.where(pre > 0.0, 1.0, arch.leaky_slope)
        d[pre == 0.0] = arch.zero_subderivative
        return d
    if a == "sigmoid":
        return hidden * (1.0 - hidden)
    return 1.0 - hidden * hidden


def _forced_hidden(arch: MLPArchitecture, pre: np.ndarray,
                   flags: np.ndarray) -> np.ndarray:
    """Branch value selected by sign flags, evaluated anywhere.

    Each flag picks the linear piece the neuron is treated as being on: +1 the
    active piece, -1 the inactive piece, 0 the kink itself (slope
    zero_subderivative through the origin).
    """
    off = arch.leaky_slope if arch.activation == "leaky_relu" else 0.0
    out = np.where(flags > 0, pre, off * pre)
    zero = flags == 0
    if zero.any():
        out = np.where(zero, arch.zero_subderivative * pre, out)
    return out


def _forced_deriv(arch: MLPArchitecture, flags: np.ndarray) -> np.ndarray:
    off = arch.leaky_slope if arch.activation == "leaky_relu" else 0.0
    out = np.where(flags > 0, 1.0, off)
    zero = flags == 0
    if zero.any():
        out = np.where(zero, arch.zero_subderivative, out)
    return out


def _split_pattern(arch: MLPArchitecture, pattern: np.ndarray, n_rows: int):
    pattern = np.asarray(pattern)
    if pattern.shape != (n_rows, arch.n_hidden):
        raise DimensionMismatchError(
            f"pattern shape {pattern.shape}, expected ({n_rows}, {arch.n_hidden})"
        )
    if not np.isin(pattern, (-1, 0, 1)).all():
        raise ValueError("pattern entries must be -1, 0 or +1")
    pieces = []
    o = 0
    for d in arch.hidden_dims:
        pieces.append(pattern[:, o:o + d])
        o += d
    return pieces


def _forward_all(arch: MLPArchitecture, params: np.ndarray, x2d: np.ndarray,
                 pattern: Optional[np.ndarray] = None):
    """Run the network on a batch, returning (preacts, hiddens, output).

    With ``pattern`` given, every hidden layer follows the branch the pattern
    dictates (values and derivatives both), which evaluates the polynomial
    piece the pattern names rather than the network itself.
    """
    layers = unflatten(arch, params)
    flags = (_split_pattern(arch, pattern, x2d.shape[0])
             if pattern is not None else None)
    h = x2d
    preacts: List[np.ndarray] = []
    hiddens: List[np.ndarray] = []
    for j, (w, b) in enumerate(layers[:-1]):
        pre = h @ w.T + b
        preacts.append(pre)
        h = (_forced_hidden(arch, pre, flags[j]) if flags is not None
             else _activate(arch, pre))
        hiddens.append(h)
    w, b = layers[-1]
    out = h @ w.T + b
    return preacts, hiddens, out


def _as_batch(arch: MLPArchitecture, x) -> Tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x2d = x[None, :] if single else x
    if x2d.ndim != 2 or x2d.shape[1] != arch.layer_dims[0]:
        raise DimensionMismatchError(
            f"input shape {x.shape} does not match d_in={arch.layer_dims[0]}"
        )
    return x2d, single


def forward(arch: MLPArchitecture, params: np.ndarray, x) -> np.ndarray:
    """Network output f_q(x). Accepts a single input (d_in,) or a batch (n, d_in)."""
    x2d, single = _as_batch(arch, x)
    _, _, out = _forward_all(arch, _check_params(arch, params), x2d)
    return out[0] if single else out


def preactivations(arch: MLPArchitecture, params: np.ndarray, x) -> np.ndarray:
    """Hidden pre-activations, concatenated layer by layer.

    Returns (n_hidden,) for a single input or (n, n_hidden) for a batch.
    """
    x2d, single = _as_batch(arch, x)
    pres, _, _ = _forward_all(arch, _check_params(arch, params), x2d)
    flat = (np.concatenate([p for p in pres], axis=1)
            if pres else np.empty((x2d.shape[0], 0)))
    return flat[0] if single else flat


def activation_pattern(arch: MLPArchitecture, params: np.ndarray, x) -> np.ndarray:
    """Sign flags of every hidden pre-activation, shape (n, n_hidden), int8.

    Entries are -1, 0 or +1; an exact zero records the kink itself.
    """
    x2d, _ = _as_batch(arch, x)
    pres = preactivations(arch, params, x2d)
    return np.sign(pres).astype(np.int8)


# ---------------------------------------------------------------------------
# posterior energy and gradients


def potential(spec: PosteriorSpec, q: np.ndarray) -> float:
    """Posterior energy U(q), prior plus squared-error data term."""
    q = _check_params(spec.arch, q)
    u = 0.5 * float(q @ q) / spec.prior_scale**2
    if spec.data.n:
        out = forward(spec.arch, q, spec.data.x)
        resid = out - spec.data.y
        u += 0.5 * float(np.sum(resid * resid)) / spec.noise_scale**2
    return u


def _backprop(spec: PosteriorSpec, q: np.ndarray,
              pattern: Optional[np.ndarray]) -> np.ndarray:
    arch = spec.arch
    g = np.empty(arch.n_params)
    g_layers = unflatten(arch, g)
    q_layers = unflatten(arch, q)

    inv_prior = 1.0 / spec.prior_scale**2
    if spec.data.n == 0:
        g[:] = q * inv_prior
        return g

    x2d = spec.data.x
    preacts, hiddens, out = _forward_all(arch, q, x2d, pattern)
    flags = (_split_pattern(arch, pattern, x2d.shape[0])
             if pattern is not None else None)

    delta = (out - spec.data.y) / spec.noise_scale**2
    inputs = [x2d] + hiddens
    for j in range(arch.n_layers - 1, -1, -1):
        gw, gb = g_layers[j]
        np.matmul(delta.T, inputs[j], out=gw)
        np.sum(delta, axis=0, out=gb)
        if j > 0:
            w, _ = q_layers[j]
            der = (_forced_deriv(arch, flags[j - 1]) if flags is not None
                   else _activation_deriv(arch, preacts[j - 1], hiddens[j - 1]))
            delta = (delta @ w) * der
    g += q * inv_prior
    return g


def grad_potential(spec: PosteriorSpec, q: np.ndarray) -> np.ndarray:
    """Gradient of U at q, with kink derivatives given by zero_subderivative."""
    q = _check_params(spec.arch, q)
    return _backprop(spec, q, None)


def grad_potential_forced(spec: PosteriorSpec, q: np.ndarray,
                          pattern: np.ndarray) -> np.ndarray:
    """Gradient of the fixed-pattern polynomial piece at q.

    The pattern (shape (n, n_hidden), entries in {-1, 0, +1}) pins each hidden
    neuron to one side of its kink for each data point; the result is the exact
    gradient of that region's polynomial, whether or not q lies in the region.
    At a point on a kink surface this yields the one-sided gradient limits.

    Only defined for piecewise-linear activations.
    """
    if not spec.arch.is_piecewise():
        raise UnsupportedActivationError(
            f"forced patterns need relu or leaky_relu, not {spec.arch.activation}"
        )
    q = _check_params(spec.arch, q)
    return _backprop(spec, q, np.asarray(pattern))


# ---------------------------------------------------------------------------
# integrator-facing wrapper


class BNNPotential(Potential):
    """Posterior energy of a PosteriorSpec as an integrator Potential.

    Kink surfaces are identified by tuples (layer, data_index, neuron_index),
    in that lexicographic order, one surface per hidden neuron and data point.
    First-hidden-layer surfaces are affine along a drift segment and get exact
    crossing roots; deeper layers are located by sign scan plus bisection.
    """

    def __init__(self, spec: PosteriorSpec):
        self.spec = spec
        self.dim = spec.arch.n_params

    def value(self, q):
        return potential(self.spec, q)

    def grad(self, q):
        return grad_potential(self.spec, q)

    def sample_position(self, rng):
        return self.spec.prior_scale * rng.standard_normal(self.dim)

    # -- kink-surface interface -------------------------------------------

    def _layer1_preacts(self, q):
        w, b = unflatten(self.spec.arch, q)[0]
        return self.spec.data.x @ w.T + b

    def drift_surfaces(self, q0, p_half, eps):
        arch = self.spec.arch
        if not arch.is_piecewise() or self.spec.data.n == 0 or arch.n_hidden == 0:
            return None
        n = self.spec.data.n
        d1 = arch.hidden_dims[0]
        ids = [(1, i, j) for i in range(n) for j in range(d1)]
        v0 = self._layer1_preacts(q0).ravel()
        v1 = self._layer1_preacts(q0 + eps * p_half).ravel()

        deep_ids = [(layer, i, j)
                    for layer in range(2, len(arch.hidden_dims) + 1)
                    for i in range(n)
                    for j in range(arch.hidden_dims[layer - 1])]
        general_eval = None
        if deep_ids:
            # Row order must match deep_ids: layer-major, then data-major.
            def general_eval(ts, q0=q0, p_half=p_half):
                cols = []
                for t in np.asarray(ts, dtype=float):
                    pres = preactivations(arch, q0 + t * p_half, self.spec.data.x)
                    parts = []
                    o = arch.hidden_dims[0]
                    for d in arch.hidden_dims[1:]:
                        parts.append(pres[:, o:o + d].ravel())
                        o += d
                    cols.append(np.concatenate(parts))
                return np.column_stack(cols)

        return DriftSurfaces(affine_ids=ids, affine_start=v0, affine_end=v1,
                             general_ids=deep_ids, general_eval=general_eval)

    def surface_value(self, surface_id, q):
        layer, i, j = surface_id
        pres = preactivations(self.spec.arch, q, self.spec.data.x[i])
        return float(pres[self.spec.arch.hidden_offset(layer) + j])

    def one_sided_gradients(self, surface_id, z, sign_before, sign_after):
        layer, i, j = surface_id
        pattern = activation_pattern(self.spec.arch, z, self.spec.data.x)
        col = self.spec.arch.hidden_offset(layer) + j
        before = pattern.copy()
        before[i, col] = sign_before
        after = pattern.copy()
        after[i, col] = sign_after
        return (grad_potential_forced(self.spec, z, before),
                grad_potential_forced(self.spec, z, after))
