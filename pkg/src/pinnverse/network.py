"""MLP surrogate for ODE/PDE solution fields.

The network maps (x, t) or plain t to an m-dimensional state vector. Two
hidden tanh layers of width 20 are the default architecture. Raw inputs
are affinely mapped to [-1, 1] before the first layer (recorded in the
spec so input derivatives can be chain-ruled exactly); the spatial
coordinate may instead be lifted through a fixed sinusoidal Fourier
embedding to resolve sharp gradients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "FourierConfig",
    "NetworkSpec",
    "NetworkParams",
    "default_fourier",
    "fourier_embed",
    "init_params",
    "forward",
    "layer_dims",
    "feature_dim",
    "param_arrays",
]


@dataclass(frozen=True)
class FourierConfig:
    """Fixed sinusoidal embedding of the spatial coordinate.

    ``frequencies`` are angular frequencies; x maps to the 2K features
    [sin(w_1 x), cos(w_1 x), ..., sin(w_K x), cos(w_K x)].
    """

    frequencies: tuple[float, ...]

    def __post_init__(self):
        if len(self.frequencies) < 1:
            raise ValueError("FourierConfig needs at least one frequency")

    @property
    def num_frequencies(self) -> int:
        return len(self.frequencies)


def default_fourier(x_range: tuple[float, float], num_frequencies: int = 10) -> FourierConfig:
    """Integer harmonics of the domain: w_k = k*pi / half-width, k = 1..K."""
    half = 0.5 * (x_range[1] - x_range[0])
    return FourierConfig(tuple(k * math.pi / half for k in range(1, num_frequencies + 1)))


@dataclass(frozen=True)
class NetworkSpec:
    """Architecture and input handling of the surrogate.

    ``input_ranges`` holds one (lo, hi) interval per raw input coordinate,
    ordered (x, t) for PDEs and (t,) for ODEs; each coordinate is mapped
    to [-1, 1] before entering the first layer. When ``fourier`` is set
    the spatial coordinate bypasses normalization and enters through the
    sinusoidal embedding instead, concatenated with normalized time.
    """

    input_dim: int
    output_dim: int
    input_ranges: tuple[tuple[float, float], ...]
    hidden_layers: int = 2
    hidden_width: int = 20
    activation: str = "tanh"
    fourier: FourierConfig | None = None

    def __post_init__(self):
        if self.input_dim not in (1, 2):
            raise ValueError("input_dim must be 1 (t) or 2 (x, t)")
        if len(self.input_ranges) != self.input_dim:
            raise ValueError("need one input range per input coordinate")
        if self.activation != "tanh":
            raise ValueError("only tanh hidden activations are supported")
        if self.fourier is not None and self.input_dim != 2:
            raise ValueError("Fourier features apply to the spatial coordinate only")

    def normalization(self, coord: int) -> tuple[float, float]:
        """Return (scale, shift) with x_hat = scale * x + shift in [-1, 1]."""
        lo, hi = self.input_ranges[coord]
        scale = 2.0 / (hi - lo)
        return scale, -1.0 - scale * lo


@dataclass
class NetworkParams:
    """Trainable state: per-layer weights/biases plus optional DE-parameter carrier.

    The carrier holds raw DE parameters for constrained training or their
    log-transform for the exp-parameterized baseline; ``None`` when DE
    parameters are managed elsewhere.
    """

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    de_params: np.ndarray | None = None

    def copy(self) -> "NetworkParams":
        return NetworkParams(
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            None if self.de_params is None else self.de_params.copy(),
        )

    @property
    def n_scalars(self) -> int:
        n = sum(w.size for w in self.weights) + sum(b.size for b in self.biases)
        if self.de_params is not None:
            n += self.de_params.size
        return n


def feature_dim(spec: NetworkSpec) -> int:
    if spec.input_dim == 1:
        return 1
    if spec.fourier is not None:
        return 2 * spec.fourier.num_frequencies + 1
    return 2


def layer_dims(spec: NetworkSpec) -> list[int]:
    return [feature_dim(spec)] + [spec.hidden_width] * spec.hidden_layers + [spec.output_dim]


def init_params(spec: NetworkSpec, seed: int) -> NetworkParams:
    """Glorot-uniform weights (bound sqrt(6/(fan_in+fan_out))), zero biases."""
    rng = np.random.default_rng(seed)
    dims = layer_dims(spec)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return NetworkParams(weights, biases)


def fourier_embed(x: np.ndarray | float, cfg: FourierConfig) -> np.ndarray:
    """Embed x as [sin(w_1 x), cos(w_1 x), ..., sin(w_K x), cos(w_K x)]."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    feats = np.empty((x.shape[0], 2 * cfg.num_frequencies))
    for k, w in enumerate(cfg.frequencies):
        feats[:, 2 * k] = np.sin(w * x)
        feats[:, 2 * k + 1] = np.cos(w * x)
    return feats


def _features(spec: NetworkSpec, x, t) -> np.ndarray:
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if spec.input_dim == 1:
        a, b = spec.normalization(0)
        return (a * t + b)[:, None]
    x = np.atleast_1d(np.asarray(x, dtype=float))
    a_t, b_t = spec.normalization(1)
    t_hat = a_t * t + b_t
    if spec.fourier is not None:
        return np.column_stack([fourier_embed(x, spec.fourier), t_hat])
    a_x, b_x = spec.normalization(0)
    return np.column_stack([a_x * x + b_x, t_hat])


def forward(spec: NetworkSpec, params: NetworkParams, x, t) -> np.ndarray:
    """Evaluate the network; returns an (n, output_dim) array.

    Pure function of (params, inputs); the tape-based jet evaluation in
    :mod:`pinnverse.jets` reproduces these values exactly.
    """
    h = _features(spec, x, t)
    for W, b in zip(params.weights[:-1], params.biases[:-1]):
        h = np.tanh(h @ W + b)
    return h @ params.weights[-1] + params.biases[-1]


def param_arrays(params: NetworkParams) -> list[np.ndarray]:
    """Flat list view of all trainable arrays, in a fixed order."""
    out: list[np.ndarray] = []
    for W, b in zip(params.weights, params.biases):
        out.append(W)
        out.append(b)
    if params.de_params is not None:
        out.append(params.de_params)
    return out
