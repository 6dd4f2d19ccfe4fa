"""
agent/qnetwork.py

QNetwork - small fully connected action-value network in plain numpy.

Hidden layers use the rectifier, the output layer is linear with one unit per
action. Weights are initialized uniformly in +-1/sqrt(fan_in) from a seeded
generator so a (layer_sizes, seed) pair always yields the same network.
"""

from typing import List, Optional, Sequence, Tuple

import numpy as np

from errors import NonFiniteOutput
from simsignal import NUM_ACTIONS, OBSERVATION_WIDTH, Observation, encode_observation


DEFAULT_HIDDEN_SIZES: Tuple[int, ...] = (64, 64)


def default_layer_sizes(hidden_sizes: Sequence[int] = DEFAULT_HIDDEN_SIZES) -> List[int]:
    return [OBSERVATION_WIDTH, *hidden_sizes, NUM_ACTIONS]


class QNetwork:
    """
    Multilayer perceptron mapping an encoded observation to one Q value per action.

    Parameters
    ----------
    layer_sizes : sequence of int
        Input width, hidden widths, output width.
    seed : int
        Initialization seed.
    """

    def __init__(self, layer_sizes: Sequence[int], seed: int = 0):
        if len(layer_sizes) < 2 or any(int(n) < 1 for n in layer_sizes):
            raise ValueError(f"layer_sizes must hold at least two positive widths, got {list(layer_sizes)}")
        self.layer_sizes: List[int] = [int(n) for n in layer_sizes]
        self.seed = seed

        rng = np.random.default_rng(seed)
        self.weights: List[np.ndarray] = []
        self.biases: List[np.ndarray] = []
        for fan_in, fan_out in zip(self.layer_sizes[:-1], self.layer_sizes[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            self.weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))

    @property
    def input_width(self) -> int:
        return self.layer_sizes[0]

    @property
    def output_width(self) -> int:
        return self.layer_sizes[-1]

    def parameters(self) -> List[np.ndarray]:
        """Weights and biases interleaved: W0, b0, W1, b1, ..."""
        params = []
        for w, b in zip(self.weights, self.biases):
            params.extend((w, b))
        return params

    def set_parameters(self, params: Sequence[np.ndarray]) -> None:
        if len(params) != 2 * len(self.weights):
            raise ValueError(f"Expected {2 * len(self.weights)} parameter arrays, got {len(params)}")
        for i in range(len(self.weights)):
            w, b = np.asarray(params[2 * i], dtype=float), np.asarray(params[2 * i + 1], dtype=float)
            if w.shape != self.weights[i].shape or b.shape != self.biases[i].shape:
                raise ValueError(
                    f"Layer {i}: expected shapes {self.weights[i].shape}/{self.biases[i].shape}, "
                    f"got {w.shape}/{b.shape}"
                )
            self.weights[i] = w.copy()
            self.biases[i] = b.copy()

    def copy(self) -> "QNetwork":
        clone = QNetwork.__new__(QNetwork)
        clone.layer_sizes = list(self.layer_sizes)
        clone.seed = self.seed
        clone.weights = [w.copy() for w in self.weights]
        clone.biases = [b.copy() for b in self.biases]
        return clone

    # -- forward / backward ------------------------------------------------

    def forward(self, x: np.ndarray) -> Tuple[np.ndarray, List[np.ndarray]]:
        """
        Batched forward pass.

        Returns the (batch, actions) output and the layer inputs needed by
        backward().
        """
        activations = [np.atleast_2d(np.asarray(x, dtype=float))]
        h = activations[0]
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w + b
            h = z if i == last else np.maximum(z, 0.0)
            activations.append(h)
        return h, activations

    def predict(self, x: np.ndarray) -> np.ndarray:
        out, _ = self.forward(x)
        return out

    def backward(self, activations: List[np.ndarray], grad_out: np.ndarray) -> List[np.ndarray]:
        """
        Gradients of a scalar loss given dLoss/dOutput, in parameters() order.
        """
        grads: List[np.ndarray] = [None] * (2 * len(self.weights))
        delta = grad_out
        for i in reversed(range(len(self.weights))):
            h_in = activations[i]
            grads[2 * i] = h_in.T @ delta
            grads[2 * i + 1] = delta.sum(axis=0)
            if i > 0:
                delta = (delta @ self.weights[i].T) * (activations[i] > 0.0)
        return grads


def q_values(net: QNetwork, obs: Observation, elapsed_clip_s: float = 120.0) -> np.ndarray:
    """
    Q value for every action in `obs`.

    Raises
    ------
    NonFiniteOutput
        If any value is NaN or infinite.
    """
    values = net.predict(encode_observation(obs, elapsed_clip_s))[0]
    if not np.all(np.isfinite(values)):
        raise NonFiniteOutput(f"Q-network produced non-finite values: {values}")
    return values


def build_network(hidden_sizes: Optional[Sequence[int]] = None, seed: int = 0) -> QNetwork:
    return QNetwork(default_layer_sizes(hidden_sizes or DEFAULT_HIDDEN_SIZES), seed=seed)
