"""Activation functions and the constants attached to them.

Linear, ReLU and leaky ReLU are positive homogeneous (phi(g x) = g phi(x) for
g > 0), which is what the single-input limit machinery requires.  Tanh is kept
for finite forward passes and multi-input kernel sampling only; it satisfies a
polynomial envelope |phi(z)| <= 1.
"""

import numpy as np

__all__ = ["ActivationKind", "LINEAR", "RELU", "TANH", "leaky_relu"]


class ActivationKind:
    """An activation with its name, callable, and analytic constants.

    Attributes
    ----------
    homogeneous : whether phi(g x) = g phi(x) for g > 0.
    c_phi : E[phi(Z)^2] for Z ~ N(0,1) (only meaningful when homogeneous).
    c_lip : max(|phi(1)|, |phi(-1)|), the Lipschitz constant of a
        1-homogeneous activation.
    """

    def __init__(self, name, fn, homogeneous, c_phi, beta=None):
        self.name = name
        self.fn = fn
        self.homogeneous = homogeneous
        self.c_phi = c_phi
        self.beta = beta

    def __call__(self, x):
        return self.fn(x)

    @property
    def c_lip(self):
        return max(abs(float(self.fn(1.0))), abs(float(self.fn(-1.0))))

    def __repr__(self):
        if self.beta is not None:
            return f"ActivationKind({self.name}, beta={self.beta})"
        return f"ActivationKind({self.name})"

    def __eq__(self, other):
        return (isinstance(other, ActivationKind)
                and self.name == other.name and self.beta == other.beta)

    def __hash__(self):
        return hash((self.name, self.beta))


LINEAR = ActivationKind("linear", lambda x: np.asarray(x, dtype=float),
                        homogeneous=True, c_phi=1.0)
RELU = ActivationKind("relu", lambda x: np.maximum(np.asarray(x, dtype=float), 0.0),
                      homogeneous=True, c_phi=0.5)
TANH = ActivationKind("tanh", np.tanh, homogeneous=False, c_phi=None)


def leaky_relu(beta):
    """Leaky ReLU with negative-side slope beta > 0."""
    if beta <= 0:
        raise ValueError("leaky ReLU slope must be > 0")

    def fn(x):
        x = np.asarray(x, dtype=float)
        return np.where(x > 0, x, beta * x)

    return ActivationKind("leaky_relu", fn, homogeneous=True,
                          c_phi=0.5 * (1.0 + beta * beta), beta=beta)


def activation_from_name(name, beta=None):
    if name == "linear":
        return LINEAR
    if name == "relu":
        return RELU
    if name == "tanh":
        return TANH
    if name == "leaky_relu":
        return leaky_relu(beta if beta is not None else 0.01)
    raise ValueError(f"unknown activation {name!r}")
