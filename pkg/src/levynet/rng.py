"""Seedable, counter-based random streams and the distribution samplers built on them.

A stream is identified by a ``(master_seed, stream_index)`` pair.  The pair keys
a Philox counter-based bit generator, so distinct indices give independent
streams without any coordination, and the same pair always reproduces the same
sequence of draws.
"""

import math

import numpy as np
from scipy import special as sp

__all__ = [
    "RngStream",
    "sample_std_normal",
    "sample_gamma",
    "sample_beta",
    "sample_inverse_gamma",
    "sample_half_cauchy",
    "sample_pareto",
    "sample_positive_stable",
    "sample_etbfry",
    "etbfry_tail",
    "etbfry_pdf",
]


class RngStream:
    """A reproducible random stream keyed by (master_seed, stream_index).

    The underlying generator is Philox (counter-based), keyed directly by the
    two integers, so streams can be split by index without touching each other.
    Two ``RngStream`` objects built from the same pair produce byte-identical
    sequences of draws.
    """

    def __init__(self, master_seed, stream_index=0):
        if not (0 <= int(master_seed) < 2**64):
            raise ValueError("master_seed must fit in 64 bits")
        if int(stream_index) < 0:
            raise ValueError("stream_index must be nonnegative")
        self.master_seed = int(master_seed)
        self.stream_index = int(stream_index)
        self._generator = None

    @property
    def generator(self):
        """The numpy Generator for this stream (created lazily)."""
        if self._generator is None:
            bitgen = np.random.Philox(key=np.array(
                [self.master_seed, self.stream_index], dtype=np.uint64))
            self._generator = np.random.Generator(bitgen)
        return self._generator

    def substream(self, index):
        """A fresh stream with the same master seed and the given index."""
        return RngStream(self.master_seed, index)

    def fresh(self):
        """A rewound copy of this stream (restarts the sequence)."""
        return RngStream(self.master_seed, self.stream_index)

    def __repr__(self):
        return f"RngStream(master_seed={self.master_seed}, stream_index={self.stream_index})"


def _positive(name, value):
    if not np.all(np.asarray(value) > 0):
        raise ValueError(f"{name} must be > 0, got {value}")


def sample_std_normal(rng, size=None):
    """Standard normal draw(s)."""
    return rng.generator.standard_normal(size)


def sample_gamma(shape, rate, rng, size=None):
    """Gamma(shape, rate) draw(s); mean is shape/rate."""
    _positive("shape", shape)
    _positive("rate", rate)
    return rng.generator.gamma(shape, size=size) / rate


def sample_beta(a, b, rng, size=None):
    """Beta(a, b) draw(s)."""
    _positive("a", a)
    _positive("b", b)
    return rng.generator.beta(a, b, size=size)


def sample_inverse_gamma(shape, scale, rng, size=None):
    """Inverse-gamma draw(s) with density scale^shape/Gamma(shape) x^{-shape-1} e^{-scale/x}."""
    _positive("shape", shape)
    _positive("scale", scale)
    return scale / rng.generator.gamma(shape, size=size)


def sample_half_cauchy(rng, size=None):
    """|Cauchy(0,1)| draw(s); the median is 1."""
    return np.abs(rng.generator.standard_cauchy(size))


def sample_pareto(tau, c, rng, size=None):
    """Pareto draw(s) with density tau c^tau x^{-tau-1} on (c, inf), via inversion c*u^{-1/tau}."""
    _positive("tau", tau)
    _positive("c", c)
    u = rng.generator.random(size)
    return c * u ** (-1.0 / tau)


def sample_positive_stable(alpha, c, rng, size=None):
    """Positive stable draw(s) with Laplace transform e^{-(gamma s)^alpha},
    gamma = c Gamma(1-alpha)^{1/alpha}, matching the Levy measure
    alpha c^alpha x^{-alpha-1} dx.  Kanter's representation: for U ~ Unif(0, pi)
    and E ~ Exp(1), (a(U)/E)^{(1-alpha)/alpha} has unit Laplace scale, where
    a(u) = sin((1-alpha)u) sin(alpha u)^{alpha/(1-alpha)} / sin(u)^{1/(1-alpha)}.
    The degenerate alpha = 1 case is the constant c."""
    if not (0 < alpha <= 1):
        raise ValueError("alpha must lie in (0, 1]")
    _positive("c", c)
    if alpha == 1.0:
        shape = () if size is None else size
        return np.full(shape, float(c)) if shape else float(c)
    gen = rng.generator
    u = gen.random(size) * math.pi
    e = gen.standard_exponential(size)
    a = (np.sin((1.0 - alpha) * u) * np.sin(alpha * u) ** (alpha / (1.0 - alpha))
         / np.sin(u) ** (1.0 / (1.0 - alpha)))
    gamma_scale = c * math.gamma(1.0 - alpha) ** (1.0 / alpha)
    return gamma_scale * (a / e) ** ((1.0 - alpha) / alpha)


def sample_etbfry(alpha, t, xi, rng, size=None):
    """Exponentially tilted BFRY draw(s).

    The target density is

        g(s) = alpha s^{-1-alpha} e^{-xi s} (1 - e^{-t s})
               / (Gamma(1-alpha) ((t+xi)^alpha - xi^alpha)).

    Writing s^{-1-alpha}(e^{-xi s} - e^{-(t+xi)s}) = s^{-alpha} int_xi^{t+xi} e^{-bs} db
    shows g is an exact mixture of Gamma(1-alpha, rate=b) densities with the
    mixing rate b drawn from the density proportional to b^{alpha-1} on
    (xi, t+xi).  Both stages invert in closed form, so the sampler is exact.
    """
    if not (0 < alpha < 1):
        raise ValueError("alpha must lie in (0, 1)")
    _positive("t", t)
    _positive("xi", xi)
    gen = rng.generator
    u = gen.random(size)
    b = (xi**alpha + u * ((t + xi) ** alpha - xi**alpha)) ** (1.0 / alpha)
    return gen.gamma(1.0 - alpha, size=size) / b


def _upper_gamma_neg(alpha, x):
    # Gamma(-alpha, x) for alpha in (0,1), x > 0, via the downward recurrence
    # Gamma(s, x) = (Gamma(s+1, x) - x^s e^{-x}) / s with s = -alpha.
    x = np.asarray(x, dtype=float)
    g1 = sp.gammaincc(1.0 - alpha, x) * sp.gamma(1.0 - alpha)
    return (g1 - x ** (-alpha) * np.exp(-x)) / (-alpha)


def etbfry_tail(s, alpha, t, xi):
    """Survival function P(S > s) of the exponentially tilted BFRY law.

    Integrating the density term by term gives

        T(s) = alpha [ xi^a Gamma(-a, xi s) - (t+xi)^a Gamma(-a, (t+xi) s) ]
               / (Gamma(1-a) ((t+xi)^a - xi^a)),   a = alpha,

    using the upper incomplete gamma function with negative parameter.
    """
    s = np.asarray(s, dtype=float)
    num = xi**alpha * _upper_gamma_neg(alpha, xi * s) \
        - (t + xi) ** alpha * _upper_gamma_neg(alpha, (t + xi) * s)
    den = sp.gamma(1.0 - alpha) * ((t + xi) ** alpha - xi**alpha)
    return alpha * num / den


def etbfry_pdf(s, alpha, t, xi):
    """Density of the exponentially tilted BFRY law."""
    s = np.asarray(s, dtype=float)
    den = sp.gamma(1.0 - alpha) * ((t + xi) ** alpha - xi**alpha)
    return alpha * s ** (-1.0 - alpha) * np.exp(-xi * s) * (-np.expm1(-t * s)) / den
