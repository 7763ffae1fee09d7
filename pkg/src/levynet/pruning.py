"""Node pruning of finite networks and the associated error analysis.

Two threshold families: epsilon-pruning removes hidden nodes whose variance
satisfies lambda <= eps, and kappa-pruning removes nodes with
lambda <= lambda_(floor(kappa p)), the floor(kappa p)-th largest order
statistic (ties are pruned together, so a layer of identical variances is
pruned entirely).  A third rule ranks nodes by the squared norm of their
outgoing weights instead of by lambda, the practical criterion for iid
Gaussian layers.
"""

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from . import levy
from .network import NetworkRealization, forward, variance_recursion

__all__ = [
    "PruningRule",
    "prune",
    "paired_pruning_error",
    "epsilon_sweep_error",
    "epsilon_error_bound",
    "compressibility_ratio",
]


@dataclass(frozen=True)
class PruningRule:
    """kind in {"epsilon", "kappa", "outgoing_norm_kappa"} with the matching
    threshold parameter (eps >= 0, or kappa in (0, 1))."""

    kind: str
    eps: float = None
    kappa: float = None

    def __post_init__(self):
        if self.kind == "epsilon":
            if self.eps is None or self.eps < 0:
                raise ValueError("epsilon rule needs eps >= 0")
        elif self.kind in ("kappa", "outgoing_norm_kappa"):
            if self.kappa is None or not 0.0 < self.kappa < 1.0:
                raise ValueError(f"{self.kind} rule needs kappa in (0, 1)")
        else:
            raise ValueError(f"unknown pruning rule kind {self.kind!r}")


def _kth_largest(values, k):
    """The k-th largest entry (k >= 1)."""
    return np.sort(values)[::-1][k - 1]


def _keep_mask(real, cfg, rule, layer):
    """Boolean keep-mask over the hidden nodes of hidden layer `layer` (1-based
    into real.lambdas)."""
    lam = real.lambdas[layer]
    p = lam.size
    if rule.kind == "epsilon":
        return lam > rule.eps
    if rule.kind == "outgoing_norm_kappa":
        v_out = real.V[layer]  # (p, p_next), already carries sigma_v
        scores = lam * (v_out ** 2).sum(axis=1)
    else:
        scores = lam
    k = int(math.floor(rule.kappa * p))
    if k < 1:
        warnings.warn("floor(kappa * p) = 0: the kappa rule keeps every node",
                      stacklevel=3)
        return np.ones(p, dtype=bool)
    return scores > _kth_largest(scores, k)


def prune(real, cfg, rule):
    """A copy of the realization with pruned hidden nodes' variances zeroed,
    so the pruned forward pass is the masked recursion sqrt(lambda) 1{keep}."""
    lambdas = [real.lambdas[0].copy()]
    for layer in range(1, len(real.lambdas)):
        mask = _keep_mask(real, cfg, rule, layer)
        lambdas.append(np.where(mask, real.lambdas[layer], 0.0))
    return replace(real, lambdas=lambdas)


def paired_pruning_error(cfg, x, rule, replicates, rng):
    """Monte-Carlo estimate of E[(Z^{(l)} - Z*^{(l)})^2] per layer, driving the
    pruned and unpruned networks with the same realization.  Returns
    (means, std_errors), arrays over layers 1..L+1 averaged over output
    coordinates."""
    from .network import sample_network

    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    n_layers = cfg.n_hidden + 1
    acc = np.zeros(n_layers)
    acc2 = np.zeros(n_layers)
    for _ in range(int(replicates)):
        real = sample_network(cfg, rng)
        zs = forward(real, cfg, x)
        zs_star = forward(prune(real, cfg, rule), cfg, x)
        gaps = np.array([float(np.mean((z - zstar) ** 2))
                         for z, zstar in zip(zs, zs_star)])
        acc += gaps
        acc2 += gaps ** 2
    mean = acc / replicates
    var = np.maximum(acc2 / replicates - mean ** 2, 0.0)
    se = np.sqrt(var / replicates)
    return mean, se


def epsilon_sweep_error(cfg, x, eps_grid, replicates, rng):
    """Final-layer paired pruning error across an epsilon grid, reusing each
    sampled realization for every threshold.  The unpruned network and all
    thresholds are propagated together as rows of one batch, applying each
    threshold's keep-mask before every hidden-to-next-layer product.  Returns
    (means, std_errors) aligned with eps_grid."""
    from .network import sample_network

    x = np.asarray(x, dtype=float)
    eps_grid = np.asarray(eps_grid, dtype=float)
    n_eps = eps_grid.size
    phi = cfg.activation
    acc = np.zeros(n_eps)
    acc2 = np.zeros(n_eps)
    for _ in range(int(replicates)):
        real = sample_network(cfg, rng)
        # row 0 carries the unpruned network, rows 1.. the eps thresholds
        h = np.tile(x, (n_eps + 1, 1))
        for l in range(1, cfg.n_hidden + 2):
            if l > 1:
                lam = real.lambdas[l - 1]
                mask = lam[None, :] > eps_grid[:, None]
                h[1:] *= mask
            z = h @ real.weight(l) + real.B[l - 1]
            h = phi(z)
        gaps = np.mean((z[1:] - z[0]) ** 2, axis=1)
        acc += gaps
        acc2 += gaps ** 2
    mean = acc / replicates
    var = np.maximum(acc2 / replicates - mean ** 2, 0.0)
    return mean, np.sqrt(var / replicates)


def epsilon_error_bound(cfg, x, eps, alpha, delta):
    """Analytic epsilon-pruning error bounds D(l) eps^{1-(alpha+delta)} for
    l = 1..L, where alpha is the index of regular variation of the shared
    Levy measure at zero and delta in (0, 1-alpha):

        D(l) = (sigma_v^2 C_Lip^2 / (1-(alpha+delta)))
               * sum_{i=0}^{l-1} (sigma_v^2 C_Lip^2 M1)^i U^{(l-i)}

    The incomputable supremum U^{(l)} over widths is replaced by twice the
    expected-conditional-variance chain (exact form of the simple
    upper bound when sigma_b = 0)."""
    if not 0.0 < delta < 1.0 - alpha:
        raise ValueError("delta must lie in (0, 1 - alpha)")
    if eps <= 0:
        raise ValueError("eps must be > 0")
    c_lip = cfg.activation.c_lip
    sv2c = cfg.sigma_v ** 2 * c_lip ** 2
    u = 2.0 * variance_recursion(cfg, x)  # U^{(1..L+1)}; only 1..L used
    m1s = [m.limit.location_a + levy.moment(m.limit.measure, 1)
           for m in cfg.variance_models]
    bounds = []
    for l in range(1, cfg.n_hidden + 1):
        total = 0.0
        prod = 1.0
        for i in range(l):
            total += prod * u[l - 1 - i]
            if i < l - 1:
                prod *= sv2c * m1s[l - 2 - i]
        d_l = sv2c / (1.0 - (alpha + delta)) * total
        bounds.append(d_l * eps ** (1.0 - (alpha + delta)))
    return np.array(bounds)


def compressibility_ratio(values, kappa):
    """Mass fraction carried by the values at or below the floor(kappa p)-th
    largest: sum(v 1{v <= v_(floor(kappa p))}) / sum(v).  An all-zero vector
    returns 0."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("values must be nonempty")
    if np.any(values < 0):
        raise ValueError("values must be nonnegative")
    if not 0.0 < kappa < 1.0:
        raise ValueError("kappa must lie in (0, 1)")
    total = values.sum()
    if total == 0.0:
        return 0.0
    k = int(math.floor(kappa * values.size))
    if k < 1:
        raise ValueError("floor(kappa * p) must be >= 1")
    thr = _kth_largest(values, k)
    return float(values[values <= thr].sum() / total)
