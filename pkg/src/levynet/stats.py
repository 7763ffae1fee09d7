"""Statistical oracles and the deterministic Monte-Carlo harness.

Everything here is replicate-indexed: a replicate i always draws from the
random substream keyed by i, so results are identical whatever the worker
count, and aggregations use pairwise summation (numpy's default) to keep them
bitwise stable under re-chunking.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace as dc_replace

import numpy as np

from . import levy
from .reporting import Check, Estimate, ExperimentReport

__all__ = [
    "ks_distance",
    "tail_exponent",
    "order_stat_cdf",
    "DecaySlopeReport",
    "small_weight_decay_check",
    "squared_output_correlation",
    "map_replicates",
    "register_experiment",
    "experiment_names",
    "run_experiment",
]


def ks_distance(samples, cdf):
    """Sup-norm distance between the empirical CDF of the samples and cdf."""
    xs = np.sort(np.asarray(samples, dtype=float))
    n = xs.size
    if n < 2:
        raise ValueError("need at least 2 samples")
    f = np.asarray(cdf(xs), dtype=float)
    grid = np.arange(1, n + 1) / n
    return float(max(np.max(np.abs(f - grid)), np.max(np.abs(f - grid + 1.0 / n))))


def tail_exponent(samples, top_fraction=0.05):
    """Hill estimate of the power-law tail exponent from the top order
    statistics, with its asymptotic standard error exponent / sqrt(k)."""
    if not 0.0 < top_fraction <= 0.2:
        raise ValueError("top_fraction must lie in (0, 0.2]")
    xs = np.sort(np.asarray(samples, dtype=float))[::-1]
    k = int(math.floor(top_fraction * xs.size))
    if k < 10:
        raise ValueError("too few tail points for a Hill estimate")
    if xs[k] <= 0:
        raise ValueError("Hill estimate requires positive tail samples")
    mean_log_excess = float(np.mean(np.log(xs[:k]) - np.log(xs[k])))
    exponent = 1.0 / mean_log_excess
    return exponent, exponent / math.sqrt(k)


def order_stat_cdf(m, k, x):
    """Limit CDF of the k-th largest variance,
    F_k(x) = e^{-rhobar(x)} sum_{i<k} rhobar(x)^i / i!; zero at x <= 0 for
    infinite-mass measures."""
    if m.kind == "trivial":
        raise ValueError("order_stat_cdf is undefined for the trivial measure")
    if k < 1:
        raise ValueError("k must be >= 1")
    x = np.asarray(x, dtype=float)
    r = np.where(x > 0, levy.tail_intensity(m, np.maximum(x, 1e-300)), np.inf)
    if m.kind != "analytic" or math.isfinite(m.total_mass()):
        r = np.where(x >= 0, np.where(x > 0, r, m.total_mass()), np.inf)
    out = np.zeros_like(r)
    finite = np.isfinite(r)
    rf = r[finite]
    partial = np.zeros_like(rf)
    term = np.ones_like(rf)
    for i in range(k):
        if i > 0:
            term = term * rf / i
        partial += term
    out[finite] = np.exp(-rf) * partial
    return out if out.shape else float(out)


@dataclass(frozen=True)
class DecaySlopeReport:
    """Log-log decay fit of ordered atoms against their rank."""
    slope: float
    std_error: float
    expected_slope: float
    power_fit_r2: float
    exponential_fit_r2: float

    @property
    def power_law_preferred(self):
        return self.power_fit_r2 >= self.exponential_fit_r2


def small_weight_decay_check(atoms, alpha_at_zero):
    """Regress log(lambda_(k)) on log(k) over the mid-range of ranks and
    compare the slope to -1/alpha (the small-atom decay of a measure whose
    tail behaves like x^{-alpha} at zero)."""
    atoms = np.asarray(getattr(atoms, "atoms", atoms), dtype=float)
    atoms = atoms[atoms > 0]
    if atoms.size < 50:
        raise ValueError("need at least 50 atoms for a decay fit")
    if not 0.0 < alpha_at_zero < 1.0:
        raise ValueError("alpha_at_zero must lie in (0, 1)")
    atoms = np.sort(atoms)[::-1]
    ks = np.arange(1, atoms.size + 1)
    lo, hi = atoms.size // 10, (9 * atoms.size) // 10
    ks, vals = ks[lo:hi], atoms[lo:hi]
    ly = np.log(vals)

    def _fit(design):
        coef, res, _, _ = np.linalg.lstsq(design, ly, rcond=None)
        pred = design @ coef
        ss_res = float(np.sum((ly - pred) ** 2))
        ss_tot = float(np.sum((ly - ly.mean()) ** 2))
        return coef, 1.0 - ss_res / ss_tot, ss_res

    x_pow = np.column_stack([np.log(ks), np.ones_like(ly)])
    coef_p, r2_pow, ss_res = _fit(x_pow)
    coef_e, r2_exp, _ = _fit(np.column_stack([ks.astype(float), np.ones_like(ly)]))
    dof = max(ly.size - 2, 1)
    sxx = float(np.sum((np.log(ks) - np.log(ks).mean()) ** 2))
    se = math.sqrt(ss_res / dof / sxx)
    return DecaySlopeReport(slope=float(coef_p[0]), std_error=se,
                            expected_slope=-1.0 / alpha_at_zero,
                            power_fit_r2=r2_pow, exponential_fit_r2=r2_exp)


def squared_output_correlation(cfg, x, p, replicates, rng):
    """Empirical correlation of the squared first two output coordinates over
    weight re-draws at hidden widths p."""
    from .network import forward, sample_network

    if cfg.d_out < 2:
        raise ValueError("squared_output_correlation needs d_out >= 2")
    cfg_p = dc_replace(cfg, widths=[int(p)] * cfg.n_hidden)
    sq = np.empty((int(replicates), 2))
    for i in range(int(replicates)):
        real = sample_network(cfg_p, rng)
        z = forward(real, cfg_p, x)[-1]
        sq[i] = z[0] ** 2, z[1] ** 2
    return float(np.corrcoef(sq[:, 0], sq[:, 1])[0, 1])


# ---------------------------------------------------------------------------
# deterministic experiment harness
# ---------------------------------------------------------------------------

def map_replicates(fn, replicates, workers=1):
    """Evaluate fn(i) for i = 0..replicates-1, fanning across threads, and
    return the results in replicate order (independent of worker count)."""
    n = int(replicates)
    if workers is None or workers <= 1 or n <= 1:
        return [fn(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=int(workers)) as pool:
        return list(pool.map(fn, range(n)))


_EXPERIMENTS = {}


def register_experiment(name):
    def deco(fn):
        _EXPERIMENTS[name] = fn
        return fn
    return deco


def experiment_names():
    from . import experiments  # noqa: F401  (populates the registry)

    return sorted(_EXPERIMENTS)


def run_experiment(spec, master_seed, replicates, worker_count=1):
    """Dispatch a registered experiment.  spec is either a name or a dict with
    a "name" key plus configuration; the result is deterministic in
    (spec, master_seed, replicates) whatever worker_count is."""
    from . import experiments  # noqa: F401  (populates the registry)

    if isinstance(spec, str):
        spec = {"name": spec}
    name = spec.get("name")
    if name not in _EXPERIMENTS:
        raise ValueError(f"unknown experiment {name!r}; "
                         f"known: {', '.join(experiment_names())}")
    config = {k: v for k, v in spec.items() if k != "name"}
    report = _EXPERIMENTS[name](config, int(master_seed), int(replicates),
                                int(worker_count))
    report.master_seed = int(master_seed)
    report.replicate_count = int(replicates)
    return report
