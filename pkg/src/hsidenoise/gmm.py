"""One-dimensional Gaussian mixture fitting by expectation-maximization.

Used to split per-band residual noise into a dense (Gaussian) component
and a wide sparse-outlier component.  All computations are in log space
so that very small variances stay stable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import DegenerateInputError, GmmFitError

_LOG_2PI = float(np.log(2.0 * np.pi))

# sigma_k^2 floor, relative to the sample range (squared below).
VARIANCE_FLOOR_REL = 1e-6
# A component has "collapsed" when its variance pins to the floor while
# carrying almost no responsibility mass.
_COLLAPSE_WEIGHT = 1e-6
_MAX_RESTARTS = 3


@dataclass
class GmmParams:
    """Parameters of a K-component 1-D Gaussian mixture.

    ``weights`` are the mixing proportions (nonnegative, sum to one),
    ``means`` and ``variances`` the per-component Gaussian parameters.
    ``loglik`` and ``n_iter`` describe the fit that produced them (zero
    for hand-built initializers).
    """

    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    loglik: float = field(default=-np.inf)
    n_iter: int = 0

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.means = np.asarray(self.means, dtype=np.float64)
        self.variances = np.asarray(self.variances, dtype=np.float64)
        k = self.weights.size
        if not (self.means.size == k and self.variances.size == k):
            raise ValueError("weights, means, variances must have equal length")
        if np.any(self.weights < 0) or abs(self.weights.sum() - 1.0) > 1e-12:
            raise ValueError("mixing proportions must be nonnegative and sum to 1")
        if np.any(self.variances <= 0):
            raise ValueError("variances must be strictly positive")

    @property
    def n_components(self) -> int:
        return int(self.weights.size)

    def to_dict(self) -> dict:
        return {
            "pi": self.weights.tolist(),
            "mu": self.means.tolist(),
            "sigma2": self.variances.tolist(),
            "loglik": float(self.loglik),
            "iters": int(self.n_iter),
        }


def _log_component_densities(a: np.ndarray, psi: GmmParams) -> np.ndarray:
    """log[pi_k * N(a_i; mu_k, sigma_k^2)] as a (K, I) array."""
    d = a[None, :] - psi.means[:, None]
    var = psi.variances[:, None]
    log_n = -0.5 * (_LOG_2PI + np.log(var) + d * d / var)
    with np.errstate(divide="ignore"):
        return np.log(psi.weights)[:, None] + log_n


def gmm_loglik(a: np.ndarray, psi: GmmParams) -> float:
    """Total log-likelihood of the sample under the mixture."""
    return float(logsumexp(_log_component_densities(a, psi), axis=0).sum())


def responsibilities(a: np.ndarray, psi: GmmParams) -> np.ndarray:
    """Posterior membership probabilities, shape (K, I); columns sum to 1."""
    lw = _log_component_densities(a, psi)
    return np.exp(lw - logsumexp(lw, axis=0, keepdims=True))


def default_init(a: np.ndarray, n_components: int = 2) -> GmmParams:
    """Robust initializer biased toward a dense-core / sparse-tail split.

    Component 1 models the interquartile core (median / scaled MAD,
    weight 0.9); the remaining components model the tails with
    geometrically wider spreads.  For K = 1 this is the sample mean and
    population variance.
    """
    a = np.asarray(a, dtype=np.float64)
    med = float(np.median(a))
    if n_components == 1:
        var = float(np.var(a))
        return GmmParams(np.ones(1), np.array([med]), np.array([max(var, 1e-300)]))
    mad = float(np.median(np.abs(a - med)))
    core_sigma = 1.4826 * mad
    rng_width = float(a.max() - a.min())
    if core_sigma <= 0:
        core_sigma = max(np.std(a), 1e-3 * rng_width, 1e-12)
    tail = a[np.abs(a - med) > 3.0 * core_sigma]
    if tail.size >= 2:
        # RMS around the shared center: the tail component is modeled as
        # N(med, sigma^2), so its spread must be measured from med, not
        # from the tail's own mean (one-sided outliers would otherwise
        # yield a narrow, even degenerate, second component).
        tail_sigma = float(np.sqrt(np.mean((tail - med) ** 2)))
        tail_sigma = max(tail_sigma, 1.5 * core_sigma)
    else:
        tail_sigma = 10.0 * core_sigma
    sigmas = [core_sigma]
    for k in range(1, n_components):
        sigmas.append(tail_sigma * 10.0 ** (k - 1) if k > 1 else tail_sigma)
    weights = np.full(n_components, 0.1 / (n_components - 1))
    weights[0] = 0.9
    return GmmParams(
        weights,
        np.full(n_components, med),
        np.square(np.array(sigmas)),
    )


def _perturb(psi: GmmParams, scale: float, rng: np.random.Generator) -> GmmParams:
    means = psi.means + rng.normal(0.0, scale, psi.means.shape)
    variances = psi.variances * np.exp(rng.normal(0.0, 0.5, psi.variances.shape))
    return GmmParams(psi.weights.copy(), means, variances)


def gmm_em_fit(
    a: np.ndarray,
    n_components: int = 2,
    init: GmmParams | None = None,
    tol: float = 1e-7,
    max_iter: int = 200,
    rng: np.random.Generator | int | None = None,
    callback=None,
) -> GmmParams:
    """Maximum-likelihood mixture fit by EM.

    Stops when the relative log-likelihood change drops below ``tol`` or
    after ``max_iter`` iterations.  A component whose variance pins to
    the floor while its weight vanishes triggers a restart from a
    perturbed initializer (at most 3); persistent collapse raises
    :class:`GmmFitError`.  ``rng`` seeds only the restart perturbations.
    ``callback(iteration, loglik, params)`` is invoked once per
    iteration with the pre-update log-likelihood.
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    if n_components < 1:
        raise ValueError("n_components must be >= 1")
    if a.size < n_components:
        raise DegenerateInputError(
            f"need at least {n_components} samples, got {a.size}"
        )
    data_range = float(a.max() - a.min())
    if data_range <= 0.0:
        raise GmmFitError("sample has zero range; mixture fit is degenerate")
    var_floor = (VARIANCE_FLOOR_REL * data_range) ** 2

    if n_components == 1:
        mu = float(a.mean())
        var = max(float(np.var(a)), var_floor)
        psi = GmmParams(np.ones(1), np.array([mu]), np.array([var]), n_iter=1)
        psi.loglik = gmm_loglik(a, psi)
        if callback is not None:
            callback(1, psi.loglik, psi)
        return psi

    rng = np.random.default_rng(rng)
    psi0 = init if init is not None else default_init(a, n_components)
    last_err = None
    for attempt in range(_MAX_RESTARTS + 1):
        try:
            return _em_loop(a, psi0 if attempt == 0 else _perturb(psi0, np.std(a), rng),
                            tol, max_iter, var_floor, callback)
        except GmmFitError as err:
            last_err = err
    raise GmmFitError(f"EM collapsed after {_MAX_RESTARTS} restarts: {last_err}")


def _em_loop(
    a: np.ndarray,
    psi: GmmParams,
    tol: float,
    max_iter: int,
    var_floor: float,
    callback=None,
) -> GmmParams:
    n = a.size
    weights = psi.weights.copy()
    means = psi.means.copy()
    variances = np.maximum(psi.variances.copy(), var_floor)
    loglik = -np.inf
    it = 0
    for it in range(1, max_iter + 1):
        cur = GmmParams(weights, means, variances)
        lw = _log_component_densities(a, cur)
        log_norm = logsumexp(lw, axis=0)
        new_loglik = float(log_norm.sum())
        if callback is not None:
            callback(it, new_loglik, cur)
        tau = np.exp(lw - log_norm[None, :])

        mass = tau.sum(axis=1)
        raw_var = np.empty_like(variances)
        new_means = np.empty_like(means)
        for k in range(means.size):
            if mass[k] <= 0:
                raw_var[k] = 0.0
                new_means[k] = means[k]
                continue
            new_means[k] = float(tau[k] @ a) / mass[k]
            d = a - new_means[k]
            raw_var[k] = float(tau[k] @ (d * d)) / mass[k]
        collapsed = (raw_var < var_floor) & (mass / n < _COLLAPSE_WEIGHT)
        if np.any(collapsed):
            raise GmmFitError(
                f"component(s) {np.flatnonzero(collapsed).tolist()} collapsed "
                f"at iteration {it}"
            )
        weights = mass / n
        means = new_means
        variances = np.maximum(raw_var, var_floor)

        if np.isfinite(loglik):
            denom = max(abs(loglik), 1.0)
            if abs(new_loglik - loglik) / denom < tol:
                loglik = new_loglik
                break
        loglik = new_loglik
    out = GmmParams(weights, means, variances, n_iter=it)
    out.loglik = gmm_loglik(a, out)
    return out


def gmm_cluster(a: np.ndarray, psi: GmmParams) -> np.ndarray:
    """Hard assignment to the highest-posterior component.

    Returns 0-based component indices; exact ties break toward the lower
    index (``argmax`` semantics).
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    return np.argmax(_log_component_densities(a, psi), axis=0)


def model_selection_score(
    a: np.ndarray,
    n_components: int,
    seed: int = 0,
    tol: float = 1e-7,
    max_iter: int = 200,
) -> tuple[float, float]:
    """(AIC, BIC) of an EM fit with ``n_components`` components.

    Both criteria have the form -2*logL + c*K_free with c = 2 for AIC
    and log(I) for BIC; K_free = 3K - 1 counts means, variances, and the
    sum-constrained proportions.  Diagnostic only: the noise pipeline
    always uses K = 2.
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    psi = gmm_em_fit(a, n_components, tol=tol, max_iter=max_iter, rng=seed)
    k_free = 3 * n_components - 1
    aic = -2.0 * psi.loglik + 2.0 * k_free
    bic = -2.0 * psi.loglik + float(np.log(a.size)) * k_free
    return aic, bic
