"""Gaussian-process regression and UCB search over (scale, brightness).

The GP has zero prior mean and a fixed stationary kernel.  Proposals are the
UCB argmax over a dense grid, polished by coordinate search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular
from scipy.spatial.distance import cdist

from .detector import AugParams

MAX_JITTER = 1e-8


class SingularKernel(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class KernelConfig:
    family: str = "matern52"
    length_scale: float = 0.25
    signal_var: float = 0.09

    def __post_init__(self):
        if self.family not in ("matern52", "rbf"):
            raise ValueError("kernel family must be 'matern52' or 'rbf'")
        if not (self.length_scale > 0 and self.signal_var > 0):
            raise ValueError("length_scale and signal_var must be positive")

    def __call__(self, A, B) -> np.ndarray:
        A = np.atleast_2d(A)
        B = np.atleast_2d(B)
        r = cdist(A, B)
        r /= self.length_scale
        if self.family == "rbf":
            return self.signal_var * np.exp(-0.5 * r * r)
        s5 = math.sqrt(5.0) * r
        out = np.exp(-s5)
        out *= 1.0 + s5 + (5.0 / 3.0) * r * r
        out *= self.signal_var
        return out


@dataclass
class GpDataset:
    """Observations with exact duplicates merged by averaging."""

    kernel: KernelConfig = field(default_factory=KernelConfig)
    noise_var: float = 0.0225
    _sums: dict = field(default_factory=dict, repr=False)

    def add(self, x: AugParams, y: float) -> None:
        if not 0.0 <= y <= 1.0:
            raise ValueError(f"observation must lie in [0, 1], got {y}")
        key = (x.scale, x.brightness)
        s, n = self._sums.get(key, (0.0, 0))
        self._sums[key] = (s + y, n + 1)

    def __len__(self):
        return len(self._sums)

    @property
    def X(self) -> np.ndarray:
        return np.array(list(self._sums), dtype=float).reshape(-1, 2)

    @property
    def y(self) -> np.ndarray:
        return np.array([s / n for s, n in self._sums.values()], dtype=float)

    def copy(self) -> "GpDataset":
        return GpDataset(self.kernel, self.noise_var, dict(self._sums))


@dataclass
class Posterior:
    """Cached Cholesky factorization of a dataset's Gram matrix."""

    data: GpDataset
    X: np.ndarray
    L: np.ndarray | None
    alpha: np.ndarray | None

    @classmethod
    def fit(cls, data: GpDataset) -> "Posterior":
        X = data.X
        if len(X) == 0:
            return cls(data, X, None, None)
        K = data.kernel(X, X) + data.noise_var * np.eye(len(X))
        jitter = 0.0
        while True:
            try:
                L = cholesky(K + jitter * np.eye(len(X)), lower=True)
                break
            except np.linalg.LinAlgError:
                jitter = 1e-12 if jitter == 0.0 else jitter * 10.0
                if jitter > MAX_JITTER:
                    raise SingularKernel("Gram matrix is not positive definite") from None
        alpha = cho_solve((L, True), data.y)
        return cls(data, X, L, alpha)

    def predict(self, Xq) -> tuple[np.ndarray, np.ndarray]:
        Xq = np.atleast_2d(np.asarray(Xq, dtype=float))
        prior = np.full(len(Xq), self.data.kernel.signal_var)
        if self.L is None:
            return np.zeros(len(Xq)), np.sqrt(prior)
        Ks = self.data.kernel(self.X, Xq)
        mu = Ks.T @ self.alpha
        v = solve_triangular(self.L, Ks, lower=True)
        var = np.maximum(prior - (v * v).sum(0), 0.0)
        return mu, np.sqrt(var)


def gp_posterior(data: GpDataset, query: AugParams) -> tuple[float, float]:
    mu, sd = Posterior.fit(data).predict(query.as_array())
    return float(mu[0]), float(sd[0])


def ucb(data: GpDataset, query: AugParams, kappa: float) -> float:
    mu, sd = gp_posterior(data, query)
    return mu + kappa * sd


def log_marginal_likelihood(data: GpDataset) -> float:
    post = Posterior.fit(data)
    y = data.y
    return float(-0.5 * y @ post.alpha - np.log(np.diag(post.L)).sum()
                 - 0.5 * len(y) * math.log(2 * math.pi))


def refit_kernel(data: GpDataset) -> KernelConfig:
    """Grid search of length scale and signal variance by marginal likelihood."""
    best, best_ll = data.kernel, -math.inf
    for ls in np.geomspace(0.05, 1.0, 15):
        for sv in np.geomspace(0.01, 1.0, 15):
            k = KernelConfig(data.kernel.family, float(ls), float(sv))
            try:
                ll = log_marginal_likelihood(GpDataset(k, data.noise_var, data._sums))
            except SingularKernel:
                continue
            if ll > best_ll:
                best, best_ll = k, ll
    return best


@dataclass(frozen=True)
class BoConfig:
    kappa: float = 2.567
    epsilon: float = 0.01
    n_iter: int = 30
    n_init: int = 5
    success_threshold: float = 0.7
    kernel: KernelConfig = field(default_factory=KernelConfig)
    noise_var: float = 0.0225
    grid: int = 101
    refine_tol: float = 1e-4
    refit: bool = False

    def __post_init__(self):
        if self.kappa < 0 or self.epsilon < 0:
            raise ValueError("kappa and epsilon must be non-negative")
        if self.n_iter < 1 or self.n_init < 1:
            raise ValueError("n_iter and n_init must be at least 1")
        if self.grid < 2:
            raise ValueError("grid must have at least 2 points per axis")
        if not self.noise_var >= 0:
            raise ValueError("noise_var must be non-negative")


def grid_points(n: int) -> np.ndarray:
    """``n*n`` points on the unit square, scale-major (lowest S, then B, first)."""
    axis = np.linspace(0.0, 1.0, n)
    S, B = np.meshgrid(axis, axis, indexing="ij")
    return np.column_stack([S.ravel(), B.ravel()])


def grid_argmax(post: Posterior, kappa: float, n: int):
    pts = grid_points(n)
    mu, sd = post.predict(pts)
    acq = mu + kappa * sd
    i = int(np.argmax(acq))
    return pts[i], float(acq[i])


def _refine(post: Posterior, kappa: float, x0, a0: float, step: float, tol: float):
    def acq(x):
        mu, sd = post.predict(x)
        return float(mu[0] + kappa * sd[0])

    x = np.array(x0, dtype=float)
    best = a0
    while step >= tol:
        moved = False
        for dim in (0, 1):
            for sign in (-1.0, 1.0):
                cand = x.copy()
                cand[dim] = min(max(cand[dim] + sign * step, 0.0), 1.0)
                if cand[dim] == x[dim]:
                    continue
                a = acq(cand)
                if a > best:
                    x, best, moved = cand, a, True
                    break
        if not moved:
            step /= 2.0
    return x, best


def propose_next(data: GpDataset, cfg: BoConfig, post: Posterior | None = None):
    """UCB maximizer over the unit square: ``(AugParams, acquisition value)``."""
    post = post or Posterior.fit(data)
    x, a = grid_argmax(post, cfg.kappa, cfg.grid)
    x, a = _refine(post, cfg.kappa, x, a, 1.0 / (cfg.grid - 1), cfg.refine_tol)
    return AugParams(float(x[0]), float(x[1])), a


@dataclass(frozen=True)
class Observation:
    iter: int
    params: AugParams
    y: float
    acquisition: float | None  # None for the initial random samples


@dataclass
class OptimizationReport:
    history: list[Observation]
    stop_reason: str
    data: GpDataset

    @property
    def best(self) -> Observation:
        # first occurrence wins ties
        return max(self.history, key=lambda o: (o.y, -o.iter))

    @property
    def best_params(self) -> AugParams:
        return self.best.params

    @property
    def best_y(self) -> float:
        return self.best.y


def optimize(objective: Callable[[AugParams, int], float], cfg: BoConfig,
             seed: int = 0) -> OptimizationReport:
    """Run the UCB loop.

    ``objective(params, eval_id)`` returns a value in [0, 1].  Stops on the
    iteration budget, when the best acquisition falls below ``epsilon``
    (checked before spending an evaluation), or as soon as one evaluation
    reaches ``success_threshold``.  If the objective raises, the partial
    report is attached to the exception as ``partial_report``.
    """
    from .seeding import stream

    data = GpDataset(cfg.kernel, cfg.noise_var)
    report = OptimizationReport([], "budget", data)
    rng = stream(seed, "bo-init")
    it = 0
    try:
        for S, B in rng.uniform(0.0, 1.0, (cfg.n_init, 2)):
            x = AugParams(float(S), float(B))
            y = float(objective(x, it))
            data.add(x, y)
            report.history.append(Observation(it, x, y, None))
            it += 1
        for _ in range(cfg.n_iter):
            if cfg.refit and len(data) > 1:
                data.kernel = refit_kernel(data)
            x, a = propose_next(data, cfg)
            if a < cfg.epsilon:
                report.stop_reason = "converged"
                break
            y = float(objective(x, it))
            data.add(x, y)
            report.history.append(Observation(it, x, y, a))
            it += 1
            if y >= cfg.success_threshold:
                report.stop_reason = "threshold"
                break
    except Exception as exc:
        report.stop_reason = "error"
        exc.partial_report = report
        raise
    return report


OBS_HEADER = ("iter", "S", "B", "success_rate", "acquisition_at_proposal", "stop_reason")
CONTOUR_HEADER = ("S", "B", "posterior_mean", "posterior_std")


def observation_rows(report: OptimizationReport):
    last = len(report.history) - 1
    for i, o in enumerate(report.history):
        acq = "" if o.acquisition is None else o.acquisition
        yield (o.iter, o.params.scale, o.params.brightness, o.y, acq,
               report.stop_reason if i == last else "")


def contour_rows(data: GpDataset, n: int = 101):
    pts = grid_points(n)
    mu, sd = Posterior.fit(data).predict(pts)
    for (s, b), m, d in zip(pts, mu, sd):
        yield float(s), float(b), float(m), float(d)
