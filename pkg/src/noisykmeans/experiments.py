"""Simulation harness: mixture samplers, risk scoring, bandwidth tuning
and replicated comparisons of the noisy and Lloyd fits.

Randomness uses ``numpy.random.Generator`` with the PCG64 bit generator
(normal draws via numpy's ziggurat implementation).  Replication ``r`` of
a scenario with base seed ``s`` draws its sample from seed ``s + r`` and
its auxiliary stream (initial centers, tuning sample) from
``SeedSequence([s, r])``, so summaries are reproducible bit for bit for a
given (config, R) and individual replications can be re-run in isolation.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cluster import Codebook, assign_points, lloyd_kmeans_fit, noisy_kmeans_fit
from .grid import BoundsPolicy, _as_points
from .spectral import Bandwidth, NoiseModel

__all__ = [
    "FAILURE_THRESHOLD",
    "LabeledSample",
    "ReplicationRecord",
    "ReplicationSummary",
    "RiskStats",
    "ScenarioConfig",
    "bandwidth_candidates",
    "clustering_risk",
    "mod2_component_means",
    "run_replications",
    "sample_mod1",
    "sample_mod2",
    "tune_bandwidth",
]

FAILURE_THRESHOLD = 0.2

_MOD1_MEANS = np.array([[0.0, 0.0], [5.0, 0.0]])


def _check_u(u: int) -> int:
    if not isinstance(u, (int, np.integer)) or isinstance(u, bool) or not 1 <= u <= 10:
        raise ValueError("u must be in 1..10")
    return int(u)


def mod2_component_means(u: int) -> np.ndarray:
    """Component means of the three-cluster family at separation level u.

    The two off-origin components sit at (a, b) and (b, a) with
    a = 15 - (u - 1) / 2 and b = 5 + (u - 1) / 2, so raising u drags them
    toward each other along the diagonal.
    """
    _check_u(u)
    a = 15.0 - (u - 1) / 2.0
    b = 5.0 + (u - 1) / 2.0
    return np.array([[0.0, 0.0], [a, b], [b, a]])


@dataclass(frozen=True)
class LabeledSample:
    """Latent points ``x``, noisy observations ``z`` and component labels ``y``."""

    x: np.ndarray
    z: np.ndarray
    y: np.ndarray
    seed: int

    def __post_init__(self) -> None:
        x = np.asarray(self.x, dtype=float)
        z = np.asarray(self.z, dtype=float)
        y = np.asarray(self.y)
        if x.shape != z.shape or x.ndim != 2 or x.shape[1] != 2:
            raise ValueError(f"x and z must share shape (n, 2), got {x.shape}, {z.shape}")
        if y.shape != (x.shape[0],):
            raise ValueError(f"y must have shape ({x.shape[0]},), got {y.shape}")
        for arr in (x, z, y):
            arr.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return int(self.x.shape[0])


def _draw_mixture(
    rng: np.random.Generator, means: np.ndarray, n: int
) -> tuple[np.ndarray, np.ndarray]:
    """Equal-weight gaussian mixture with identity covariance per component."""
    k = len(means)
    y = rng.integers(0, k, size=n)
    x = means[y] + rng.standard_normal((n, 2))
    return x, y


def _sample_family(
    u: int, n: int, seed: int, means: np.ndarray, noise_std: tuple[float, float]
) -> LabeledSample:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    x, y = _draw_mixture(rng, means, n)
    eps = rng.standard_normal((n, 2)) * np.asarray(noise_std)
    return LabeledSample(x, x + eps, y, seed)


def sample_mod1(u: int, n: int = 100, seed: int = 0) -> LabeledSample:
    """Two gaussian components at (0, 0) and (5, 0), noise only on axis 2.

    The noise is centered gaussian with variance u on the second axis and
    none on the first, so ``z[:, 0] == x[:, 0]`` exactly.
    """
    _check_u(u)
    return _sample_family(u, n, seed, _MOD1_MEANS, (0.0, float(np.sqrt(u))))


def sample_mod2(u: int, n: int = 180, seed: int = 0) -> LabeledSample:
    """Three gaussian components closing in on each other as u grows,
    observed with isotropic gaussian noise of variance 5 per axis."""
    means = mod2_component_means(u)
    s = float(np.sqrt(5.0))
    return _sample_family(u, n, seed, means, (s, s))


@dataclass(frozen=True)
class ScenarioConfig:
    """One simulation scenario: family, separation level, sample size, seed."""

    family: str
    u: int
    n: int | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.family not in ("mod1", "mod2"):
            raise ValueError(f"family must be 'mod1' or 'mod2', got {self.family!r}")
        _check_u(self.u)
        if self.seed < 0:
            raise ValueError(f"seed must be >= 0, got {self.seed}")
        n = self.n if self.n is not None else (100 if self.family == "mod1" else 180)
        if n < self.k:
            raise ValueError(f"n must be at least k={self.k}, got {n}")
        object.__setattr__(self, "n", int(n))

    @property
    def k(self) -> int:
        return 2 if self.family == "mod1" else 3

    def noise_model(self) -> NoiseModel:
        if self.family == "mod1":
            return NoiseModel.gaussian(0.0, float(np.sqrt(self.u)))
        return NoiseModel.gaussian(float(np.sqrt(5.0)), float(np.sqrt(5.0)))

    def component_means(self) -> np.ndarray:
        if self.family == "mod1":
            return _MOD1_MEANS.copy()
        return mod2_component_means(self.u)

    def sample(self, seed: int) -> LabeledSample:
        if self.family == "mod1":
            return sample_mod1(self.u, self.n, seed)
        return sample_mod2(self.u, self.n, seed)


def clustering_risk(codebook: Codebook, sample: LabeledSample) -> float:
    """Fraction of latent points whose cluster disagrees with their label,
    minimized over relabelings of the clusters.

    Assignment is by nearest center applied to the latent ``x``, not the
    noisy ``z``: the score measures recovery of the clean geometry.  The
    exhaustive relabeling search limits k to 4.
    """
    k = codebook.k
    if k > 4:
        raise ValueError(f"risk matching supports k <= 4, got k={k}")
    y = np.asarray(sample.y)
    if y.min() < 0 or y.max() >= k:
        raise ValueError("labels must lie in 0..k-1")
    pred = assign_points(sample.x, codebook)
    best = 1.0
    for perm in itertools.permutations(range(k)):
        relabel = np.asarray(perm)
        best = min(best, float(np.mean(relabel[pred] != y)))
    return best


def bandwidth_candidates(
    obs: np.ndarray, per_axis: int = 20, lo: float = 0.1, hi: float = 10.0
) -> list[Bandwidth]:
    """Log-spaced per-axis bandwidth grid around the scale ``std * n^(-1/6)``.

    Returns the full cross product in lexicographic order (axis-1 value
    major).  Axis standard deviations use the population convention
    (ddof 0).
    """
    z = _as_points(obs, "obs")
    if per_axis < 1:
        raise ValueError(f"per_axis must be >= 1, got {per_axis}")
    if not 0.0 < lo <= hi:
        raise ValueError(f"need 0 < lo <= hi, got {(lo, hi)}")
    base = z.std(axis=0) * len(z) ** (-1.0 / 6.0)
    if not (base > 0.0).all():
        raise ValueError("degenerate observations: zero spread on an axis")
    axes = [np.geomspace(lo * b, hi * b, per_axis) for b in base]
    return [Bandwidth(a, b) for a in axes[0] for b in axes[1]]


def tune_bandwidth(
    obs: np.ndarray,
    model: NoiseModel,
    candidates: list[Bandwidth],
    k: int,
    init: Codebook,
    tuning_points: np.ndarray,
    counts: tuple[int, int] = (128, 128),
    policy: BoundsPolicy | None = None,
    max_iter: int = 100,
    tol_factor: float = 1e-6,
) -> Bandwidth:
    """Pick the candidate whose fitted centers best quantize a clean sample.

    For every candidate bandwidth the noisy fit is run from the same
    ``init``; the score is the summed squared distance of the tuning
    points (drawn from the latent law) to the fitted centers.  Ties and
    duplicates resolve to the lexicographically smallest bandwidth, and
    the outcome does not depend on the order of ``candidates``.
    """
    if not candidates:
        raise ValueError("candidates must be nonempty")
    tun = _as_points(tuning_points, "tuning_points")
    best_bw: Bandwidth | None = None
    best_score = np.inf
    for bw in sorted(candidates, key=lambda b: b.pair):
        fit = noisy_kmeans_fit(
            obs, model, bw, k, init,
            counts=counts, policy=policy, max_iter=max_iter, tol_factor=tol_factor,
        )
        c = fit.codebook.centers
        d2 = np.square(tun[:, None, 0] - c[None, :, 0]) + np.square(
            tun[:, None, 1] - c[None, :, 1]
        )
        score = float(d2.min(axis=1).sum())
        if score < best_score:
            best_score = score
            best_bw = bw
    return best_bw


@dataclass(frozen=True)
class RiskStats:
    """Risk summary over replications for one algorithm."""

    mean: float
    sd: float
    ci_lo: float
    ci_hi: float
    failures: int


@dataclass(frozen=True)
class ReplicationRecord:
    """Everything one replication consumed and produced."""

    replication: int
    sample_seed: int
    init: Codebook
    bandwidth: Bandwidth
    risk_lloyd: float
    risk_noisy: float


@dataclass(frozen=True)
class ReplicationSummary:
    """Replicated comparison of the two algorithms on one scenario."""

    config: ScenarioConfig
    R: int
    records: tuple[ReplicationRecord, ...]
    lloyd: RiskStats
    noisy: RiskStats

    def risks(self, algorithm: str) -> np.ndarray:
        if algorithm == "lloyd":
            return np.array([r.risk_lloyd for r in self.records])
        if algorithm == "noisy":
            return np.array([r.risk_noisy for r in self.records])
        raise ValueError(f"algorithm must be 'lloyd' or 'noisy', got {algorithm!r}")


def _risk_stats(risks: np.ndarray, R: int) -> RiskStats:
    mean = float(risks.mean())
    sd = float(risks.std(ddof=0))
    half = 1.96 * sd / np.sqrt(R)
    failures = int(np.sum(risks > FAILURE_THRESHOLD))
    return RiskStats(mean, sd, float(mean - half), float(mean + half), failures)


def run_replications(
    config: ScenarioConfig,
    R: int,
    bandwidth_policy: Bandwidth | str = "tuned",
    counts: tuple[int, int] = (128, 128),
    policy: BoundsPolicy | None = None,
    threads: int = 1,
    tuning_size: int = 1000,
    candidates_per_axis: int = 20,
) -> ReplicationSummary:
    """Run R independent replications of a scenario and score both fits.

    Each replication draws a fresh sample, picks k distinct observed
    points as the shared initial codebook for both algorithms, fits Lloyd
    on the observations and the noisy variant on the deconvolution
    density (with the scenario's true noise model), and scores both by
    clustering risk on the latent points.  ``bandwidth_policy`` is either
    a fixed ``Bandwidth`` or the string ``"tuned"`` for the per-replication
    grid search.  ``threads`` only parallelizes across replications; the
    results are identical for any thread count.
    """
    if R < 1:
        raise ValueError(f"R must be >= 1, got {R}")
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")
    if isinstance(bandwidth_policy, str) and bandwidth_policy != "tuned":
        raise ValueError(f"bandwidth_policy must be a Bandwidth or 'tuned', got {bandwidth_policy!r}")
    k = config.k
    model = config.noise_model()

    def one(r: int) -> ReplicationRecord:
        sample = config.sample(config.seed + r)
        aux = np.random.default_rng(np.random.SeedSequence([config.seed, r]))
        idx = aux.choice(sample.n, size=k, replace=False)
        init = Codebook(sample.z[idx])
        lloyd = lloyd_kmeans_fit(sample.z, k, init)
        if isinstance(bandwidth_policy, Bandwidth):
            bw = bandwidth_policy
        else:
            tun, _ = _draw_mixture(aux, config.component_means(), tuning_size)
            cands = bandwidth_candidates(sample.z, candidates_per_axis)
            bw = tune_bandwidth(
                sample.z, model, cands, k, init, tun, counts=counts, policy=policy
            )
        noisy = noisy_kmeans_fit(sample.z, model, bw, k, init, counts=counts, policy=policy)
        return ReplicationRecord(
            replication=r,
            sample_seed=config.seed + r,
            init=init,
            bandwidth=bw,
            risk_lloyd=clustering_risk(lloyd.codebook, sample),
            risk_noisy=clustering_risk(noisy.codebook, sample),
        )

    if threads == 1:
        records = tuple(one(r) for r in range(R))
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = tuple(pool.map(one, range(R)))

    return ReplicationSummary(
        config=config,
        R=R,
        records=records,
        lloyd=_risk_stats(np.array([r.risk_lloyd for r in records]), R),
        noisy=_risk_stats(np.array([r.risk_noisy for r in records]), R),
    )
