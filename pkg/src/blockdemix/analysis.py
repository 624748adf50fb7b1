"""Curvature diagnostics for the demixing loss and convergence-rate calculators."""

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.sparse.linalg import LinearOperator, eigsh

from .errors import ConfigError, DomainError, NumericalError
from .links import LinkSpec, eval_link
from .model import StackedCoefficients, SuperpositionInstance
from .operators import BasisPair
from .seeding import as_generator
from .solvers import default_step, project_stacked

# full eigendecomposition up to this many restricted coordinates
DENSE_EIG_LIMIT = 512
# 1 <= M/m <= 2/sqrt(3) is required for the contraction guarantee
CONDITION_LIMIT = 2.0 / math.sqrt(3.0)


@dataclass(frozen=True)
class SpectralEstimate:
    level: int
    m_hat: float
    M_hat: float
    trials: int
    points: str

    def to_dict(self) -> dict:
        return asdict(self)


def restricted_columns(instance: SuperpositionInstance, bases: BasisPair, support):
    """``(X Gamma)[:, support]`` as a dense m x |support| matrix."""
    return instance.design.matvec(bases.columns(np.asarray(support, dtype=np.int64)))


def restricted_hessian(t, support, instance: SuperpositionInstance, bases: BasisPair,
                       link: LinkSpec, A=None) -> np.ndarray:
    """``(1/m) A^T diag(g'(X Gamma t)) A`` with ``A = (X Gamma)[:, support]``."""
    support = np.asarray(support, dtype=np.int64)
    if support.size > 2 * bases.n or np.any((support < 0) | (support >= 2 * bases.n)):
        raise ConfigError("support must index into [0, 2n)")
    t = t.t if isinstance(t, StackedCoefficients) else np.asarray(t, dtype=float)
    if A is None:
        A = restricted_columns(instance, bases, support)
    w = eval_link(link, "derivative", instance.design.matvec(bases.synth(t)))
    H = A.T @ (w[:, None] * A) / instance.design.m
    return 0.5 * (H + H.T)


def _extremal_eigs(H):
    if H.shape[0] <= DENSE_EIG_LIMIT:
        ev = np.linalg.eigvalsh(H)
        return float(ev[0]), float(ev[-1])
    op = LinearOperator(H.shape, matvec=lambda v: H @ v, dtype=float)
    hi = eigsh(op, k=1, which="LA", return_eigenvectors=False)[0]
    lo = eigsh(op, k=1, which="SA", return_eigenvectors=False)[0]
    return float(lo), float(hi)


def random_support(n: int, level: int, b: int, rng) -> np.ndarray:
    """Union of two block supports, one per half, holding ``level`` coordinates
    in total (``level/2`` per half, rounded up to whole blocks)."""
    if level >= 2 * n:
        return np.arange(2 * n)
    per_half = math.ceil(level / 2 / b)
    nb = n // b
    per_half = min(per_half, nb)
    parts = []
    for offset in (0, n):
        blocks = np.sort(rng.choice(nb, size=per_half, replace=False))
        parts.append((blocks[:, None] * b + np.arange(b)[None, :]).ravel() + offset)
    return np.concatenate(parts)


def _random_feasible_point(n, s, b, rng):
    t = project_stacked(rng.standard_normal(2 * n), s, b).t
    return t / np.linalg.norm(t)


def estimate_srsc_srss(instance: SuperpositionInstance, bases: BasisPair, link: LinkSpec,
                       level: int, trials: int = 20, seed=0) -> SpectralEstimate:
    """Extremal restricted-Hessian eigenvalues over sampled supports and points.

    Trial ``i`` draws one support and one random unit-norm feasible point and
    also probes the zero vector and, when known, the true coefficients. The
    result is an inner estimate: ``m_hat >= m_level`` and ``M_hat <= M_level``.
    Draws are sequential from ``seed``, so a run with more trials extends a
    shorter one.
    """
    n = bases.n
    if level < 1 or level > 2 * n:
        raise ConfigError(f"level must lie in [1, 2n], got {level}")
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    cfg = instance.config
    rng = as_generator(seed)
    fixed = [np.zeros(2 * n)]
    if instance.theta_true is not None:
        fixed.append(instance.theta_true.t)
    lo, hi = math.inf, -math.inf
    for _ in range(trials):
        support = random_support(n, level, cfg.b, rng)
        A = restricted_columns(instance, bases, support)
        for t in fixed + [_random_feasible_point(n, cfg.s, cfg.b, rng)]:
            e_lo, e_hi = _extremal_eigs(restricted_hessian(t, support, instance, bases, link, A))
            lo, hi = min(lo, e_lo), max(hi, e_hi)
    points = "zero, truth, random feasible" if len(fixed) == 2 else "zero, random feasible"
    return SpectralEstimate(level, max(lo, 0.0), hi, trials, points)


def step_size_window(m_hat: float, M_hat: float):
    """``(0.5 / M, 1.5 / m, M/m <= 2/sqrt(3))``."""
    if not m_hat > 0:
        raise NumericalError(f"degenerate curvature m_hat={m_hat}")
    if M_hat < m_hat:
        raise DomainError(f"M_hat={M_hat} < m_hat={m_hat}")
    return 0.5 / M_hat, 1.5 / m_hat, bool(M_hat / m_hat <= CONDITION_LIMIT)


def theoretical_rate(eta_prime: float, m_hat: float, M_hat: float) -> float:
    """``rho = 2 sqrt(1 + eta^2 M^2 - 2 eta m)``."""
    radicand = 1.0 + eta_prime**2 * M_hat**2 - 2.0 * eta_prime * m_hat
    if radicand < 0:
        if radicand > -1e-12:
            radicand = 0.0
        else:
            raise DomainError(f"negative radicand {radicand} for (eta'={eta_prime}, "
                              f"m={m_hat}, M={M_hat})")
    return 2.0 * math.sqrt(radicand)


def empirical_rate(error_trace) -> float:
    """Per-iteration contraction: exp of the least-squares slope of
    log(error) over the trace after its first 20%.

    A trace that hits exactly zero is cut at the first zero.
    """
    e = np.asarray(error_trace, dtype=float)
    if np.any(e < 0) or not np.all(np.isfinite(e)):
        raise DomainError("error trace must be finite and non-negative")
    zeros = np.flatnonzero(e == 0)
    if zeros.size:
        e = e[: zeros[0]]
        if e.size < 2:
            return 0.0
    elif e.size < 5:
        raise DomainError("error trace needs at least 5 entries")
    start = int(math.floor(0.2 * e.size))
    if e.size - start < 2:
        start = e.size - 2
    it = np.arange(start, e.size, dtype=float)
    slope = np.polyfit(it, np.log(e[start:]), 1)[0]
    return float(math.exp(slope))


def analyze_report(instance, bases, link, level_factor=6, trials=20, seed=0,
                   eta_prime=None) -> dict:
    """The ``analyze`` JSON report."""
    level = min(level_factor * instance.config.s, 2 * bases.n)
    est = estimate_srsc_srss(instance, bases, link, level, trials, seed)
    eta = default_step(instance.design, link) if eta_prime is None else eta_prime
    report = {"level": est.level, "m_hat": est.m_hat, "M_hat": est.M_hat,
              "trials": est.trials, "eta_prime": eta}
    try:
        lo, hi, ok = step_size_window(est.m_hat, est.M_hat)
        report.update(window=[lo, hi], condition_ok=ok)
    except NumericalError:
        report.update(window=None, condition_ok=False)
    try:
        report["rho_at_default_step"] = theoretical_rate(eta, est.m_hat, est.M_hat)
    except DomainError:
        report["rho_at_default_step"] = None
    return report
