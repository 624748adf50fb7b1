"""Projected-gradient demixing: STRUCT-DHT, plain DHT and the soft-thresholding
baseline DST, all on the single-index loss

    F(t) = (1/m) sum_i Theta(x_i^T Gamma t) - y_i x_i^T Gamma t.
"""

import io
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .errors import ConfigError, NumericalError, UnsupportedLinkError
from .links import LinkSpec, eval_link
from .model import (
    BlockSparseVector,
    StackedCoefficients,
    SuperpositionInstance,
    check_block_dims,
    dumps_with_arrays,
)
from .operators import BasisPair, DesignOperator
from .seeding import substream

# Fixed-step multiplier on 1 / (g'(0) * nu); see default_step. Larger values
# diverge once the restricted spectrum spreads, smaller ones stall in
# spurious fixed points.
DEFAULT_STEP_FACTOR = 0.6


@dataclass(frozen=True)
class SparsityModel:
    kind: str  # "block" or "plain"
    s: int
    b: int = 1

    def __post_init__(self):
        if self.kind not in ("block", "plain"):
            raise ConfigError(f"unknown sparsity model {self.kind!r}")
        if self.kind == "plain" and self.b != 1:
            raise ConfigError("plain sparsity has block length 1")

    def project(self, v) -> np.ndarray:
        return project_block_sparse(v, self.s, self.b).values


def block(s: int, b: int) -> SparsityModel:
    return SparsityModel("block", s, b)


def plain(s: int) -> SparsityModel:
    return SparsityModel("plain", s, 1)


@dataclass(frozen=True)
class SolverParams:
    sparsity_model: SparsityModel | None = None
    eta_prime: float | None = None  # None: default_step()
    max_iters: int = 500
    tol: float = 1e-7
    lam: float = 0.0
    trace: bool = True
    init: str = "zero"
    seed: int = 0

    def __post_init__(self):
        if self.eta_prime is not None and not self.eta_prime > 0:
            raise ConfigError("eta_prime must be positive")
        if self.max_iters < 1:
            raise ConfigError("max_iters must be >= 1")
        if self.tol < 0 or self.lam < 0:
            raise ConfigError("tol and lam must be non-negative")
        if self.init not in ("random", "zero"):
            raise ConfigError(f"unknown init {self.init!r}")


@dataclass
class SolveResult:
    theta1_hat: np.ndarray
    theta2_hat: np.ndarray
    beta_hat: np.ndarray
    iterations: int
    error_trace: np.ndarray
    trace_kind: str  # "error" against ground truth, else "loss"
    eta_prime: float
    converged: bool
    sparsity_enforced: bool = True
    extras: dict = field(default_factory=dict)

    @property
    def t_hat(self) -> np.ndarray:
        return np.concatenate([self.theta1_hat, self.theta2_hat])

    def to_json(self) -> str:
        doc = {
            "iterations": self.iterations,
            "trace_kind": self.trace_kind,
            "eta_prime": self.eta_prime,
            "converged": self.converged,
            "sparsity_enforced": self.sparsity_enforced,
        }
        doc.update({k: v for k, v in self.extras.items() if not isinstance(v, np.ndarray)})
        arrays = {"theta1_hat": self.theta1_hat, "theta2_hat": self.theta2_hat,
                  "beta_hat": self.beta_hat, "trace": self.error_trace}
        arrays.update({k: v for k, v in self.extras.items() if isinstance(v, np.ndarray)})
        return dumps_with_arrays(doc, arrays)

    def trace_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"iter,{self.trace_kind}\n")
        for i, v in enumerate(self.error_trace):
            buf.write(f"{i},{format(float(v), '.17g')}\n")
        return buf.getvalue()


# --------------------------------------------------------------------------
# projections
# --------------------------------------------------------------------------


def project_block_sparse(v, s: int, b: int) -> BlockSparseVector:
    """Euclidean projection onto (s, b) block-sparse vectors.

    Keeps the s/b contiguous blocks of largest energy; equal energies go to
    the lower block index.
    """
    v = np.asarray(v, dtype=float)
    check_block_dims(v.shape[0], s, b)
    values, kept = kernels.block_project(v, s // b, b)
    return BlockSparseVector(values, tuple(int(i) for i in kept), b)


def project_stacked(t, s: int, b: int) -> StackedCoefficients:
    t = np.asarray(t, dtype=float)
    n = t.shape[0] // 2
    return StackedCoefficients.from_halves(
        project_block_sparse(t[:n], s, b).values,
        project_block_sparse(t[n:], s, b).values,
    )


def soft_threshold(x, tau):
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - tau, 0.0)


# --------------------------------------------------------------------------
# loss
# --------------------------------------------------------------------------


def _as_vector(t):
    return t.t if isinstance(t, StackedCoefficients) else np.asarray(t, dtype=float)


def loss_value(t, instance: SuperpositionInstance, link: LinkSpec) -> float:
    if link.Theta is None:
        raise UnsupportedLinkError(f"link {link.name!r} has no antiderivative")
    a = instance.design.matvec(instance.bases.synth(_as_vector(t)))
    return float(np.mean(eval_link(link, "antiderivative", a) - instance.y * a))


def loss_gradient(t, instance: SuperpositionInstance, link: LinkSpec) -> np.ndarray:
    """``(1/m) [Phi^T; Psi^T] X^T (g(X Gamma t) - y)``."""
    a = instance.design.matvec(instance.bases.synth(_as_vector(t)))
    r = eval_link(link, "value", a) - instance.y
    return instance.bases.analyze(instance.design.rmatvec(r)) / instance.design.m


def default_step(design: DesignOperator, link: LinkSpec) -> float:
    """Hard-thresholding step ``DEFAULT_STEP_FACTOR / (g'(0) * nu)``.

    ``nu = ||X||_F^2 / (m n)`` is the mean diagonal of the normalized Gram
    matrix ``(1/m) Gamma^T X^T X Gamma``, so the step is invariant to the
    design's scale.
    """
    nu = design.frobenius_sq() / (design.m * design.n)
    slope = float(eval_link(link, "derivative", np.zeros(1))[0])
    if nu <= 0 or slope <= 0:
        raise NumericalError("cannot derive a default step: zero curvature at the origin")
    return DEFAULT_STEP_FACTOR / (slope * nu)


def lipschitz_estimate(design: DesignOperator, bases: BasisPair, link: LinkSpec,
                       iters: int = 50, seed: int = 0) -> float:
    """Power-iteration estimate of ``g'(0) * ||(1/m) Gamma^T X^T X Gamma||``."""
    v = substream(seed, "probe").standard_normal(2 * bases.n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = bases.analyze(design.rmatvec(design.matvec(bases.synth(v)))) / design.m
        lam = float(np.linalg.norm(w))
        if lam == 0.0:
            break
        v = w / lam
    slope = float(eval_link(link, "derivative", np.zeros(1))[0])
    return slope * lam


# --------------------------------------------------------------------------
# iterations
# --------------------------------------------------------------------------


def _initial_point(n2, params, project):
    if params.init == "zero":
        return np.zeros(n2)
    t0 = project(substream(params.seed, "init").standard_normal(n2))
    nrm = np.linalg.norm(t0)
    return t0 / nrm if nrm > 0 else t0


def _run(instance, bases, link, params, step_map, project_init, enforced, eta):
    design = instance.design
    y = instance.y
    m, n = design.m, bases.n
    truth = None if instance.theta_true is None else instance.theta_true.t

    def record(t, a):
        if truth is not None:
            return float(np.linalg.norm(t - truth))
        return float(np.mean(link.Theta(a) - y * a))

    t = _initial_point(2 * n, params, project_init)
    trace = []
    converged = False
    iters = 0
    for iters in range(1, params.max_iters + 1):
        a = design.matvec(bases.synth(t))
        if params.trace:
            trace.append(record(t, a))
        grad = bases.analyze(design.rmatvec(eval_link(link, "value", a) - y)) / m
        t_new = step_map(t - eta * grad, eta)
        dn = np.linalg.norm(t_new - t)
        tn = np.linalg.norm(t_new)
        if not (np.isfinite(dn) and np.isfinite(tn)):
            raise NumericalError(f"iterates diverged at iteration {iters} (step {eta:.3g})")
        t = t_new
        if dn == 0.0 or (tn > 0 and dn / tn < params.tol):
            converged = True
            break
    if params.trace:
        trace.append(record(t, design.matvec(bases.synth(t))))
    return SolveResult(
        theta1_hat=t[:n].copy(),
        theta2_hat=t[n:].copy(),
        beta_hat=bases.synth(t),
        iterations=iters,
        error_trace=np.asarray(trace),
        trace_kind="error" if truth is not None else "loss",
        eta_prime=float(eta),
        converged=converged,
        sparsity_enforced=enforced,
    )


def _stacked_projector(model: SparsityModel, n: int):
    if model.kind == "block":
        check_block_dims(n, model.s, model.b)

    def project(t, _eta=None):
        return np.concatenate([model.project(t[:n]), model.project(t[n:])])

    return project


def struct_dht(instance: SuperpositionInstance, bases: BasisPair | None, link: LinkSpec,
               params: SolverParams) -> SolveResult:
    """Projected gradient descent with per-half hard thresholding.

    ``params.sparsity_model`` selects block (STRUCT-DHT) or plain (DHT)
    thresholding; each half keeps its own budget of ``s`` nonzeros.
    """
    if link.is_periodic:
        raise UnsupportedLinkError(
            f"periodic link {link.name!r} must go through mf_struct_dht")
    if params.sparsity_model is None:
        raise ConfigError("struct_dht needs a sparsity model")
    bases = instance.bases if bases is None else bases
    project = _stacked_projector(params.sparsity_model, bases.n)
    eta = params.eta_prime
    if eta is None:
        eta = default_step(instance.design, link)
    return _run(instance, bases, link, params, project, project, True, eta)


def dht(instance, bases, link, params) -> SolveResult:
    """Plain-sparsity baseline: STRUCT-DHT with block length 1."""
    s = params.sparsity_model.s
    return struct_dht(instance, bases, link, replace(params, sparsity_model=plain(s)))


def dst(instance: SuperpositionInstance, bases: BasisPair | None, link: LinkSpec,
        params: SolverParams) -> SolveResult:
    """Iterative soft thresholding at level ``eta * lam``; no support constraint.

    Without a projection the iteration sees the full spectrum, so the default
    step is ``1 / L`` with ``L`` from :func:`lipschitz_estimate`.
    """
    bases = instance.bases if bases is None else bases
    lam = params.lam
    eta = params.eta_prime
    if eta is None:
        eta = 1.0 / lipschitz_estimate(instance.design, bases, link, seed=params.seed)

    def shrink(t, eta):
        return soft_threshold(t, eta * lam)

    return _run(instance, bases, link, params, shrink, lambda t: t, False, eta)


def lambda_max(instance: SuperpositionInstance, link: LinkSpec) -> float:
    """Smallest ``lam`` for which zero is a fixed point of DST."""
    return float(np.max(np.abs(loss_gradient(np.zeros(2 * instance.bases.n), instance, link))))
