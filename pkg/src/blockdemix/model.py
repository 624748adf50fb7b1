"""Problem dimensions, block-sparse signals and synthesis of ground-truth instances.

Observation model: ``y = g(X beta) + e`` with ``beta = Phi theta1 + Psi theta2``,
each ``theta_i`` an (s, b) block-sparse vector, ``e ~ N(0, noise_sigma^2 I)``.
"""

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigError, DomainError
from .links import LinkSpec, eval_link, get_link
from .operators import (
    BasisPair,
    DesignOperator,
    bases_from_descriptor,
    dense_design,
    design_from_descriptor,
)
from .seeding import substream

# dense matrices with more entries than this are regenerated from their seed
INLINE_MATRIX_LIMIT = 10**7


@dataclass(frozen=True)
class SignalConfig:
    n: int
    s: int
    b: int
    m: int
    q: int | None = None
    k: int | None = None
    noise_sigma: float = 0.0

    def __post_init__(self):
        for name in ("n", "s", "b", "m"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be a positive integer")
        check_block_dims(self.n, self.s, self.b)
        if self.noise_sigma < 0:
            raise ConfigError("noise_sigma must be non-negative")
        if (self.q is None) != (self.k is None):
            raise ConfigError("q and k must be given together")
        if self.q is not None and self.m != self.k * self.q:
            raise ConfigError(f"factored design needs m = k*q, got m={self.m}, "
                              f"k={self.k}, q={self.q}")

    @property
    def n_blocks(self) -> int:
        return self.s // self.b


def check_block_dims(n, s, b):
    if s > n:
        raise ConfigError(f"sparsity s={s} exceeds dimension n={n}")
    if s % b or n % b:
        raise ConfigError(f"block length b={b} must divide both s={s} and n={n}")


@dataclass(frozen=True)
class BlockSparseVector:
    values: np.ndarray
    block_support: tuple[int, ...]
    b: int

    def validate(self, s: int) -> None:
        """Raise if more than s/b blocks are listed or a nonzero lies outside them."""
        n = self.values.shape[0]
        if n % self.b:
            raise ConfigError("vector length is not a multiple of the block length")
        if len(self.block_support) > s // self.b:
            raise ConfigError(f"{len(self.block_support)} blocks exceed s/b={s // self.b}")
        active = np.zeros(n // self.b, dtype=bool)
        active[list(self.block_support)] = True
        energy = np.abs(self.values.reshape(-1, self.b)).sum(axis=1)
        if np.any(energy[~active] != 0):
            raise ConfigError("nonzero entry outside the declared block support")


def block_support_of(v, b) -> tuple[int, ...]:
    blocks = np.asarray(v).reshape(-1, b)
    return tuple(int(i) for i in np.flatnonzero(np.any(blocks != 0, axis=1)))


@dataclass(frozen=True)
class StackedCoefficients:
    t: np.ndarray

    @classmethod
    def from_halves(cls, theta1, theta2):
        return cls(np.concatenate([np.asarray(theta1, float), np.asarray(theta2, float)]))

    @property
    def n(self) -> int:
        return self.t.shape[0] // 2

    @property
    def theta1(self) -> np.ndarray:
        return self.t[: self.n]

    @property
    def theta2(self) -> np.ndarray:
        return self.t[self.n:]


@dataclass(frozen=True)
class SuperpositionInstance:
    config: SignalConfig
    theta_true: StackedCoefficients | None
    beta: np.ndarray | None
    y: np.ndarray
    e: np.ndarray
    design: DesignOperator
    bases: BasisPair
    link_name: str
    seed: int | None = None
    meta: dict = field(default_factory=dict, compare=False)


def make_block_sparse(n: int, s: int, b: int, seed=0) -> BlockSparseVector:
    """Random (s, b) block-sparse unit vector.

    ``s/b`` distinct blocks chosen uniformly, standard normal entries inside
    them, whole vector scaled to unit Euclidean norm.
    """
    check_block_dims(n, s, b)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    blocks = np.sort(rng.choice(n // b, size=s // b, replace=False))
    values = np.zeros((n // b, b))
    values[blocks] = rng.standard_normal((blocks.size, b))
    values = values.reshape(-1)
    nrm = np.linalg.norm(values)
    if nrm > 0:
        values /= nrm
    return BlockSparseVector(values, tuple(int(i) for i in blocks), b)


def synthesize_instance(config: SignalConfig, bases: BasisPair, design: DesignOperator,
                        link: LinkSpec, seed: int = 0) -> SuperpositionInstance:
    """Draw theta1, theta2, the noise, and form ``y = g(X beta) + e``.

    ``seed`` drives the ``theta1``, ``theta2`` and ``noise`` substreams.
    """
    n = config.n
    if bases.n != n or design.n != n:
        raise ConfigError(f"dimension mismatch: n={n}, bases n={bases.n}, design n={design.n}")
    if design.m != config.m:
        raise ConfigError(f"dimension mismatch: config m={config.m}, design m={design.m}")
    th1 = make_block_sparse(n, config.s, config.b, substream(seed, "theta1"))
    th2 = make_block_sparse(n, config.s, config.b, substream(seed, "theta2"))
    theta = StackedCoefficients.from_halves(th1.values, th2.values)
    beta = bases.synth(theta.t)
    if config.noise_sigma > 0:
        e = substream(seed, "noise").standard_normal(config.m) * config.noise_sigma
    else:
        e = np.zeros(config.m)
    y = eval_link(link, "value", design.matvec(beta)) + e
    return SuperpositionInstance(config, theta, beta, y, e, design, bases, link.name,
                                 seed=int(seed))


def normalized_error(estimate, truth) -> float:
    """``||estimate - truth||_2 / ||truth||_2``."""
    estimate = np.asarray(estimate, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if estimate.shape != truth.shape:
        raise ConfigError(f"shape mismatch {estimate.shape} vs {truth.shape}")
    nt = np.linalg.norm(truth)
    if nt == 0:
        raise DomainError("normalized error undefined for a zero-norm truth")
    return float(np.linalg.norm(estimate - truth) / nt)


# --------------------------------------------------------------------------
# JSON
# --------------------------------------------------------------------------


def format_array(a) -> str:
    """JSON array text with 17 significant digits per entry; non-finite -> null."""
    return "[" + ", ".join(format(float(v), ".17g") if np.isfinite(v) else "null"
                           for v in np.ravel(a)) + "]"


def dumps_with_arrays(doc: dict, arrays: dict) -> str:
    """``json.dumps(doc)`` with each ``arrays[key]`` spliced in as 17-digit text."""
    doc = dict(doc)
    for i, key in enumerate(arrays):
        doc[key] = f"@@ARRAY{i}@@"
    text = json.dumps(doc, indent=2, sort_keys=True)
    for i, (key, arr) in enumerate(arrays.items()):
        text = text.replace(f'"@@ARRAY{i}@@"', format_array(arr))
    return text


def instance_to_json(inst: SuperpositionInstance) -> str:
    design_desc = dict(inst.design.descriptor)
    arrays = {
        "theta1": inst.theta_true.theta1,
        "theta2": inst.theta_true.theta2,
        "beta": inst.beta,
        "y": inst.y,
        "e": inst.e,
    }
    if inst.design.form == "dense" and (design_desc.get("seed") is None
                                        or inst.design.X.size <= INLINE_MATRIX_LIMIT):
        arrays["X"] = inst.design.X
    doc = {
        "config": asdict(inst.config),
        "seed": inst.seed,
        "link_name": inst.link_name,
        "design_descriptor": design_desc,
        "bases_descriptor": inst.bases.descriptor(),
    }
    return dumps_with_arrays(doc, arrays)


def instance_from_json(text: str) -> SuperpositionInstance:
    doc = json.loads(text)
    cfg = SignalConfig(**doc["config"])
    get_link(doc["link_name"])
    desc = doc["design_descriptor"]
    if "X" in doc:
        X = np.asarray(doc["X"], dtype=float).reshape(desc["m"], desc["n"])
        design = dense_design(X, desc)
    else:
        design = design_from_descriptor(desc)
    bases = bases_from_descriptor(doc["bases_descriptor"])
    theta = StackedCoefficients.from_halves(doc["theta1"], doc["theta2"])
    return SuperpositionInstance(
        cfg, theta, np.asarray(doc["beta"], float), np.asarray(doc["y"], float),
        np.asarray(doc["e"], float), design, bases, doc["link_name"], seed=doc["seed"],
    )
