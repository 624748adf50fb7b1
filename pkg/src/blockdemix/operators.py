"""Design operators, orthonormal bases and incoherence diagnostics."""

from dataclasses import dataclass, field

import numpy as np
from scipy import fft

from .errors import ConfigError
from .seeding import as_generator

BASIS_KINDS = ("identity", "dct-like", "random-orthonormal")
FAMILIES = ("gaussian", "rademacher")

POWER_TOL = 1e-8
POWER_MAX_ITERS = 200


# --------------------------------------------------------------------------
# orthonormal bases
# --------------------------------------------------------------------------


class Basis:
    """An n x n orthonormal matrix with fast application where one exists.

    ``identity`` and ``dct-like`` never materialize their matrix for products;
    the dct-like matrix has the orthonormal DCT-II vectors as rows.
    """

    def __init__(self, n, kind, matrix=None, seed=None):
        self.n = int(n)
        self.kind = kind
        self.seed = seed
        self._matrix = matrix

    @property
    def matrix(self) -> np.ndarray:
        if self._matrix is None:
            if self.kind == "identity":
                self._matrix = np.eye(self.n)
            elif self.kind == "dct-like":
                self._matrix = fft.dct(np.eye(self.n), norm="ortho", axis=0)
            else:
                raise ConfigError(f"basis kind {self.kind!r} has no matrix")
        return self._matrix

    def apply(self, x):
        if self.kind == "identity":
            return np.array(x, dtype=float, copy=True)
        if self.kind == "dct-like":
            return fft.dct(x, norm="ortho", axis=0)
        return self.matrix @ x

    def apply_T(self, v):
        if self.kind == "identity":
            return np.array(v, dtype=float, copy=True)
        if self.kind == "dct-like":
            return fft.idct(v, norm="ortho", axis=0)
        return self.matrix.T @ v

    def columns(self, idx):
        idx = np.asarray(idx, dtype=np.int64)
        if self.kind == "identity" or self.kind == "dct-like":
            E = np.zeros((self.n, idx.size))
            E[idx, np.arange(idx.size)] = 1.0
            return self.apply(E)
        return self.matrix[:, idx]


def bases_from_descriptor(desc: dict) -> "BasisPair":
    if "matrix" in (desc["phi"], desc["psi"]):
        raise ConfigError("explicit-matrix bases cannot be regenerated from a descriptor")
    return BasisPair.from_kinds(desc["n"], desc["phi"], desc["psi"], desc["seed"])


def _random_orthonormal(n, rng):
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    # sign fix makes the draw Haar-distributed
    return Q * np.where(np.diag(R) < 0, -1.0, 1.0)


def gen_orthobasis(n: int, kind: str, seed=0) -> np.ndarray:
    """Orthonormal n x n matrix of the requested kind."""
    return make_basis(n, kind, seed).matrix


def make_basis(n: int, kind: str, seed=0) -> Basis:
    if n < 1:
        raise ConfigError("basis dimension must be positive")
    if kind == "random-orthonormal":
        return Basis(n, kind, _random_orthonormal(n, as_generator(seed)), seed=seed)
    if kind in ("identity", "dct-like"):
        return Basis(n, kind)
    raise ConfigError(f"unknown basis kind {kind!r}; choose from {BASIS_KINDS}")


def basis_from_matrix(Q, tol=1e-10) -> Basis:
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise ConfigError("basis matrix must be square")
    if np.max(np.abs(Q.T @ Q - np.eye(Q.shape[0]))) > tol:
        raise ConfigError("basis matrix is not orthonormal")
    return Basis(Q.shape[0], "matrix", Q)


@dataclass(frozen=True)
class BasisPair:
    phi: Basis
    psi: Basis
    seed: int | None = None

    def __post_init__(self):
        if self.phi.n != self.psi.n:
            raise ConfigError("basis dimensions differ")

    @classmethod
    def from_kinds(cls, n, phi="identity", psi="dct-like", seed=0):
        # independent seeds so identical kinds still give distinct random bases
        return cls(make_basis(n, phi, _sub(seed, 0)), make_basis(n, psi, _sub(seed, 1)),
                   seed=_seed_value(seed))

    @classmethod
    def from_matrices(cls, Phi, Psi):
        return cls(basis_from_matrix(Phi), basis_from_matrix(Psi))

    @property
    def n(self) -> int:
        return self.phi.n

    @property
    def Phi(self) -> np.ndarray:
        return self.phi.matrix

    @property
    def Psi(self) -> np.ndarray:
        return self.psi.matrix

    @property
    def Gamma(self) -> np.ndarray:
        return np.hstack([self.Phi, self.Psi])

    def synth(self, t):
        """``Gamma t = Phi t[:n] + Psi t[n:]``."""
        n = self.n
        return self.phi.apply(t[:n]) + self.psi.apply(t[n:])

    def analyze(self, v):
        """``Gamma^T v``, stacked as ``[Phi^T v; Psi^T v]``."""
        return np.concatenate([self.phi.apply_T(v), self.psi.apply_T(v)])

    def columns(self, idx):
        """Columns of Gamma indexed by ``idx`` (indices into ``[0, 2n)``)."""
        idx = np.asarray(idx, dtype=np.int64)
        n = self.n
        out = np.empty((n, idx.size))
        first = idx < n
        if first.any():
            out[:, first] = self.phi.columns(idx[first])
        if (~first).any():
            out[:, ~first] = self.psi.columns(idx[~first] - n)
        return out

    def descriptor(self) -> dict:
        return {"n": self.n, "phi": self.phi.kind, "psi": self.psi.kind, "seed": self.seed}


def _sub(seed, i):
    if seed is None:
        return None
    if isinstance(seed, (int, np.integer)):
        return np.random.SeedSequence(int(seed), spawn_key=(5, i))
    return seed


# --------------------------------------------------------------------------
# design operators
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class DesignOperator:
    """Dense ``X`` (m x n) or factored ``X = D B``.

    In factored form ``D`` is stored as ``D_diag`` of shape (k, q): row ``r``
    is the diagonal of the r-th q x q block, so
    ``(X beta)[r*q + l] = D_diag[r, l] * (B beta)[l]``.
    """

    form: str
    m: int
    n: int
    X: np.ndarray | None = None
    D_diag: np.ndarray | None = None
    B: np.ndarray | None = None
    T: float | None = None
    descriptor: dict = field(default_factory=dict, compare=False)

    @property
    def k(self) -> int | None:
        return None if self.D_diag is None else self.D_diag.shape[0]

    @property
    def q(self) -> int | None:
        return None if self.D_diag is None else self.D_diag.shape[1]

    def matvec(self, x):
        if self.form == "dense":
            return self.X @ x
        z = self.B @ x
        if z.ndim == 1:
            return (self.D_diag * z).reshape(-1)
        k, q = self.D_diag.shape
        return (self.D_diag[:, :, None] * z[None, :, :]).reshape(k * q, -1)

    def rmatvec(self, v):
        if self.form == "dense":
            return self.X.T @ v
        k, q = self.D_diag.shape
        if v.ndim == 1:
            w = (self.D_diag * v.reshape(k, q)).sum(axis=0)
        else:
            w = (self.D_diag[:, :, None] * v.reshape(k, q, -1)).sum(axis=0)
        return self.B.T @ w

    def D_dense(self) -> np.ndarray:
        k, q = self.D_diag.shape
        D = np.zeros((k * q, q))
        for r in range(k):
            D[r * q:(r + 1) * q] = np.diag(self.D_diag[r])
        return D

    def to_dense(self) -> np.ndarray:
        if self.form == "dense":
            return self.X
        return (self.D_diag.reshape(-1, 1) * np.tile(self.B, (self.k, 1)))

    def frobenius_sq(self) -> float:
        if self.form == "dense":
            return float(np.sum(self.X * self.X))
        row_sq = np.sum(self.B * self.B, axis=1)
        return float(np.sum(self.D_diag**2 * row_sq[None, :]))


def _draw(rng, family, shape):
    if family == "gaussian":
        return rng.standard_normal(shape)
    if family == "rademacher":
        return rng.choice(np.array([-1.0, 1.0]), size=shape)
    raise ConfigError(f"unknown family {family!r}; choose from {FAMILIES}")


def gen_subgaussian(m: int, n: int, family="gaussian", scale=None, seed=0) -> DesignOperator:
    """Dense design with i.i.d. entries of the family times ``scale``
    (default ``1/sqrt(m)``)."""
    if m < 1 or n < 1:
        raise ConfigError("design dimensions must be positive")
    if scale is None:
        scale = 1.0 / np.sqrt(m)
    X = _draw(as_generator(seed), family, (m, n)) * scale
    desc = {"form": "dense", "m": m, "n": n, "family": family,
            "scale": float(scale), "seed": _seed_value(seed)}
    return DesignOperator("dense", m, n, X=X, descriptor=desc)


def gen_factored(k: int, q: int, n: int, T=20.0, family="gaussian", seed=0,
                 b_exponent=0.5) -> DesignOperator:
    """Factored design ``X = D B``.

    ``D`` stacks ``k`` diagonal q x q blocks with Uniform[-T, T] entries; ``B``
    is q x n subgaussian with rows scaled by ``q ** -b_exponent``.
    """
    if k < 1 or q < 1 or n < 1:
        raise ConfigError("factored design dimensions must be positive")
    if T <= 0:
        raise ConfigError("T must be positive")
    rng = as_generator(seed)
    D_diag = rng.uniform(-T, T, size=(k, q))
    B = _draw(rng, family, (q, n)) * q ** (-b_exponent)
    desc = {"form": "factored", "k": k, "q": q, "n": n, "T": float(T),
            "family": family, "b_exponent": float(b_exponent),
            "seed": _seed_value(seed)}
    return DesignOperator("factored", k * q, n, D_diag=D_diag, B=B, T=float(T),
                          descriptor=desc)


def dense_design(X, descriptor=None) -> DesignOperator:
    X = np.asarray(X, dtype=float)
    desc = descriptor or {"form": "dense", "m": X.shape[0], "n": X.shape[1],
                          "family": "explicit"}
    return DesignOperator("dense", X.shape[0], X.shape[1], X=X, descriptor=desc)


def design_from_descriptor(desc: dict) -> DesignOperator:
    if desc.get("seed") is None:
        raise ConfigError("design descriptor has no seed; cannot regenerate")
    if desc["form"] == "dense":
        return gen_subgaussian(desc["m"], desc["n"], desc["family"], desc["scale"],
                               desc["seed"])
    if desc["form"] == "factored":
        return gen_factored(desc["k"], desc["q"], desc["n"], desc["T"], desc["family"],
                            desc["seed"], desc.get("b_exponent", 0.5))
    raise ConfigError(f"unknown design form {desc['form']!r}")


def _seed_value(seed):
    return int(seed) if isinstance(seed, (int, np.integer)) else None


# --------------------------------------------------------------------------
# incoherence
# --------------------------------------------------------------------------


def mutual_coherence(bases: BasisPair) -> float:
    """``max_ij |<Phi_i, Psi_j>|``."""
    return float(np.max(np.abs(bases.phi.apply_T(bases.Psi))))


def incoherence_upper_bound(bases: BasisPair, s: int) -> float:
    """``min(1, s * mu)`` with ``mu`` the mutual coherence."""
    if s > bases.n:
        raise ConfigError("s exceeds the basis dimension")
    return min(1.0, s * mutual_coherence(bases))


def top_singular_value(M, rng) -> float:
    """Largest singular value of ``M`` by power iteration on ``M^T M``."""
    v = rng.standard_normal(M.shape[1])
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(POWER_MAX_ITERS):
        w = M @ v
        new = float(np.linalg.norm(w))
        if new == 0.0:
            return 0.0
        v = M.T @ (w / new)
        nv = np.linalg.norm(v)
        if nv == 0.0:
            return new
        v /= nv
        if abs(new - sigma) <= POWER_TOL * new:
            sigma = new
            break
        sigma = new
    return sigma


def incoherence_estimate(bases: BasisPair, s: int, trials: int = 100, seed=0) -> float:
    """Monte-Carlo lower estimate of the s-sparse incoherence.

    Each trial draws two random s-sets ``S, T`` and evaluates the symmetric
    family of pairs (S,T), (T,S), (S,S), (T,T), so swapping the bases gives the
    same value up to the power-iteration tolerance.
    """
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    n = bases.n
    rng = as_generator(seed)
    best = 0.0
    for _ in range(trials):
        S = np.sort(rng.choice(n, size=s, replace=False))
        T = np.sort(rng.choice(n, size=s, replace=False))
        PhiS, PhiT = bases.phi.columns(S), bases.phi.columns(T)
        PsiS, PsiT = bases.psi.columns(S), bases.psi.columns(T)
        start = np.random.default_rng(rng.integers(2**63))
        state = start.bit_generator.state
        for A, C in ((PhiS, PsiT), (PhiT, PsiS), (PhiS, PsiS), (PhiT, PsiT)):
            start.bit_generator.state = state
            best = max(best, top_singular_value(A.T @ C, start))
    return min(best, 1.0)
