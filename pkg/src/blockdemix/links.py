"""Link functions g with derivative g' and antiderivative Theta (Theta' = g)."""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError, DomainError

APERIODIC = "aperiodic-monotone"
PERIODIC = "periodic"

TWO_PI = 2.0 * np.pi

# Default half-width of the operating range on which the sigmoid's derivative
# bounds are declared.
SIGMOID_OPERATING_RANGE = 10.0

ArrayFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class LinkSpec:
    name: str
    g: ArrayFn
    g_prime: ArrayFn
    Theta: ArrayFn
    kind: str
    derivative_bounds: tuple[float, float] | None = None
    period: float | None = None
    operating_range: float | None = field(default=None)

    @property
    def is_periodic(self) -> bool:
        return self.kind == PERIODIC


def _identity(x):
    return np.array(x, dtype=float, copy=True)


def _sigmoid(x):
    # (1 - e^{-x}) / (1 + e^{-x}), odd; evaluate on |x| so exp never overflows
    a = np.abs(x)
    e = np.exp(-a)
    return np.sign(x) * (-np.expm1(-a)) / (1.0 + e)


def _sigmoid_prime(x):
    e = np.exp(-np.abs(x))
    return 2.0 * e / (1.0 + e) ** 2


def _sigmoid_theta(x):
    # 2 ln cosh(x/2) = |x| + 2 log1p(e^{-|x|}) - 2 ln 2
    a = np.abs(x)
    return a + 2.0 * np.log1p(np.exp(-a)) - 2.0 * np.log(2.0)


def _sawtooth(x):
    return np.mod(x, TWO_PI)


def _sawtooth_theta(x):
    # continuous antiderivative of mod(x, 2pi): each full period contributes 2 pi^2
    k = np.floor(x / TWO_PI)
    r = x - TWO_PI * k
    return 2.0 * np.pi**2 * k + 0.5 * r * r


def identity_link() -> LinkSpec:
    return LinkSpec(
        name="identity",
        g=_identity,
        g_prime=lambda x: np.ones_like(np.asarray(x, dtype=float)),
        Theta=lambda x: 0.5 * np.square(x),
        kind=APERIODIC,
        derivative_bounds=(1.0, 1.0),
    )


def sigmoid_link(operating_range: float = SIGMOID_OPERATING_RANGE) -> LinkSpec:
    """Shifted sigmoid ``(1 - e^{-x}) / (1 + e^{-x})`` with values in (-1, 1).

    ``g'`` vanishes at infinity, so the derivative bounds only hold on
    ``[-operating_range, operating_range]``: ``l = g'(R)``, ``u = g'(0) = 1/2``.
    """
    if operating_range <= 0:
        raise ConfigError("sigmoid operating range must be positive")
    lower = float(_sigmoid_prime(np.float64(operating_range)))
    return LinkSpec(
        name="sigmoid",
        g=_sigmoid,
        g_prime=_sigmoid_prime,
        Theta=_sigmoid_theta,
        kind=APERIODIC,
        derivative_bounds=(lower, 0.5),
        operating_range=float(operating_range),
    )


def sin_link() -> LinkSpec:
    return LinkSpec(
        name="sin",
        g=np.sin,
        g_prime=np.cos,
        Theta=lambda x: 1.0 - np.cos(x),
        kind=PERIODIC,
        period=TWO_PI,
    )


def sawtooth_link() -> LinkSpec:
    """``mod(x, 2 pi)`` reported in raw phase, so ``sin(g(x)) == sin(x)``."""
    return LinkSpec(
        name="sawtooth",
        g=_sawtooth,
        g_prime=lambda x: np.ones_like(np.asarray(x, dtype=float)),
        Theta=_sawtooth_theta,
        kind=PERIODIC,
        period=TWO_PI,
    )


_BUILTINS = {
    "identity": identity_link,
    "sigmoid": sigmoid_link,
    "sin": sin_link,
    "sawtooth": sawtooth_link,
}


def builtin_links() -> list[LinkSpec]:
    return [factory() for factory in _BUILTINS.values()]


def get_link(name: str) -> LinkSpec:
    try:
        return _BUILTINS[name]()
    except KeyError:
        raise ConfigError(
            f"unknown link {name!r}; choose from {sorted(_BUILTINS)}"
        ) from None


def eval_link(link: LinkSpec, mode: str, x) -> np.ndarray:
    """Evaluate ``g`` (``"value"``), ``g'`` (``"derivative"``) or ``Theta``
    (``"antiderivative"``) entrywise."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError(f"link {link.name!r} evaluated at non-finite input")
    if mode == "value":
        return link.g(x)
    if mode == "derivative":
        return link.g_prime(x)
    if mode == "antiderivative":
        return link.Theta(x)
    raise ConfigError(f"unknown link evaluation mode {mode!r}")
