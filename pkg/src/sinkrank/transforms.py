"""Dual-softmax and Sinkhorn rescoring of similarity matrices.

Both transforms are pure matrix-to-matrix maps defined for any m x n shape.
Rows of either output always normalize to one. The doubly stochastic limit
of Sinkhorn is a square-only statement.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .matrix import SimilarityMatrix, _softmax_array, as_matrix, logsumexp_axis

__all__ = [
    "DEFAULT_DSL_TEMPERATURE",
    "DEFAULT_SINKHORN_STEPS",
    "DEFAULT_SINKHORN_TEMPERATURE",
    "Method",
    "TransformConfig",
    "apply_transform",
    "dual_softmax",
    "sinkhorn",
    "sinkhorn_step",
]

# Engineering defaults, tunable from the CLI. Suited to cosine-like scores.
DEFAULT_DSL_TEMPERATURE = 100.0
DEFAULT_SINKHORN_TEMPERATURE = 0.05
DEFAULT_SINKHORN_STEPS = 20


class Method(str, enum.Enum):
    IDENTITY = "identity"
    DUAL_SOFTMAX = "dual_softmax"
    SINKHORN = "sinkhorn"

    @classmethod
    def parse(cls, name: str | Method) -> Method:
        if isinstance(name, Method):
            return name
        key = str(name).lower().replace("-", "_")
        if key == "dsl":
            key = "dual_softmax"
        try:
            return cls(key)
        except ValueError:
            raise ConfigError(
                f"unknown method {name!r}; choose identity, dsl/dual_softmax or sinkhorn"
            ) from None


@dataclass(frozen=True)
class TransformConfig:
    """Method plus its hyperparameters.

    ``temperature`` and ``sinkhorn_steps`` default per method when left as
    ``None``. ``sinkhorn_steps`` is ignored unless the method is Sinkhorn.
    """

    method: Method = Method.IDENTITY
    temperature: float | None = None
    sinkhorn_steps: int | None = None

    def __post_init__(self):
        method = Method.parse(self.method)
        object.__setattr__(self, "method", method)
        temperature = self.temperature
        if temperature is None:
            temperature = {
                Method.IDENTITY: 1.0,
                Method.DUAL_SOFTMAX: DEFAULT_DSL_TEMPERATURE,
                Method.SINKHORN: DEFAULT_SINKHORN_TEMPERATURE,
            }[method]
        _check_temperature(temperature)
        object.__setattr__(self, "temperature", float(temperature))
        steps = DEFAULT_SINKHORN_STEPS if self.sinkhorn_steps is None else self.sinkhorn_steps
        if method is Method.SINKHORN:
            _check_steps(steps)
        object.__setattr__(self, "sinkhorn_steps", int(steps))


def _check_temperature(t) -> None:
    if not (isinstance(t, (int, float, np.floating)) and np.isfinite(t) and t > 0):
        raise ConfigError(f"temperature must be a positive finite number, got {t!r}")


def _check_steps(k) -> None:
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)) or k < 1:
        raise ConfigError(f"sinkhorn steps must be a positive integer, got {k!r}")


def dual_softmax(A, temperature: float = DEFAULT_DSL_TEMPERATURE) -> SimilarityMatrix:
    """Dual-softmax rescoring.

    A column softmax of ``temperature * A`` acts as a prior that is small for
    items many queries like (hubs); the scores are reweighted by it and then
    normalized with a plain row softmax. Rows of the output sum to one.
    """
    _check_temperature(temperature)
    A = as_matrix(A)
    prior = _softmax_array(temperature * A.data, axis=0)
    return A.with_data(_softmax_array(A.data * prior, axis=1))


def _sinkhorn_step(a: np.ndarray) -> np.ndarray:
    a = a - logsumexp_axis(a, axis=0)
    return a - logsumexp_axis(a, axis=1)


def sinkhorn_step(A) -> SimilarityMatrix:
    """One log-domain Sinkhorn step: subtract column, then row, log-sum-exp.

    The row normalization comes last, so ``exp`` of every output row sums
    to one.
    """
    A = as_matrix(A)
    return A.with_data(_sinkhorn_step(A.data))


def sinkhorn(
    A,
    temperature: float = DEFAULT_SINKHORN_TEMPERATURE,
    steps: int = DEFAULT_SINKHORN_STEPS,
) -> SimilarityMatrix:
    """Iterated Sinkhorn normalization of ``A / temperature``.

    Returns log-scores, not probabilities. For square inputs ``exp`` of the
    result approaches a doubly stochastic matrix as ``steps`` grows.
    """
    _check_temperature(temperature)
    _check_steps(steps)
    A = as_matrix(A)
    a = A.data / temperature
    for _ in range(steps):
        a = _sinkhorn_step(a)
    return A.with_data(a)


def apply_transform(A, cfg: TransformConfig) -> SimilarityMatrix:
    A = as_matrix(A)
    if cfg.method is Method.IDENTITY:
        return A
    if cfg.method is Method.DUAL_SOFTMAX:
        return dual_softmax(A, cfg.temperature)
    return sinkhorn(A, cfg.temperature, cfg.sinkhorn_steps)
