"""Bivirus SIS model over a hypergraph: parameters, states, vector field and Jacobian.

Node ``i`` of virus ``k`` is driven by pairwise contagion through ``a`` and by
higher-order contagion through the tensor ``b``, stored dense with shape
``(n, n, n)`` so that ``b[i]`` is the matrix of hyperedges headed by node ``i``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from bivirus_hoi.domain.spectral import is_irreducible
from bivirus_hoi.exceptions import DimensionMismatchError, InvalidParameterError, ModelShapeError

FloatArray = NDArray[np.float64]


def _frozen(values: ArrayLike) -> FloatArray:
    arr = np.array(values, dtype=np.float64, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class VirusParams:
    """Per-virus parameters over n nodes"""

    delta: FloatArray
    beta_pair: float
    beta_hoi: float
    a: FloatArray
    b: Optional[FloatArray] = None

    def __post_init__(self):
        delta = _frozen(self.delta)
        if delta.ndim != 1 or delta.shape[0] < 1:
            raise ModelShapeError(f"delta must be a non-empty vector, got shape {delta.shape}")
        n = delta.shape[0]

        a = _frozen(self.a)
        if a.shape != (n, n):
            raise ModelShapeError(f"a must have shape ({n}, {n}), got {a.shape}")

        b = _frozen(np.zeros((n, n, n)) if self.b is None else self.b)
        if b.shape != (n, n, n):
            raise ModelShapeError(f"b must have shape ({n}, {n}, {n}), got {b.shape}")

        for name in ("beta_pair", "beta_hoi"):
            value = float(getattr(self, name))
            if not np.isfinite(value) or value < 0:
                raise InvalidParameterError(f"{name} must be finite and nonnegative, got {value}")
            object.__setattr__(self, name, value)

        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def n(self) -> int:
        return self.delta.shape[0]

    @classmethod
    def from_hyperedges(
        cls,
        delta: ArrayLike,
        beta_pair: float,
        beta_hoi: float,
        a: ArrayLike,
        hyperedges: List[Tuple[int, int, int, float]],
    ) -> "VirusParams":
        """Build ``b`` from 0-based ``(head, j, l, weight)`` entries"""
        n = np.asarray(delta).shape[0]
        b = np.zeros((n, n, n))
        for head, j, l, weight in hyperedges:
            b[head, j, l] = weight
        return cls(delta=delta, beta_pair=beta_pair, beta_hoi=beta_hoi, a=a, b=b)


@dataclass(frozen=True, eq=False)
class BivirusModel:
    """Two competing viruses over a common node set"""

    virus: Tuple[VirusParams, VirusParams]

    def __post_init__(self):
        viruses = tuple(self.virus)
        if len(viruses) != 2:
            raise ModelShapeError(f"exactly two viruses are required, got {len(viruses)}")
        if viruses[0].n != viruses[1].n:
            raise ModelShapeError(
                f"virus dimensions disagree: n={viruses[0].n} and n={viruses[1].n}"
            )
        object.__setattr__(self, "virus", viruses)

    @property
    def n(self) -> int:
        return self.virus[0].n


@dataclass(frozen=True, eq=False)
class State:
    """Infected fractions of both viruses.

    Construction does not enforce membership of D; use ``in_domain``.
    """

    x1: FloatArray
    x2: FloatArray

    def __post_init__(self):
        x1 = _frozen(self.x1)
        x2 = _frozen(self.x2)
        if x1.ndim != 1 or x2.ndim != 1:
            raise ModelShapeError("state components must be vectors")
        if x1.shape != x2.shape:
            raise DimensionMismatchError(x1.shape[0], x2.shape[0], what="x2")
        object.__setattr__(self, "x1", x1)
        object.__setattr__(self, "x2", x2)

    @property
    def n(self) -> int:
        return self.x1.shape[0]

    @classmethod
    def zeros(cls, n: int) -> "State":
        return cls(np.zeros(n), np.zeros(n))

    @classmethod
    def from_vector(cls, vec: ArrayLike) -> "State":
        vec = np.asarray(vec, dtype=np.float64)
        if vec.ndim != 1 or vec.shape[0] % 2:
            raise ModelShapeError(f"stacked state must have even length, got shape {vec.shape}")
        n = vec.shape[0] // 2
        return cls(vec[:n], vec[n:])

    def as_vector(self) -> FloatArray:
        return np.concatenate([self.x1, self.x2])

    def component(self, k: int) -> FloatArray:
        """Virus ``k`` fractions, ``k`` in {1, 2}"""
        return self.x1 if k == 1 else self.x2

    def distance(self, other: "State") -> float:
        return float(np.max(np.abs(self.as_vector() - other.as_vector())))


@dataclass(frozen=True)
class HoiSupportIndicator:
    """Entry i is 1 iff ``b[i]`` has a strictly positive entry"""

    ones_b: NDArray[np.int8]

    @property
    def nodes(self) -> NDArray[np.intp]:
        return np.flatnonzero(self.ones_b)

    def any(self) -> bool:
        return bool(self.ones_b.any())


@dataclass(frozen=True)
class AssumptionViolation:
    """One violated model assumption; ``index`` is 0-based"""

    virus: int
    rule: str
    index: Optional[Tuple[int, ...]] = None
    value: Optional[float] = None

    def __str__(self) -> str:
        where = ""
        if self.index is not None:
            where = " at " + ",".join(str(i + 1) for i in self.index)
        value = "" if self.value is None else f" (value {self.value:g})"
        return f"virus {self.virus}: {self.rule}{where}{value}"


def _check_state(m: BivirusModel, s: State) -> None:
    if s.n != m.n:
        raise DimensionMismatchError(m.n, s.n)


def validate_model(m: BivirusModel) -> List[AssumptionViolation]:
    """List every violated assumption; empty iff the model is well defined"""
    violations: List[AssumptionViolation] = []
    for k, v in enumerate(m.virus, start=1):
        for i in np.flatnonzero(~(v.delta > 0)):
            violations.append(AssumptionViolation(k, "positive_healing", (int(i),), float(v.delta[i])))
        for i, j in np.argwhere(v.a < 0):
            violations.append(
                AssumptionViolation(k, "nonnegative_pairwise", (int(i), int(j)), float(v.a[i, j]))
            )
        for i, j, l in np.argwhere(v.b < 0):
            violations.append(
                AssumptionViolation(k, "nonnegative_hoi", (int(i), int(j), int(l)), float(v.b[i, j, l]))
            )
        if not is_irreducible(np.abs(v.a)):
            violations.append(AssumptionViolation(k, "irreducible_pairwise"))
    return violations


def hoi_values(v: VirusParams, x: FloatArray) -> FloatArray:
    """Stacked quadratic forms ``x^T b[i] x``"""
    return np.einsum("ijl,j,l->i", v.b, x, x)


def hoi_gradient(v: VirusParams, x: FloatArray) -> FloatArray:
    """Row i is ``((b[i] + b[i]^T) x)^T``"""
    return np.einsum("ijl,l->ij", v.b, x) + np.einsum("ilj,l->ij", v.b, x)


def infection_pressure(v: VirusParams, x: FloatArray) -> FloatArray:
    """Pairwise plus higher-order infection pressure on each node"""
    return v.beta_pair * (v.a @ x) + v.beta_hoi * hoi_values(v, x)


def _own_block(v: VirusParams, x: FloatArray, susceptible: FloatArray) -> FloatArray:
    coupling = v.beta_pair * v.a + v.beta_hoi * hoi_gradient(v, x)
    return -np.diag(v.delta) + susceptible[:, None] * coupling - np.diag(infection_pressure(v, x))


def vector_field(m: BivirusModel, s: State) -> Tuple[FloatArray, FloatArray]:
    _check_state(m, s)
    susceptible = 1.0 - s.x1 - s.x2
    v1, v2 = m.virus
    dx1 = -v1.delta * s.x1 + susceptible * infection_pressure(v1, s.x1)
    dx2 = -v2.delta * s.x2 + susceptible * infection_pressure(v2, s.x2)
    return dx1, dx2


def stacked_field(m: BivirusModel, y: FloatArray) -> FloatArray:
    """``vector_field`` on the stacked vector ``(x1, x2)``"""
    n = m.n
    x1, x2 = y[:n], y[n:]
    susceptible = 1.0 - x1 - x2
    v1, v2 = m.virus
    return np.concatenate([
        -v1.delta * x1 + susceptible * infection_pressure(v1, x1),
        -v2.delta * x2 + susceptible * infection_pressure(v2, x2),
    ])


def stacked_jacobian(m: BivirusModel, y: FloatArray) -> FloatArray:
    n = m.n
    x1, x2 = y[:n], y[n:]
    susceptible = 1.0 - x1 - x2
    v1, v2 = m.virus
    return np.block([
        [_own_block(v1, x1, susceptible), -np.diag(infection_pressure(v1, x1))],
        [-np.diag(infection_pressure(v2, x2)), _own_block(v2, x2, susceptible)],
    ])


def jacobian(m: BivirusModel, s: State) -> FloatArray:
    """Analytic 2n x 2n Jacobian of ``vector_field``"""
    _check_state(m, s)
    return stacked_jacobian(m, s.as_vector())


def in_domain(s: State, tol: float = 0.0) -> bool:
    return bool(
        np.all(s.x1 >= -tol) and np.all(s.x2 >= -tol) and np.all(s.x1 + s.x2 <= 1.0 + tol)
    )


def hoi_support(v: VirusParams) -> HoiSupportIndicator:
    ones_b = (v.b > 0).any(axis=(1, 2)).astype(np.int8)
    ones_b.setflags(write=False)
    return HoiSupportIndicator(ones_b)


def r_matrix(v: VirusParams) -> FloatArray:
    """Row i holds the column sums of ``b[i]``"""
    return v.b.sum(axis=1)


def single_virus_field(v: VirusParams, x: FloatArray) -> FloatArray:
    """Field of one virus with the competitor extinct"""
    return -v.delta * x + (1.0 - x) * infection_pressure(v, x)


def single_virus_jacobian(v: VirusParams, x: FloatArray) -> FloatArray:
    return _own_block(v, x, 1.0 - x)


def satisfies_zero_or_interior(s: State, margin: float = 1e-9) -> bool:
    """Each virus component is exactly zero or strictly inside (0, 1), and x1 + x2 << 1"""
    for x in (s.x1, s.x2):
        if np.any(x != 0) and not (np.all(x > 0) and np.all(x < 1)):
            return False
    return bool(np.all(s.x1 + s.x2 <= 1.0 - margin))
