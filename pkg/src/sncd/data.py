"""Data containers and configuration shared by every solver."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Optional, Sequence

import numpy as np

from .errors import (
    AlphaZero,
    DimensionMismatch,
    EmptyData,
    InvalidParameter,
    NonFiniteEntry,
    RaggedRows,
)


class LossFamily(str, Enum):
    HUBER = "huber"
    QUANTILE = "quantile"  # Huber-smoothed check loss
    LS = "ls"


class Screening(str, Enum):
    ASR = "asr"
    NVS = "nvs"
    NONE = "none"  # alias of NVS


class Preprocess(str, Enum):
    STANDARDIZE = "standardize"
    RESCALE = "rescale"
    NONE = "none"


def _frozen_array(a, ndim, order="C"):
    arr = np.array(a, dtype=np.float64, order=order, copy=True)
    if arr.ndim != ndim:
        raise DimensionMismatch(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Dataset:
    """Response ``y`` (length n) and dense predictors ``X`` (n x p).

    ``X`` is stored column-major so the coordinate solvers read contiguous
    columns. Both arrays are read-only copies of the inputs.
    """

    y: np.ndarray
    X: np.ndarray
    column_names: Optional[tuple] = None

    def __post_init__(self):
        y = _frozen_array(self.y, 1)
        X = _frozen_array(self.X, 2, order="F")
        if y.shape[0] == 0 or X.shape[0] == 0:
            raise EmptyData()
        if X.shape[0] != y.shape[0]:
            raise DimensionMismatch(f"y has {y.shape[0]} entries but X has {X.shape[0]} rows")
        if X.shape[1] < 1:
            raise DimensionMismatch("X needs at least one column")
        bad = np.argwhere(~np.isfinite(y))
        if bad.size:
            raise NonFiniteEntry(int(bad[0][0]), 0)
        bad = np.argwhere(~np.isfinite(X))
        if bad.size:
            i, j = bad[np.lexsort((bad[:, 1], bad[:, 0]))[0]]
            raise NonFiniteEntry(int(i), int(j) + 1)
        names = self.column_names
        if names is not None:
            names = tuple(str(c) for c in names)
            if len(names) != X.shape[1]:
                raise DimensionMismatch(f"{len(names)} column names for {X.shape[1]} columns")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "column_names", names)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def names(self) -> tuple:
        if self.column_names is not None:
            return self.column_names
        return tuple(f"x{j + 1}" for j in range(self.p))

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows)
        return Dataset(self.y[rows], self.X[rows], self.column_names)


def validate_dataset(rows: Sequence[Sequence[float]], column_names=None) -> Dataset:
    """Build a :class:`Dataset` from a rectangular table.

    The first column is the response, the rest are predictors. Entry
    positions in errors are 0-based (row, column) into ``rows``.
    """
    rows = list(rows)
    if not rows:
        raise EmptyData()
    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width:
            raise RaggedRows(i, width, len(row))
    if width < 2:
        raise DimensionMismatch("need a response column and at least one predictor")
    table = np.array(rows, dtype=np.float64)
    bad = np.argwhere(~np.isfinite(table))
    if bad.size:
        i, j = bad[0]
        raise NonFiniteEntry(int(i), int(j))
    return Dataset(table[:, 0], table[:, 1:], column_names)


@dataclass(frozen=True)
class LossSpec:
    """Loss family plus its shape parameter.

    For ``QUANTILE`` the smoothing half-width ``gamma`` may be left as None,
    in which case the path driver chooses it per lambda from the residuals.
    """

    family: LossFamily
    gamma: Optional[float] = None
    tau: Optional[float] = None

    def __post_init__(self):
        fam = LossFamily(self.family)
        object.__setattr__(self, "family", fam)
        if fam is LossFamily.HUBER:
            if self.gamma is None or not self.gamma > 0 or not math.isfinite(self.gamma):
                raise InvalidParameter("huber loss needs gamma > 0")
        elif fam is LossFamily.QUANTILE:
            if self.tau is None or not 0 < self.tau < 1:
                raise InvalidParameter("quantile loss needs 0 < tau < 1")
            if self.gamma is not None and not self.gamma > 0:
                raise InvalidParameter("gamma must be positive")

    @classmethod
    def huber(cls, gamma: float) -> "LossSpec":
        return cls(LossFamily.HUBER, gamma=float(gamma))

    @classmethod
    def quantile(cls, tau: float, gamma: Optional[float] = None) -> "LossSpec":
        return cls(LossFamily.QUANTILE, gamma=None if gamma is None else float(gamma), tau=float(tau))

    @classmethod
    def ls(cls) -> "LossSpec":
        return cls(LossFamily.LS)

    def with_gamma(self, gamma: float) -> "LossSpec":
        return replace(self, gamma=float(gamma))


@dataclass(frozen=True)
class PenaltySpec:
    """Elastic-net penalty ``lam * (alpha*|b|_1 + (1-alpha)*|b|_2^2/2)``."""

    lam: float
    alpha: float = 1.0

    def __post_init__(self):
        if not self.lam >= 0 or not math.isfinite(self.lam):
            raise InvalidParameter("lambda must be a finite nonnegative number")
        check_alpha(self.alpha)


def check_alpha(alpha):
    if alpha == 0:
        raise AlphaZero()
    if not 0 < alpha <= 1:
        raise InvalidParameter("alpha must be in (0, 1]")


@dataclass
class SolverState:
    """Primal-dual iterate: intercept, coefficients, subgradients, residuals.

    Owned by exactly one solver call at a time; solvers copy on entry.
    """

    beta0: float
    beta: np.ndarray
    s: np.ndarray
    residuals: np.ndarray

    @classmethod
    def null(cls, data: Dataset, beta0: float = 0.0) -> "SolverState":
        return cls(float(beta0), np.zeros(data.p), np.zeros(data.p), data.y - beta0)

    @classmethod
    def from_coefficients(cls, data: Dataset, beta0, beta, s=None) -> "SolverState":
        beta = np.array(beta, dtype=np.float64)
        s = np.zeros(data.p) if s is None else np.array(s, dtype=np.float64)
        st = cls(float(beta0), beta, s, np.empty(data.n))
        st.refresh_residuals(data)
        return st

    def copy(self) -> "SolverState":
        return SolverState(self.beta0, self.beta.copy(), self.s.copy(), self.residuals.copy())

    def refresh_residuals(self, data: Dataset) -> None:
        nz = np.flatnonzero(self.beta)
        r = data.y - self.beta0
        if nz.size:
            r = r - data.X[:, nz] @ self.beta[nz]
        self.residuals = np.ascontiguousarray(r)

    def residual_drift(self, data: Dataset) -> float:
        """Max abs gap between stored and recomputed residuals."""
        exact = data.y - self.beta0 - data.X @ self.beta
        return float(np.max(np.abs(exact - self.residuals)))


@dataclass
class LambdaDiagnostics:
    lam: float
    sweeps: int = 0
    rounds: int = 0
    violations: int = 0
    n_eligible: int = 0
    gamma: Optional[float] = None
    kkt_residual: float = 0.0
    objective: float = 0.0
    converged: bool = True
    cap_hit: bool = False
    multiplier: Optional[float] = None
    degenerate_intercept_events: int = 0
    zero_denominator_events: int = 0
    damped_steps: int = 0
    seconds: Optional[float] = None


@dataclass
class SolutionPath:
    """Per-lambda solutions on the original data scale plus diagnostics.

    ``s`` holds the subgradients of the problem actually solved (after
    preprocessing); they are scale-free in sign and bound.
    """

    lambdas: np.ndarray
    beta0: np.ndarray
    beta: np.ndarray
    s: np.ndarray
    diagnostics: list
    loss: LossSpec
    alpha: float
    screening: str = "asr"
    preprocess: str = "standardize"
    lambda_max: float = float("nan")
    column_names: Optional[tuple] = None
    seconds: Optional[float] = None
    extra: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.lambdas)

    @property
    def violations_total(self) -> int:
        return int(sum(d.violations for d in self.diagnostics))

    @property
    def converged(self) -> np.ndarray:
        return np.array([d.converged for d in self.diagnostics], dtype=bool)

    @property
    def gamma_schedule(self) -> np.ndarray:
        return np.array([np.nan if d.gamma is None else d.gamma for d in self.diagnostics])

    def state(self, k: int, data: Optional[Dataset] = None) -> SolverState:
        """Solution ``k`` as a :class:`SolverState` (residuals need ``data``)."""
        if data is None:
            r = np.full(0, np.nan)
            return SolverState(float(self.beta0[k]), self.beta[k].copy(), self.s[k].copy(), r)
        return SolverState.from_coefficients(data, self.beta0[k], self.beta[k], self.s[k])

    @property
    def solutions(self) -> list:
        return [self.state(k) for k in range(len(self))]

    def predict(self, X_new, k=None) -> np.ndarray:
        X_new = np.asarray(X_new, dtype=np.float64)
        if X_new.ndim != 2 or X_new.shape[1] != self.beta.shape[1]:
            raise DimensionMismatch(f"expected {self.beta.shape[1]} columns")
        fitted = X_new @ self.beta.T + self.beta0
        return fitted if k is None else fitted[:, k]


@dataclass(frozen=True)
class FitConfig:
    """Path-fitting settings.

    ``lambda_min_ratio`` of None means 0.05 when p > n, else 0.001.
    ``lambdas`` overrides the automatic grid (sorted descending on use).
    """

    nlambda: int = 100
    lambda_min_ratio: Optional[float] = None
    lambdas: Optional[tuple] = None
    screening: Screening = Screening.ASR
    tol: float = 1e-7
    kkt_tol: float = 1e-7
    max_sweeps: int = 10000
    preprocess: Preprocess = Preprocess.STANDARDIZE
    seed: int = 0
    workers: Optional[int] = None
    timing: bool = False

    def __post_init__(self):
        object.__setattr__(self, "screening", Screening(self.screening))
        object.__setattr__(self, "preprocess", Preprocess(self.preprocess))
        if self.lambdas is not None:
            lams = tuple(float(v) for v in np.ravel(self.lambdas))
            if not lams or any(not (v > 0 and math.isfinite(v)) for v in lams):
                raise InvalidParameter("user lambdas must be positive and finite")
            if len(set(lams)) != len(lams):
                raise InvalidParameter("user lambdas must be distinct")
            object.__setattr__(self, "lambdas", lams)
        elif self.nlambda < 2:
            raise InvalidParameter("nlambda must be >= 2 for an automatic grid")
        if self.lambda_min_ratio is not None and not 0 < self.lambda_min_ratio < 1:
            raise InvalidParameter("lambda_min_ratio must be in (0, 1)")
        for name in ("tol", "kkt_tol"):
            if not getattr(self, name) > 0:
                raise InvalidParameter(f"{name} must be positive")
        if self.max_sweeps < 1:
            raise InvalidParameter("max_sweeps must be positive")
        if self.workers is not None and self.workers < 1:
            raise InvalidParameter("workers must be positive")

    def replace(self, **changes: Any) -> "FitConfig":
        return replace(self, **changes)
