"""Estimators and exact solvers used by the validation oracles"""

from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import sparse, stats
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import spsolve

from ..core.exceptions import ContractViolation, DomainError, NumericalError, SizeError, StateSpaceTooLarge

STATIONARY_TOLERANCE = 1e-12
MAX_POWER_ITERATIONS = 10**5
MAX_STATES = 10**6

Matrix = Union[np.ndarray, sparse.spmatrix]


class StationaryLaw(NamedTuple):
    indices: np.ndarray
    distribution: np.ndarray  # full length, zero outside ``indices``
    residual: float
    non_unique: bool


def _as_csr(P: Matrix) -> sparse.csr_matrix:
    matrix = sparse.csr_matrix(P, dtype=float)
    n, m = matrix.shape
    if n != m:
        raise ContractViolation(f"transition matrix must be square, got {matrix.shape}")
    if n > MAX_STATES:
        raise StateSpaceTooLarge(f"{n} states exceed the limit of {MAX_STATES}")
    rows = np.asarray(matrix.sum(axis=1)).ravel()
    if np.max(np.abs(rows - 1.0)) > STATIONARY_TOLERANCE:
        raise ContractViolation(f"rows must sum to 1, worst deviation {np.max(np.abs(rows - 1.0)):.3g}")
    return matrix


def closed_classes(P: Matrix) -> List[np.ndarray]:
    """Closed communicating classes of the kernel graph"""
    matrix = sparse.csr_matrix(P)
    count, labels = connected_components(matrix > 0, directed=True, connection="strong")
    graph = sparse.coo_matrix(matrix > 0)
    leaking = np.zeros(count, dtype=bool)
    leaving = labels[graph.row] != labels[graph.col]
    leaking[labels[graph.row[leaving]]] = True
    return [np.flatnonzero(labels == k) for k in range(count) if not leaking[k]]


def _solve_class(P2: sparse.csr_matrix, members: np.ndarray) -> np.ndarray:
    sub = P2[members][:, members]
    k = len(members)
    if k == 1:
        return np.ones(1)
    system = (sub.T - sparse.identity(k, format="csr")).tolil()
    system[0, :] = np.ones(k)
    rhs = np.zeros(k)
    rhs[0] = 1.0
    pi = np.asarray(spsolve(system.tocsr(), rhs)).ravel()
    pi = np.maximum(pi, 0.0)
    return pi / pi.sum()


def _residual(P2: sparse.csr_matrix, pi: np.ndarray) -> float:
    return float(np.sum(np.abs(P2.T @ pi - pi)))


def exact_stationary(
    P: Matrix,
    classes: Optional[Sequence[Sequence[int]]] = None,
    tol: float = STATIONARY_TOLERANCE,
    max_iter: int = MAX_POWER_ITERATIONS,
) -> List[StationaryLaw]:
    """Stationary laws of P^2, one per class.

    Classes default to the closed classes of P^2. A declared class that holds several closed
    classes of P^2 gets the equal mixture of their laws, flagged as non-unique. Each law is a
    direct sparse solve, polished by power iteration on P^2 until the L1 residual is below ``tol``.
    """
    matrix = _as_csr(P)
    P2 = (matrix @ matrix).tocsr()
    closed = closed_classes(P2)
    if classes is None:
        groups = [[c] for c in closed]
        declared = [c for c in closed]
    else:
        groups, declared = [], []
        for cls in classes:
            members = set(int(i) for i in cls)
            inside = [c for c in closed if set(c.tolist()) <= members]
            if not inside:
                raise ContractViolation("declared class contains no closed class")
            groups.append(inside)
            declared.append(np.array(sorted(members), dtype=np.int64))
    laws = []
    n = matrix.shape[0]
    for members, parts in zip(declared, groups):
        pi = np.zeros(n)
        for part in parts:
            pi[part] += _solve_class(P2, part) / len(parts)
        residual = _residual(P2, pi)
        iterations = 0
        while residual >= tol:
            if iterations >= max_iter:
                raise NumericalError(f"power iteration stalled after {max_iter} iterations", residual)
            pi = P2.T @ pi
            pi /= pi.sum()
            residual = _residual(P2, pi)
            iterations += 1
        laws.append(StationaryLaw(np.asarray(members), pi, residual, len(parts) > 1))
    return laws


def batch_means(series: Sequence[float], b: Optional[int] = None) -> Tuple[float, float]:
    """Mean and batch-means estimate of the asymptotic variance, b batches (default n^(1/3))"""
    values = np.asarray(series, dtype=float).ravel()
    n = len(values)
    if b is None:
        b = max(2, int(np.floor(n ** (1.0 / 3.0))))
    if b < 2 or n < 2 * b:
        raise SizeError(f"need at least 2b values for {b} batches, got {n}")
    size = n // b
    means = values[: size * b].reshape(b, size).mean(axis=1)
    return float(values.mean()), float(size * np.var(means, ddof=1))


def ks_statistic(samples: Sequence[float], cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    values = np.asarray(samples, dtype=float)
    if values.size == 0:
        raise SizeError("no samples")
    return float(stats.kstest(values, cdf).statistic)


def ks_two_sample(a: Sequence[float], b: Sequence[float]) -> Tuple[float, float]:
    """Two-sample KS statistic and p-value"""
    if len(a) == 0 or len(b) == 0:
        raise SizeError("no samples")
    result = stats.ks_2samp(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    return float(result.statistic), float(result.pvalue)


def wasserstein1(a: Sequence[float], b: Sequence[float]) -> float:
    """1-D Wasserstein-1 distance between empirical laws"""
    if len(a) == 0 or len(b) == 0:
        raise SizeError("no samples")
    return float(stats.wasserstein_distance(np.asarray(a, dtype=float), np.asarray(b, dtype=float)))


def msd(trajectory: np.ndarray, lags: Sequence[int]) -> dict:
    """Mean squared displacement per lag.

    ``trajectory`` has time on the first axis and coordinates on the last; any axes in
    between (for example independent chains) are averaged over.
    """
    x = np.asarray(trajectory, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    curve = {}
    for lag in lags:
        lag = int(lag)
        if lag < 0 or lag >= len(x):
            raise SizeError(f"lag {lag} outside trajectory of length {len(x)}")
        if lag == 0:
            curve[0] = 0.0
            continue
        diff = x[lag:] - x[:-lag]
        curve[lag] = float(np.mean(np.sum(diff * diff, axis=-1)))
    return curve


def richardson_ratio(v_full: float, v_half: float, v_quarter: float) -> float:
    """(v_d - v_{d/2}) / (v_{d/2} - v_{d/4}); 4 for a second-order error"""
    denominator = v_half - v_quarter
    if denominator == 0.0:
        raise DomainError("successive values coincide")
    return (v_full - v_half) / denominator


def tv_distance(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.sum(np.abs(np.asarray(p) - np.asarray(q))))


def autocorrelation(series: Sequence[float], max_lag: int) -> np.ndarray:
    """Normalized autocorrelation at lags 0..max_lag"""
    x = np.asarray(series, dtype=float)
    if len(x) <= max_lag + 1:
        raise SizeError(f"series of length {len(x)} too short for lag {max_lag}")
    x = x - x.mean()
    variance = float(np.dot(x, x)) / len(x)
    if variance == 0.0:
        raise DomainError("constant series has no autocorrelation")
    return np.array([float(np.dot(x[: len(x) - k], x[k:])) / len(x) / variance for k in range(max_lag + 1)])


def fit_geometric_rate(values: Sequence[float]) -> float:
    """rho from a least-squares fit of log values[n] = c + n log rho over the positive entries"""
    y = np.asarray(values, dtype=float)
    index = np.flatnonzero(y > 0)
    if len(index) < 2:
        raise SizeError("need at least two positive values")
    slope = np.polyfit(index, np.log(y[index]), 1)[0]
    return float(np.exp(slope))


def loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if len(xs) < 2 or len(xs) != len(ys):
        raise SizeError("need two or more matching points")
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise DomainError("log-log fit needs positive values")
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])
