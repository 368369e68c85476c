# model/numdiff.py
"""Центральные конечные разности для градиентов, якобианов и гессианов"""
from typing import Callable

import numpy as np

MACHEPS = np.finfo(float).eps


def fd_step(theta: np.ndarray, power: float = 1.0 / 3.0) -> np.ndarray:
    """h_j = eps^power * max(1, |theta_j|), округленный до представимого приращения"""
    theta = np.asarray(theta, dtype=float)
    h = MACHEPS ** power * np.maximum(1.0, np.abs(theta))
    return (theta + h) - theta


def fd_gradient(f: Callable[[np.ndarray], float], theta: np.ndarray) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    h = fd_step(theta)
    grad = np.empty(theta.size)
    for j in range(theta.size):
        e = np.zeros(theta.size)
        e[j] = h[j]
        grad[j] = (f(theta + e) - f(theta - e)) / (2.0 * h[j])
    return grad


def fd_jacobian(f: Callable[[np.ndarray], np.ndarray], theta: np.ndarray) -> np.ndarray:
    """Матрица m x k производных векторной функции"""
    theta = np.asarray(theta, dtype=float)
    h = fd_step(theta)
    columns = []
    for j in range(theta.size):
        e = np.zeros(theta.size)
        e[j] = h[j]
        plus = np.asarray(f(theta + e), dtype=float)
        minus = np.asarray(f(theta - e), dtype=float)
        columns.append((plus - minus) / (2.0 * h[j]))
    return np.stack(columns, axis=-1)


def fd_hessian(f: Callable[[np.ndarray], float], theta: np.ndarray) -> np.ndarray:
    """Гессиан вторыми разностями с шагом eps^(1/4); результат симметризован"""
    theta = np.asarray(theta, dtype=float)
    k = theta.size
    h = fd_step(theta, power=0.25)
    f0 = f(theta)
    hess = np.empty((k, k))

    def shifted(i, si, j=None, sj=0.0):
        x = theta.copy()
        x[i] += si * h[i]
        if j is not None:
            x[j] += sj * h[j]
        return f(x)

    for i in range(k):
        hess[i, i] = (shifted(i, 1.0) - 2.0 * f0 + shifted(i, -1.0)) / h[i] ** 2
        for j in range(i):
            value = (
                shifted(i, 1.0, j, 1.0) - shifted(i, 1.0, j, -1.0)
                - shifted(i, -1.0, j, 1.0) + shifted(i, -1.0, j, -1.0)
            ) / (4.0 * h[i] * h[j])
            hess[i, j] = hess[j, i] = value
    return (hess + hess.T) / 2.0


__all__ = ["fd_step", "fd_gradient", "fd_jacobian", "fd_hessian"]
