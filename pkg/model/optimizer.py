# model/optimizer.py
"""
Максимизация логарифма правдоподобия: Ньютон-Рафсон, квази-Ньютон (BFGS)
и доверительная область (dogleg). Производные - конечными разностями.
"""
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Callable, Optional, Tuple

import numpy as np

from config import FIT_CONFIG
from errors import ConfigError, EvaluationError, FitError
from .numdiff import fd_gradient, fd_hessian


class Algorithm(str, Enum):
    NEWTON = "newton"
    QUASI_NEWTON = "quanew"
    TRUST_REGION = "trureg"


class ConvergenceStatus(str, Enum):
    CONVERGED = "converged"
    NOT_CONVERGED = "not_converged"


@dataclass(frozen=True)
class FitOptions:
    algorithm: Algorithm = Algorithm(FIT_CONFIG["algorithm"])
    max_iter: int = FIT_CONFIG["max_iter"]
    gtol: float = FIT_CONFIG["gtol"]
    verbosity: int = FIT_CONFIG["verbosity"]

    def __post_init__(self):
        try:
            object.__setattr__(self, "algorithm", Algorithm(self.algorithm))
        except ValueError:
            choices = ", ".join(a.value for a in Algorithm)
            raise ConfigError(f"Неизвестный алгоритм {self.algorithm!r}; доступны: {choices}") from None
        if not self.gtol > 0:
            raise ConfigError(f"gtol должен быть положительным: {self.gtol}")
        if self.max_iter < 1:
            raise ConfigError(f"max_iter должен быть не меньше 1: {self.max_iter}")
        if not 0 <= self.verbosity <= 5:
            raise ConfigError(f"verbosity должен лежать в 0..5: {self.verbosity}")


@dataclass(frozen=True)
class ConvergenceRecord:
    algorithm: str
    status: ConvergenceStatus
    iterations: int
    grad_norm: float
    loglik: float
    initial_loglik: float
    gtol: float
    message: str = ""

    @property
    def converged(self) -> bool:
        return self.status is ConvergenceStatus.CONVERGED

    def to_dict(self):
        data = asdict(self)
        data["status"] = self.status.value
        return data


class Maximizer:
    """Подъем по целевой функции с проекцией на прямоугольные границы"""

    def __init__(
        self,
        objective: Callable[[np.ndarray], float],
        options: FitOptions,
        lower: Optional[np.ndarray] = None,
        upper: Optional[np.ndarray] = None,
        printer: Callable[[str], None] = print,
    ):
        self.objective = objective
        self.options = options
        self.lower = lower
        self.upper = upper
        self.printer = printer

    def log(self, level: int, text: str):
        if self.options.verbosity >= level:
            self.printer(text)

    def value(self, theta: np.ndarray) -> float:
        """Целевая функция; недопустимая точка - минус бесконечность"""
        try:
            value = float(self.objective(theta))
        except EvaluationError:
            return -np.inf
        return value if np.isfinite(value) else -np.inf

    def project(self, theta: np.ndarray) -> np.ndarray:
        if self.lower is not None:
            theta = np.maximum(theta, self.lower)
        if self.upper is not None:
            theta = np.minimum(theta, self.upper)
        return theta

    def free_mask(self, theta: np.ndarray, grad: np.ndarray) -> np.ndarray:
        """Координаты, не упирающиеся в активную границу"""
        free = np.ones(theta.size, dtype=bool)
        if self.lower is not None:
            free &= ~((theta <= self.lower) & (grad < 0))
        if self.upper is not None:
            free &= ~((theta >= self.upper) & (grad > 0))
        return free

    def gradient(self, theta):
        return fd_gradient(self.value, theta)

    def hessian(self, theta):
        return fd_hessian(self.value, theta)

    def run(self, theta0: np.ndarray) -> Tuple[np.ndarray, ConvergenceRecord]:
        theta = self.project(np.asarray(theta0, dtype=float).copy())
        if not np.all(np.isfinite(theta)):
            raise FitError("Начальная точка содержит нечисловые значения")
        try:
            f0 = float(self.objective(theta))
        except EvaluationError as e:
            raise FitError(f"Правдоподобие не определено в начальной точке: {e}") from e
        if not np.isfinite(f0):
            raise FitError("Правдоподобие не конечно в начальной точке")

        algorithm = self.options.algorithm
        step = {
            Algorithm.NEWTON: self._newton_direction,
            Algorithm.QUASI_NEWTON: self._bfgs_direction,
            Algorithm.TRUST_REGION: None,
        }[algorithm]

        f = f0
        grad = self.gradient(theta)
        self._bfgs = None
        self._radius = 1.0
        message = ""
        iterations = 0
        grad_norm = np.inf
        self.log(2, f"   iter {0:4d}  loglik={f:.8f}")

        for iterations in range(self.options.max_iter + 1):
            if not np.all(np.isfinite(grad)):
                message = "Градиент не определен в текущей точке"
                break
            free = self.free_mask(theta, grad)
            grad_norm = float(np.max(np.abs(grad[free]), initial=0.0))
            self.log(3, f"   |grad|={grad_norm:.3e}")
            if grad_norm <= self.options.gtol:
                break
            if iterations == self.options.max_iter:
                message = "Достигнут предел числа итераций"
                break

            if algorithm is Algorithm.TRUST_REGION:
                accepted = self._trust_region_step(theta, f, grad, free)
            else:
                direction = np.zeros_like(theta)
                direction[free] = step(theta, grad, free)
                accepted = self._line_search(theta, f, grad, direction)
            if accepted is None:
                message = "Не удалось найти шаг, увеличивающий правдоподобие"
                break

            new_theta, new_f = accepted
            new_grad = self.gradient(new_theta)
            if algorithm is Algorithm.QUASI_NEWTON:
                self._bfgs_update(new_theta - theta, grad - new_grad)
            theta, f, grad = new_theta, new_f, new_grad
            self.log(2, f"   iter {iterations + 1:4d}  loglik={f:.8f}")

        converged = grad_norm <= self.options.gtol and np.isfinite(grad_norm)
        record = ConvergenceRecord(
            algorithm=algorithm.value,
            status=ConvergenceStatus.CONVERGED if converged else ConvergenceStatus.NOT_CONVERGED,
            iterations=iterations,
            grad_norm=grad_norm,
            loglik=f,
            initial_loglik=f0,
            gtol=self.options.gtol,
            message="" if converged else message,
        )
        if converged:
            self.log(1, f"✅ Сходимость ({algorithm.value}) за {iterations} итераций, loglik={f:.6f}")
        else:
            self.log(1, f"⚠️  Нет сходимости ({algorithm.value}): {message}, |grad|={grad_norm:.3e}")
        return theta, record

    def _line_search(self, theta, f, grad, direction):
        """Дробление шага пополам с условием Армихо"""
        t = 1.0
        for halving in range(FIT_CONFIG["max_halvings"] + 1):
            candidate = self.project(theta + t * direction)
            value = self.value(candidate)
            if value >= f + FIT_CONFIG["armijo"] * float(grad @ (candidate - theta)) and value > -np.inf:
                if np.array_equal(candidate, theta):
                    return None
                self.log(4, f"   шаг t={t:.3g} после {halving} делений, |dx|={np.linalg.norm(candidate - theta):.3e}")
                return candidate, value
            t /= 2.0
        return None

    def _ascent_direction(self, grad_free):
        norm = np.linalg.norm(grad_free)
        return grad_free / max(1.0, norm)

    def _newton_direction(self, theta, grad, free):
        hess = self.hessian(theta)
        sub = -hess[np.ix_(free, free)]
        if self.options.verbosity >= 5 and np.all(np.isfinite(sub)):
            self.log(5, f"   cond(H)={np.linalg.cond(sub):.3e}")
        try:
            if not np.all(np.isfinite(sub)):
                raise np.linalg.LinAlgError("non-finite Hessian")
            chol = np.linalg.cholesky(sub)
        except np.linalg.LinAlgError:
            self.log(4, "   гессиан не отрицательно определен: шаг наискорейшего подъема")
            return self._ascent_direction(grad[free])
        return np.linalg.solve(chol.T, np.linalg.solve(chol, grad[free]))

    def _bfgs_direction(self, theta, grad, free):
        if self._bfgs is None:
            hess = self.hessian(theta)
            try:
                if not np.all(np.isfinite(hess)):
                    raise np.linalg.LinAlgError("non-finite Hessian")
                np.linalg.cholesky(-hess)
                self._bfgs = -hess
            except np.linalg.LinAlgError:
                self._bfgs = np.eye(theta.size)
        sub = self._bfgs[np.ix_(free, free)]
        if self.options.verbosity >= 5:
            self.log(5, f"   cond(B)={np.linalg.cond(sub):.3e}")
        try:
            return np.linalg.solve(sub, grad[free])
        except np.linalg.LinAlgError:
            return self._ascent_direction(grad[free])

    def _bfgs_update(self, s, y):
        """B аппроксимирует -H; y = g_old - g_new"""
        sy = float(s @ y)
        if sy <= 0:
            return
        bs = self._bfgs @ s
        self._bfgs = self._bfgs - np.outer(bs, bs) / float(s @ bs) + np.outer(y, y) / sy

    def _trust_region_step(self, theta, f, grad, free):
        hess = self.hessian(theta)
        b = -hess[np.ix_(free, free)]
        if not np.all(np.isfinite(b)):
            b = np.eye(int(free.sum()))
        eig_min = float(np.min(np.linalg.eigvalsh(b)))
        if eig_min <= 1e-10:
            b = b + (abs(eig_min) + 1e-6 * max(1.0, abs(eig_min))) * np.eye(b.shape[0])
        if self.options.verbosity >= 5:
            self.log(5, f"   cond(B)={np.linalg.cond(b):.3e}, радиус={self._radius:.3e}")
        g = grad[free]

        while self._radius > 1e-12:
            p_free = self._dogleg(b, g, self._radius)
            p = np.zeros_like(theta)
            p[free] = p_free
            candidate = self.project(theta + p)
            p = candidate - theta
            predicted = float(grad @ p - 0.5 * p[free] @ b @ p[free])
            value = self.value(candidate)
            rho = (value - f) / predicted if predicted > 0 else -np.inf
            self.log(4, f"   dogleg |p|={np.linalg.norm(p):.3e}, rho={rho:.3g}")
            if rho < 0.25:
                self._radius *= 0.25
            elif rho > 0.75 and np.linalg.norm(p_free) >= 0.99 * self._radius:
                self._radius = min(2.0 * self._radius, 1e3)
            if rho > 1e-4 and value > f:
                return candidate, value
        return None

    @staticmethod
    def _dogleg(b, g, radius):
        newton = np.linalg.solve(b, g)
        if np.linalg.norm(newton) <= radius:
            return newton
        gbg = float(g @ b @ g)
        cauchy = (float(g @ g) / gbg) * g
        if np.linalg.norm(cauchy) >= radius:
            return radius * g / np.linalg.norm(g)
        diff = newton - cauchy
        a = float(diff @ diff)
        bq = 2.0 * float(cauchy @ diff)
        c = float(cauchy @ cauchy) - radius ** 2
        tau = (-bq + np.sqrt(bq ** 2 - 4.0 * a * c)) / (2.0 * a)
        return cauchy + tau * diff


def maximize(
    objective: Callable[[np.ndarray], float],
    theta0: np.ndarray,
    options: Optional[FitOptions] = None,
    lower: Optional[np.ndarray] = None,
    upper: Optional[np.ndarray] = None,
    printer: Callable[[str], None] = print,
) -> Tuple[np.ndarray, ConvergenceRecord]:
    """
    Ищет стационарную точку objective; статус NOT_CONVERGED, если норма
    градиента на выходе больше gtol
    """
    return Maximizer(objective, options or FitOptions(), lower, upper, printer).run(theta0)


__all__ = [
    "Algorithm", "ConvergenceStatus", "FitOptions", "ConvergenceRecord",
    "Maximizer", "maximize",
]
