# errors.py
from typing import Optional


class ParmsurvError(Exception):
    """Базовое исключение пакета"""


class DataError(ParmsurvError, ValueError):
    """Некорректный входной набор данных"""


class DesignError(ParmsurvError, ValueError):
    """Ошибка кодирования ковариат"""


class ConfigError(ParmsurvError, ValueError):
    """Некорректные параметры запуска"""

    def __init__(self, message: str, usage: str = ""):
        super().__init__(message)
        self.usage = usage


class ExprSyntaxError(ParmsurvError, ValueError):
    """Синтаксическая ошибка в выражении"""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (позиция {position})")
        self.position = position


class EvaluationError(ParmsurvError, ArithmeticError):
    """Численная ошибка при вычислении; оптимизатор считает такую точку недопустимой"""


class ExprEvalError(EvaluationError):
    """Ошибка вычисления выражения"""

    def __init__(self, message: str, subexpression: Optional[str] = None):
        text = message if subexpression is None else f"{message}: {subexpression}"
        super().__init__(text)
        self.subexpression = subexpression


class DistributionError(EvaluationError, ValueError):
    """Нарушение ограничений параметров или области определения распределения"""


class LikelihoodError(EvaluationError):
    """Неположительный вклад наблюдения в правдоподобие"""

    def __init__(self, message: str, index: Optional[int] = None):
        super().__init__(message if index is None else f"{message} (наблюдение {index})")
        self.index = index


class FitError(ParmsurvError):
    """Оптимизацию невозможно начать"""


class InferenceError(ParmsurvError):
    """Матрица информации вырождена или ковариация некорректна"""

    def __init__(self, message: str, condition: Optional[float] = None):
        super().__init__(message if condition is None else f"{message} (cond={condition:.3g})")
        self.condition = condition


# Ошибки входных данных: код выхода 1
INPUT_ERRORS = (DataError, DesignError, ConfigError, ExprSyntaxError, FitError)
