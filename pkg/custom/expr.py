# custom/expr.py
"""
Арифметические выражения пользовательских распределений.

Грамматика (рекурсивный спуск):

    expr    := term (('+' | '-') term)*
    term    := ('+' | '-') term | product
    product := factor (('*' | '/') factor)*
    factor  := ('+' | '-') factor | power
    power   := primary ('**' factor)?
    primary := NUMBER | NAME | NAME '(' expr (',' expr)* ')' | '(' expr ')'

Ведущий знак терма относится ко всему произведению: "-mu*time**alpha"
разбирается как -(mu * (time ** alpha)). Степень правоассоциативна.
"""
import re
from dataclasses import dataclass
from typing import Callable, Dict, Iterator, List, Mapping, Set, Tuple, Union

import numpy as np

from errors import ExprEvalError, ExprSyntaxError

Value = Union[float, np.ndarray]

TIME = "time"

# имя -> (арность, функция)
FUNCTIONS: Dict[str, Tuple[int, Callable]] = {
    "exp": (1, np.exp),
    "log": (1, np.log),
    "sqrt": (1, np.sqrt),
    "abs": (1, np.abs),
    "pow": (2, np.power),
}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>\*\*|[-+*/(),;=])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # num, name, op, end
    text: str
    pos: int


def tokenize(text: str) -> List[Token]:
    tokens: List[Token] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"Недопустимый символ {text[pos]!r}", pos)
        if m.lastgroup != "ws":
            tokens.append(Token(m.lastgroup, m.group(), pos))
        pos = m.end()
    tokens.append(Token("end", "", len(text)))
    return tokens


# Узлы дерева

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Name:
    id: str


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    args: Tuple["Node", ...]


Node = Union[Num, Name, Neg, BinOp, Call]


class _Parser:
    def __init__(self, text: str, tokens: List[Token], start: int = 0):
        self.text = text
        self.tokens = tokens
        self.i = start

    @property
    def current(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def accept(self, *ops: str) -> bool:
        return self.current.kind == "op" and self.current.text in ops

    def expect(self, op: str) -> Token:
        if not self.accept(op):
            tok = self.current
            found = "конец выражения" if tok.kind == "end" else repr(tok.text)
            raise ExprSyntaxError(f"Ожидалось {op!r}, найдено {found}", tok.pos)
        return self.advance()

    def expr(self) -> Node:
        node = self.term()
        while self.accept("+", "-"):
            op = self.advance().text
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        if self.accept("-"):
            self.advance()
            return Neg(self.term())
        if self.accept("+"):
            self.advance()
            return self.term()
        return self.product()

    def product(self) -> Node:
        node = self.factor()
        while self.accept("*", "/"):
            op = self.advance().text
            node = BinOp(op, node, self.factor())
        return node

    def factor(self) -> Node:
        if self.accept("-"):
            self.advance()
            return Neg(self.factor())
        if self.accept("+"):
            self.advance()
            return self.factor()
        return self.power()

    def power(self) -> Node:
        base = self.primary()
        if self.accept("**"):
            self.advance()
            return BinOp("**", base, self.factor())
        return base

    def primary(self) -> Node:
        tok = self.current
        if tok.kind == "num":
            self.advance()
            return Num(float(tok.text))
        if tok.kind == "name":
            self.advance()
            if not self.accept("("):
                return Name(tok.text)
            if tok.text not in FUNCTIONS:
                raise ExprSyntaxError(f"Неизвестная функция {tok.text}", tok.pos)
            self.advance()
            args = [self.expr()]
            while self.accept(","):
                self.advance()
                args.append(self.expr())
            self.expect(")")
            arity = FUNCTIONS[tok.text][0]
            if len(args) != arity:
                raise ExprSyntaxError(
                    f"Функция {tok.text} принимает {arity} аргумент(а), передано {len(args)}", tok.pos
                )
            return Call(tok.text, tuple(args))
        if self.accept("("):
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        found = "конец выражения" if tok.kind == "end" else repr(tok.text)
        raise ExprSyntaxError(f"Неожиданный токен: {found}", tok.pos)


def parse(text: str) -> Node:
    """Разбирает выражение в дерево"""
    if not text or not text.strip():
        raise ExprSyntaxError("Пустое выражение", 0)
    parser = _Parser(text, tokenize(text))
    node = parser.expr()
    if parser.current.kind != "end":
        raise ExprSyntaxError(f"Лишний токен {parser.current.text!r}", parser.current.pos)
    return node


def to_source(node: Node) -> str:
    """Текст с полной расстановкой скобок; parse(to_source(n)) == n"""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Name):
        return node.id
    if isinstance(node, Neg):
        return f"(-{to_source(node.operand)})"
    if isinstance(node, BinOp):
        return f"({to_source(node.left)} {node.op} {to_source(node.right)})"
    return f"{node.func}({', '.join(to_source(a) for a in node.args)})"


def walk(node: Node) -> Iterator[Node]:
    yield node
    if isinstance(node, Neg):
        yield from walk(node.operand)
    elif isinstance(node, BinOp):
        yield from walk(node.left)
        yield from walk(node.right)
    elif isinstance(node, Call):
        for arg in node.args:
            yield from walk(arg)


def free_names(node: Node) -> Set[str]:
    return {n.id for n in walk(node) if isinstance(n, Name)}


def _has_nan(value) -> np.ndarray:
    return np.isnan(np.asarray(value, dtype=float))


def _check(node: Node, result, *operands):
    """Новый NaN в результате - ошибка области определения"""
    fresh = _has_nan(result)
    for operand in operands:
        fresh = fresh & ~_has_nan(operand)
    if np.any(fresh):
        raise ExprEvalError("Значение вне области определения", to_source(node))
    return result


def evaluate(node: Node, bindings: Mapping[str, Value]) -> Value:
    """
    Вычисляет дерево поэлементно на numpy-массивах.
    log от неположительного аргумента и деление на ноль - ExprEvalError.
    """
    with np.errstate(all="ignore"):
        return _eval(node, bindings)


def _eval(node: Node, env: Mapping[str, Value]) -> Value:
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Name):
        if node.id not in env:
            raise ExprEvalError("Неизвестный идентификатор", node.id)
        return env[node.id]
    if isinstance(node, Neg):
        return -_eval(node.operand, env)
    if isinstance(node, BinOp):
        left = _eval(node.left, env)
        right = _eval(node.right, env)
        if node.op == "+":
            result = np.add(left, right)
        elif node.op == "-":
            result = np.subtract(left, right)
        elif node.op == "*":
            result = np.multiply(left, right)
        elif node.op == "/":
            if np.any(np.asarray(right) == 0):
                raise ExprEvalError("Деление на ноль", to_source(node))
            result = np.divide(left, right)
        else:
            result = np.power(np.asarray(left, dtype=float), right)
        return _check(node, result, left, right)

    args = [_eval(arg, env) for arg in node.args]
    if node.func == "log" and np.any(np.asarray(args[0]) <= 0):
        raise ExprEvalError("Логарифм неположительного аргумента", to_source(node))
    if node.func == "sqrt" and np.any(np.asarray(args[0]) < 0):
        raise ExprEvalError("Корень из отрицательного числа", to_source(node))
    func = FUNCTIONS[node.func][1]
    if node.func == "pow":
        result = func(np.asarray(args[0], dtype=float), args[1])
    else:
        result = func(args[0])
    return _check(node, result, *args)


@dataclass(frozen=True)
class PrepProgram:
    """Последовательность присваиваний `name = expr;`"""
    assignments: Tuple[Tuple[str, Node], ...] = ()

    @property
    def names(self) -> List[str]:
        return [name for name, _ in self.assignments]

    def run(self, bindings: Mapping[str, Value]) -> Dict[str, Value]:
        env = dict(bindings)
        for name, node in self.assignments:
            env[name] = evaluate(node, env)
        return env


def parse_prep(text: str) -> PrepProgram:
    """Разбирает программу подготовки параметров: "mu=exp(-beta); k=2;" """
    if not text or not text.strip():
        return PrepProgram()
    tokens = tokenize(text)
    parser = _Parser(text, tokens)
    assignments: List[Tuple[str, Node]] = []
    while parser.current.kind != "end":
        if parser.accept(";"):
            parser.advance()
            continue
        tok = parser.current
        if tok.kind != "name" or tok.text in FUNCTIONS:
            raise ExprSyntaxError("Ожидалось имя переменной", tok.pos)
        parser.advance()
        parser.expect("=")
        node = parser.expr()
        if parser.current.kind != "end":
            parser.expect(";")
        assignments.append((tok.text, node))
    return PrepProgram(tuple(assignments))


__all__ = [
    "TIME", "FUNCTIONS", "Num", "Name", "Neg", "BinOp", "Call", "Node",
    "tokenize", "parse", "to_source", "free_names", "evaluate",
    "PrepProgram", "parse_prep",
]
