"""Exception types shared across the engine."""

from __future__ import annotations


class ConfigError(ValueError):
    """A structurally invalid input: bad box, bad index, bad parameter."""


class OrderError(ValueError):
    """A jet was asked for more derivative orders than it carries."""


class EvaluationError(ArithmeticError):
    """Numeric evaluation failed at a concrete point.

    Carries the offending point and, when known, the printed form of the
    subexpression that failed, so scenario reports can show both.
    """

    def __init__(self, message: str, point=None, expr_text: str | None = None):
        detail = message
        if expr_text is not None:
            detail += f" in {expr_text}"
        if point is not None:
            detail += f" at point {tuple(float(c) for c in point)}"
        super().__init__(detail)
        self.point = None if point is None else tuple(float(c) for c in point)
        self.expr_text = expr_text


class ScenarioError(ValueError):
    """One or more scenario-file problems, aggregated before failing."""

    def __init__(self, messages):
        if isinstance(messages, str):
            messages = [messages]
        self.messages = list(messages)
        super().__init__("\n".join(self.messages))
