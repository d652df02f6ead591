"""Exception hierarchy; the CLI maps each class to an exit code."""


class RwslabError(Exception):
    exit_code = 1


class GrammarError(RwslabError, ValueError):
    """Malformed law / sequence / shift / polynomial text, or bad arguments."""

    exit_code = 2


class NonConvergenceError(RwslabError, ArithmeticError):
    exit_code = 3


class HypothesisError(RwslabError, ValueError):
    """An operation was called outside the hypotheses it is valid under."""

    exit_code = 4
