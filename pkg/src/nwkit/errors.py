"""Exception types shared across the toolkit."""


class ParseError(ValueError):
    """Malformed input file. ``line`` is 1-based when known."""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"line {line}: "
        elif where:
            where += " "
        super().__init__(where + message)


class FitError(RuntimeError):
    """A least-squares fit could not produce a usable estimate."""


class DegenerateFitError(FitError):
    """The normal matrix is singular; ``parameter`` cannot be identified."""

    def __init__(self, parameter, detail=""):
        self.parameter = parameter
        msg = f"degenerate fit: parameter '{parameter}' is unidentifiable"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)
