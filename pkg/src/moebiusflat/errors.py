"""Exception types shared across the package.

Every error carries a short machine-readable ``code`` (for example
``"grid-too-small"``) so the CLI and tests can match on it without parsing
messages.
"""


class MoebiusError(Exception):
    code = "error"

    def __init__(self, code=None, detail=""):
        if code is not None:
            self.code = code
        self.detail = detail
        msg = self.code if not detail else f"{self.code}: {detail}"
        super().__init__(msg)


class GridError(MoebiusError):
    code = "grid-mismatch"


class ExprError(MoebiusError):
    code = "expression-error"


class ParseError(ExprError):
    code = "parse-error"

    def __init__(self, detail, position=None, line=None):
        self.position = position
        self.line = line
        self.message = detail
        where = []
        if line is not None:
            where.append(f"line {line}")
        if position is not None:
            where.append(f"column {position + 1}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(None, prefix + detail)


class MetricError(MoebiusError):
    code = "degenerate-metric"


class NilpotencyError(MoebiusError):
    code = "not-nilpotent"


class FrameError(MoebiusError):
    code = "frame-degenerate"


class QuablaError(MoebiusError):
    code = "quabla-mismatch"


class CentroAffineError(MoebiusError):
    code = "not-centro-affine"


class IntegrationError(MoebiusError):
    code = "not-integrable"


class MissingDataError(MoebiusError):
    code = "missing-data"
