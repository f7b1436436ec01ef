"""Exception types raised by framelab.

Every error carries a short machine-readable ``code`` so batch drivers can
report failures without parsing messages.
"""

from __future__ import annotations


class FrameLabError(ValueError):
    """Base class for structured framelab errors."""

    code = "framelab_error"

    def __init__(self, message: str, **context):
        super().__init__(message)
        self.context = context

    def to_dict(self) -> dict:
        return {"code": self.code, "message": str(self), **self.context}


class DimensionError(FrameLabError):
    code = "dimension_mismatch"


class NonFiniteError(FrameLabError):
    code = "non_finite"


class ExponentError(FrameLabError):
    code = "bad_exponent"


class ConstantsError(FrameLabError):
    """Perturbation constants outside the range an operation accepts."""

    code = "lambda2_cap"


class NotAFrameError(FrameLabError):
    code = "not_a_frame"


class NotARieszBasisError(FrameLabError):
    code = "not_a_riesz_basis"


class PreconditionError(FrameLabError):
    """A structural precondition (left inverse, projection, ...) failed."""

    code = "precondition_failed"


class OracleLimitError(FrameLabError):
    code = "oracle_dim_limit"


class SideConditionError(FrameLabError):
    code = "side_condition_failed"


class UnsupportedTranslationError(FrameLabError):
    code = "unsupported_translation"
