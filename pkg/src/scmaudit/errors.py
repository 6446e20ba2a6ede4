"""Exception hierarchy shared by every module."""


class ScmError(ValueError):
    """Base class for all errors raised by scmaudit."""


class ModelParseError(ScmError):
    """Model or input text is not syntactically valid."""


class ModelValidationError(ScmError):
    """A model parsed but breaks a structural invariant (cycle, partial table, bad distribution)."""


class ZeroProbabilityError(ScmError):
    """Conditioning on an event of probability zero."""


class ModelSizeError(ScmError):
    """The model has more noise assignments than the enumeration cap allows."""


class NotAncestrallyClosedError(ScmError):
    """The sensitive attribute has a parent or shares a latent cause with another variable."""
