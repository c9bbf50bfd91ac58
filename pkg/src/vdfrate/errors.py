"""Exception hierarchy shared by every module in the package."""


class VdfError(Exception):
    """Base class for all errors raised by vdfrate."""


class ConfigError(VdfError, ValueError):
    """Unsupported or unsafe parameter choice (k, lambda, config file)."""


class ParameterError(VdfError, ValueError):
    pass


class OverflowNegligible(VdfError):
    """The proof prime does not fit in 2k bits.

    Happens with probability below 2^-230 for honest inputs; treated as a
    protocol failure instead of silently widening the proof.
    """


class UnsupportedOperation(VdfError):
    pass


class IntegrityError(VdfError):
    """Checkpoints handed to the parallel prover are inconsistent."""


class MalformedProof(VdfError, ValueError):
    pass


class MalformedTransaction(VdfError, ValueError):
    pass


class SequencingError(VdfError):
    """An identity tried to issue while its previous issue was still running."""
