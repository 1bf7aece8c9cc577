"""Exception hierarchy shared by all bnnfi modules."""


class BnnfiError(Exception):
    """Base class for all errors raised by this package."""


class ContractError(BnnfiError):
    """A caller violated an operation's precondition (bad lengths, ranges, ...)."""


class ConfigError(BnnfiError):
    """A configuration is invalid (non-divisible folding, bad campaign keys, ...)."""


class ParseError(BnnfiError):
    """A file could not be parsed (bad magic, truncation, checksum, version)."""


class DataIntegrityError(BnnfiError):
    """Persisted records are internally inconsistent with the run they describe."""
