"""Typed errors. Every error carries a machine-readable reason code for the CLI."""


class LeafpressError(Exception):
    """Base class; `reason` is a stable machine-readable code."""

    reason = "error"

    def __init__(self, message, **context):
        super().__init__(message)
        self.context = context


class ConfigError(LeafpressError):
    reason = "invalid-config"


class RadiusError(LeafpressError):
    reason = "bad-radius"


class FrameNotReadyError(LeafpressError):
    reason = "frame-not-ready"


class NoConvergenceError(LeafpressError):
    reason = "no-convergence"


class ParameterRangeError(LeafpressError):
    reason = "parameter-out-of-range"


class DepthError(LeafpressError):
    reason = "lift-budget-exceeded"


class UnderResolvedError(LeafpressError):
    reason = "under-resolved"


class UnsupportedStructureError(LeafpressError):
    reason = "unsupported-structure"


class OracleRefusalError(LeafpressError):
    reason = "instance-too-large"


class JoinSizeError(LeafpressError):
    reason = "join-too-large"


class UnsupportedPropertyError(LeafpressError):
    reason = "unsupported-property"
