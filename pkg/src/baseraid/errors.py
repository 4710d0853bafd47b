"""Exception types shared across the package."""


class BaseraidError(Exception):
    """Root of the package's error hierarchy."""


class ConfigError(BaseraidError):
    """Invalid board, network, or experiment configuration."""


class IllegalMoveError(BaseraidError):
    """A move was rejected; ``reason`` names the violated rule.

    Reasons: ``distance-decrease``, ``occupied``, ``not-adjacent``,
    ``not-your-pawn``, ``game-over``.
    """

    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        super().__init__(f"{reason}: {detail}" if detail else reason)


class ContractViolation(BaseraidError):
    """An operation was called outside its contract (wrong state, bad shapes)."""


class NumericFault(BaseraidError):
    """Training produced non-finite or runaway values; the run must halt."""


class PlanError(BaseraidError):
    """A batch plan is unrunnable (cycle, missing dependency, bad reference)."""
