class BDPError(Exception):
    """Base class for errors raised by the toolkit. `exit_code` is what the CLI returns."""
    exit_code = 2


class ConfigError(BDPError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DimensionError(BDPError, ValueError):
    def __init__(self, message, layer=None):
        self.layer = layer
        if layer is not None:
            message = f"layer {layer}: {message}"
        super().__init__(message)


class IdxParseError(BDPError, ValueError):
    def __init__(self, message, offset):
        self.offset = offset
        super().__init__(f"{message} (byte offset {offset})")


class CheckpointError(BDPError, ValueError):
    pass


class ClippingContractError(BDPError, ValueError):
    pass


class InsufficientSamplesError(BDPError, ValueError):
    pass


class NonFiniteLossError(BDPError, FloatingPointError):
    exit_code = 4

    def __init__(self, index, value):
        self.index = index
        self.value = value
        super().__init__(f"non-finite loss {value} at example {index}")


class NumericDivergence(BDPError, FloatingPointError):
    exit_code = 4

    def __init__(self, message, step=None, state=None):
        self.step = step
        # 발산 직전의 (generator, critic) 등 마지막 정상 상태
        self.state = state
        self.checkpoints = []
        super().__init__(message)


class PrivacyCeilingExceeded(BDPError):
    exit_code = 3

    def __init__(self, epsilon, ceiling):
        self.epsilon = epsilon
        self.ceiling = ceiling
        super().__init__(f"epsilon {epsilon:.4f} exceeds ceiling {ceiling:.4f}")


class PrivacyBoundWarning(UserWarning):
    pass


class DegenerateLabelWarning(UserWarning):
    pass
