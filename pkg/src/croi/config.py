"""Codec configuration and the fixed rate-point schedule."""

from dataclasses import dataclass

# Lagrange multipliers for the five rate points, low to high bitrate.
LAMBDA_TABLE = (0.0035, 0.013, 0.025, 0.0483, 0.0932)

INPUT_MULTIPLE = 64
ENCODER_STRIDE = 16
HYPER_STRIDE = 64
MASK_SCALE = 2  # similarity maps live at half the (padded) image resolution

# config id -> (channels_n, channels_m); id 0 is the desk-scale model.
CONFIG_TABLE = {
    0: (64, 48),
    1: (128, 96),
    2: (192, 128),
}


@dataclass(frozen=True)
class CodecConfig:
    channels_n: int
    channels_m: int
    lambda_index: int
    input_multiple: int = INPUT_MULTIPLE

    def __post_init__(self):
        if self.channels_n <= 0 or self.channels_m <= 0:
            raise ValueError("channel counts must be positive")
        if not 0 <= self.lambda_index <= 4:
            raise ValueError("lambda_index must be in [0, 4]")

    @property
    def lam(self):
        return LAMBDA_TABLE[self.lambda_index]

    @property
    def config_id(self):
        for cid, (n, m) in CONFIG_TABLE.items():
            if (n, m) == (self.channels_n, self.channels_m):
                return cid
        raise ValueError(f"no config id for channels ({self.channels_n}, {self.channels_m})")

    @classmethod
    def from_config_id(cls, config_id, lambda_index):
        if config_id not in CONFIG_TABLE:
            raise ValueError(f"unknown config id {config_id}")
        n, m = CONFIG_TABLE[config_id]
        return cls(channels_n=n, channels_m=m, lambda_index=lambda_index)

    @classmethod
    def desk(cls, lambda_index=1):
        return cls.from_config_id(0, lambda_index)

    @classmethod
    def for_lambda_index(cls, lambda_index):
        """Paper schedule: 128 channels for indexes 0-1, 192 for 2-4."""
        return cls.from_config_id(1 if lambda_index < 2 else 2, lambda_index)
