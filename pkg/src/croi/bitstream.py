"""Versioned bitstream container.

Byte layout (all integers big-endian):

    magic "CROI" | version u8 | config id u8 | lambda_index u8
    | H u16 | W u16 (pre-padding dims)
    | prompt-length u16 | UTF-8 prompt
    | sigma u16 (value * 10000) | eta u16 (value * 10000)
    | z-length u32 | z payload | y-length u32 | y payload

The prompt/sigma/eta fields are provenance only; the decoder needs
nothing beyond the container and model weights.
"""

import struct
from dataclasses import dataclass

MAGIC = b"CROI"
VERSION = 1
_FIXED_POINT = 10000


class BitstreamError(ValueError):
    """Raised on corrupt or incompatible containers."""


@dataclass
class Bitstream:
    config_id: int
    lambda_index: int
    height: int
    width: int
    prompt: str
    sigma: float
    eta: float
    z_payload: bytes
    y_payload: bytes
    version: int = VERSION

    def to_bytes(self):
        prompt = self.prompt.encode("utf-8")
        if len(prompt) > 0xFFFF:
            raise BitstreamError("prompt too long for container")
        head = struct.pack(
            ">4sBBBHHH",
            MAGIC, self.version, self.config_id, self.lambda_index,
            self.height, self.width, len(prompt),
        )
        tail = struct.pack(
            ">HHI", round(self.sigma * _FIXED_POINT), round(self.eta * _FIXED_POINT),
            len(self.z_payload),
        )
        return (head + prompt + tail + self.z_payload
                + struct.pack(">I", len(self.y_payload)) + self.y_payload)

    @classmethod
    def from_bytes(cls, data):
        try:
            magic, version, config_id, lambda_index, height, width, plen = (
                struct.unpack_from(">4sBBBHHH", data, 0))
        except struct.error as exc:
            raise BitstreamError("truncated container header") from exc
        if magic != MAGIC:
            raise BitstreamError("bad magic bytes")
        if version != VERSION:
            raise BitstreamError(f"unsupported container version {version}")
        pos = struct.calcsize(">4sBBBHHH")
        try:
            prompt = data[pos:pos + plen].decode("utf-8")
            if len(data[pos:pos + plen]) != plen:
                raise BitstreamError("truncated prompt")
            pos += plen
            sigma_q, eta_q, zlen = struct.unpack_from(">HHI", data, pos)
            pos += struct.calcsize(">HHI")
            z_payload = bytes(data[pos:pos + zlen])
            if len(z_payload) != zlen:
                raise BitstreamError("truncated z payload")
            pos += zlen
            (ylen,) = struct.unpack_from(">I", data, pos)
            pos += 4
            y_payload = bytes(data[pos:pos + ylen])
            if len(y_payload) != ylen:
                raise BitstreamError("truncated y payload")
            pos += ylen
        except (struct.error, UnicodeDecodeError) as exc:
            raise BitstreamError("corrupt container") from exc
        if pos != len(data):
            raise BitstreamError("trailing bytes after container")
        return cls(
            config_id=config_id, lambda_index=lambda_index,
            height=height, width=width, prompt=prompt,
            sigma=sigma_q / _FIXED_POINT, eta=eta_q / _FIXED_POINT,
            z_payload=z_payload, y_payload=y_payload, version=version,
        )

    def __len__(self):
        return len(self.to_bytes())
