"""Pure-Python range coder kernel.

Binary arithmetic coder over 16-bit fixed-point cumulative frequency
tables, in the classic 32-bit low/high formulation.  Symbols are coded
against per-element tables selected by an index array; the last symbol
of every table is an escape, followed by the out-of-range value as 32
raw (bypass) bits.

This module is the fallback twin of the Cython kernel in
``_range_cy.pyx``; both must produce byte-identical streams.
"""

import zlib

import numpy as np


class DecodeError(ValueError):
    """The stream is corrupt (checksum mismatch after decoding)."""


STATE_SIZE = 32
MAX_RANGE = 1 << STATE_SIZE
MIN_RANGE = (MAX_RANGE >> 2) + 2
MASK = MAX_RANGE - 1
TOP_MASK = MAX_RANGE >> 1
SECOND_MASK = TOP_MASK >> 1

_RAW_BITS = 32


class _BitWriter:
    def __init__(self):
        self.buf = bytearray()
        self.acc = 0
        self.nbits = 0

    def write(self, bit):
        self.acc = (self.acc << 1) | bit
        self.nbits += 1
        if self.nbits == 8:
            self.buf.append(self.acc)
            self.acc = 0
            self.nbits = 0

    def getvalue(self):
        if self.nbits:
            return bytes(self.buf) + bytes([self.acc << (8 - self.nbits)])
        return bytes(self.buf)


class _BitReader:
    """Reads bits MSB-first; returns 0 past the end of the stream."""

    def __init__(self, data):
        self.data = data
        self.pos = 0
        self.acc = 0
        self.nbits = 0

    def read(self):
        if self.nbits == 0:
            if self.pos >= len(self.data):
                return 0
            self.acc = self.data[self.pos]
            self.pos += 1
            self.nbits = 8
        self.nbits -= 1
        return (self.acc >> self.nbits) & 1


class Encoder:
    def __init__(self):
        self.low = 0
        self.high = MASK
        self.underflow = 0
        self.out = _BitWriter()

    def encode(self, cdf, sym_lo, sym_hi, total):
        low = self.low
        high = self.high
        rng = high - low + 1
        sym_low = int(cdf[sym_lo])
        sym_high = int(cdf[sym_hi])
        self.low = low + sym_low * rng // total
        self.high = low + sym_high * rng // total - 1
        self._renorm()

    def encode_raw(self, value, nbits=_RAW_BITS):
        # Bypass path: each bit coded against the uniform 2-symbol table.
        for i in range(nbits - 1, -1, -1):
            bit = (value >> i) & 1
            low = self.low
            rng = self.high - low + 1
            half = rng >> 1
            if bit:
                self.low = low + half
            else:
                self.high = low + half - 1
            self._renorm()

    def _renorm(self):
        while ((self.low ^ self.high) & TOP_MASK) == 0:
            bit = self.low >> (STATE_SIZE - 1)
            self.out.write(bit)
            inv = bit ^ 1
            while self.underflow:
                self.out.write(inv)
                self.underflow -= 1
            self.low = (self.low << 1) & MASK
            self.high = ((self.high << 1) & MASK) | 1
        while (self.low & ~self.high & SECOND_MASK) != 0:
            self.underflow += 1
            self.low = (self.low << 1) & (MASK >> 1)
            self.high = ((self.high << 1) & (MASK >> 1)) | TOP_MASK | 1

    def finish(self):
        self.out.write(1)
        return self.out.getvalue()


class Decoder:
    def __init__(self, data):
        self.inp = _BitReader(data)
        self.low = 0
        self.high = MASK
        self.code = 0
        for _ in range(STATE_SIZE):
            self.code = (self.code << 1) | self.inp.read()

    def decode(self, cdf, nsym, total):
        rng = self.high - self.low + 1
        offset = self.code - self.low
        value = ((offset + 1) * total - 1) // rng
        # Largest symbol with cdf[sym] <= value.
        lo, hi = 0, nsym
        while hi - lo > 1:
            mid = (lo + hi) >> 1
            if cdf[mid] > value:
                hi = mid
            else:
                lo = mid
        sym = lo
        low = self.low
        self.low = low + int(cdf[sym]) * rng // total
        self.high = low + int(cdf[sym + 1]) * rng // total - 1
        self._renorm()
        return sym

    def decode_raw(self, nbits=_RAW_BITS):
        value = 0
        for _ in range(nbits):
            rng = self.high - self.low + 1
            half = rng >> 1
            mid = self.low + half
            if self.code >= mid:
                bit = 1
                self.low = mid
            else:
                bit = 0
                self.high = mid - 1
            value = (value << 1) | bit
            self._renorm()
        return value

    def _renorm(self):
        while ((self.low ^ self.high) & TOP_MASK) == 0:
            self.code = ((self.code << 1) & MASK) | self.inp.read()
            self.low = (self.low << 1) & MASK
            self.high = ((self.high << 1) & MASK) | 1
        while (self.low & ~self.high & SECOND_MASK) != 0:
            self.code = (self.code & TOP_MASK) | ((self.code << 1) & (MASK >> 1)) | self.inp.read()
            self.low = (self.low << 1) & (MASK >> 1)
            self.high = ((self.high << 1) & (MASK >> 1)) | TOP_MASK | 1


def encode_symbols(symbols, indexes, cdfs, cdf_sizes, offsets):
    """Encode centered integer symbols against per-element tables.

    ``cdfs[t, :cdf_sizes[t]]`` is a non-decreasing table ending at the
    fixed-point total; table ``t`` covers values ``offsets[t] ..
    offsets[t] + cdf_sizes[t] - 3`` with the final symbol reserved for
    escapes.
    """
    symbols = np.asarray(symbols, dtype=np.int64).ravel()
    indexes = np.asarray(indexes, dtype=np.int64).ravel()
    if symbols.shape != indexes.shape:
        raise ValueError("symbols and indexes must have equal length")
    enc = Encoder()
    for value, t in zip(symbols.tolist(), indexes.tolist()):
        size = int(cdf_sizes[t])
        nsym = size - 1
        total = int(cdfs[t, nsym])
        sym = value - int(offsets[t])
        if 0 <= sym < nsym - 1:
            enc.encode(cdfs[t], sym, sym + 1, total)
        else:
            enc.encode(cdfs[t], nsym - 1, nsym, total)
            enc.encode_raw(value & 0xFFFFFFFF)
    enc.encode_raw(zlib.crc32(symbols.astype(np.int32).tobytes()))
    return enc.finish()


def decode_symbols(data, n, indexes, cdfs, cdf_sizes, offsets):
    """Inverse of :func:`encode_symbols`; returns an int32 array."""
    indexes = np.asarray(indexes, dtype=np.int64).ravel()
    if len(indexes) != n:
        raise ValueError("indexes length must equal symbol count")
    out = np.empty(n, dtype=np.int32)
    dec = Decoder(data)
    for pos, t in enumerate(indexes.tolist()):
        size = int(cdf_sizes[t])
        nsym = size - 1
        total = int(cdfs[t, nsym])
        sym = dec.decode(cdfs[t], nsym, total)
        if sym == nsym - 1:
            raw = dec.decode_raw()
            if raw >= 1 << 31:
                raw -= 1 << 32
            out[pos] = raw
        else:
            out[pos] = sym + int(offsets[t])
    if dec.decode_raw() != zlib.crc32(out.tobytes()):
        raise DecodeError("range-coded stream failed its checksum")
    return out
