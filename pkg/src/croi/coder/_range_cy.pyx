# cython: boundscheck=False, wraparound=False, cdivision=True
"""Cython range coder kernel; byte-identical twin of ``_range_py``."""

import zlib

import numpy as np

from ._range_py import DecodeError

cimport numpy as cnp
from libc.stdint cimport int32_t, int64_t, uint8_t, uint64_t

cnp.import_array()

cdef enum:
    STATE_SIZE = 32

cdef uint64_t MAX_RANGE = (<uint64_t>1) << STATE_SIZE
cdef uint64_t MASK = MAX_RANGE - 1
cdef uint64_t TOP_MASK = MAX_RANGE >> 1
cdef uint64_t SECOND_MASK = MAX_RANGE >> 2


cdef class _Coder:
    cdef uint64_t low, high
    cdef int underflow
    cdef bytearray buf
    cdef int acc, nbits


cdef class _Encoder(_Coder):

    def __cinit__(self):
        self.low = 0
        self.high = MASK
        self.underflow = 0
        self.buf = bytearray()
        self.acc = 0
        self.nbits = 0

    cdef inline void _write(self, int bit):
        self.acc = (self.acc << 1) | bit
        self.nbits += 1
        if self.nbits == 8:
            self.buf.append(self.acc)
            self.acc = 0
            self.nbits = 0

    cdef inline void _renorm(self):
        cdef int bit, inv
        while ((self.low ^ self.high) & TOP_MASK) == 0:
            bit = <int>(self.low >> (STATE_SIZE - 1))
            self._write(bit)
            inv = bit ^ 1
            while self.underflow:
                self._write(inv)
                self.underflow -= 1
            self.low = (self.low << 1) & MASK
            self.high = ((self.high << 1) & MASK) | 1
        while (self.low & (~self.high) & SECOND_MASK) != 0:
            self.underflow += 1
            self.low = (self.low << 1) & (MASK >> 1)
            self.high = ((self.high << 1) & (MASK >> 1)) | TOP_MASK | 1

    cdef inline void _encode(self, uint64_t sym_low, uint64_t sym_high, uint64_t total):
        cdef uint64_t low = self.low
        cdef uint64_t rng = self.high - low + 1
        self.low = low + sym_low * rng // total
        self.high = low + sym_high * rng // total - 1
        self._renorm()

    cdef inline void _encode_raw(self, uint64_t value, int nbits):
        cdef int i, bit
        cdef uint64_t low, half
        for i in range(nbits - 1, -1, -1):
            bit = <int>((value >> i) & 1)
            low = self.low
            half = (self.high - low + 1) >> 1
            if bit:
                self.low = low + half
            else:
                self.high = low + half - 1
            self._renorm()

    cdef bytes _finish(self):
        self._write(1)
        if self.nbits:
            self.buf.append(self.acc << (8 - self.nbits))
        return bytes(self.buf)


cdef class _Decoder(_Coder):
    cdef const uint8_t[::1] data
    cdef Py_ssize_t pos
    cdef uint64_t code

    def __cinit__(self, const uint8_t[::1] data):
        cdef int i
        self.data = data
        self.pos = 0
        self.acc = 0
        self.nbits = 0
        self.low = 0
        self.high = MASK
        self.code = 0
        for i in range(STATE_SIZE):
            self.code = (self.code << 1) | self._read()

    cdef inline int _read(self):
        if self.nbits == 0:
            if self.pos >= self.data.shape[0]:
                return 0
            self.acc = self.data[self.pos]
            self.pos += 1
            self.nbits = 8
        self.nbits -= 1
        return (self.acc >> self.nbits) & 1

    cdef inline void _renorm(self):
        while ((self.low ^ self.high) & TOP_MASK) == 0:
            self.code = ((self.code << 1) & MASK) | self._read()
            self.low = (self.low << 1) & MASK
            self.high = ((self.high << 1) & MASK) | 1
        while (self.low & (~self.high) & SECOND_MASK) != 0:
            self.code = (self.code & TOP_MASK) | ((self.code << 1) & (MASK >> 1)) | self._read()
            self.low = (self.low << 1) & (MASK >> 1)
            self.high = ((self.high << 1) & (MASK >> 1)) | TOP_MASK | 1

    cdef inline int _decode(self, const int32_t[:] cdf, int nsym, uint64_t total):
        cdef uint64_t rng = self.high - self.low + 1
        cdef uint64_t offset = self.code - self.low
        cdef uint64_t value = ((offset + 1) * total - 1) // rng
        cdef int lo = 0, hi = nsym, mid
        while hi - lo > 1:
            mid = (lo + hi) >> 1
            if <uint64_t>cdf[mid] > value:
                hi = mid
            else:
                lo = mid
        cdef uint64_t low = self.low
        self.low = low + <uint64_t>cdf[lo] * rng // total
        self.high = low + <uint64_t>cdf[lo + 1] * rng // total - 1
        self._renorm()
        return lo

    cdef inline uint64_t _decode_raw(self, int nbits):
        cdef uint64_t value = 0, half, mid
        cdef int i, bit
        for i in range(nbits):
            half = (self.high - self.low + 1) >> 1
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


def encode_symbols(symbols, indexes, cdfs, cdf_sizes, offsets):
    cdef cnp.ndarray[int64_t, ndim=1] syms = np.ascontiguousarray(
        np.asarray(symbols, dtype=np.int64).ravel())
    cdef cnp.ndarray[int64_t, ndim=1] idx = np.ascontiguousarray(
        np.asarray(indexes, dtype=np.int64).ravel())
    if syms.shape[0] != idx.shape[0]:
        raise ValueError("symbols and indexes must have equal length")
    cdef cnp.ndarray[int32_t, ndim=2] tabs = np.ascontiguousarray(
        np.asarray(cdfs, dtype=np.int32))
    cdef cnp.ndarray[int32_t, ndim=1] sizes = np.ascontiguousarray(
        np.asarray(cdf_sizes, dtype=np.int32))
    cdef cnp.ndarray[int32_t, ndim=1] offs = np.ascontiguousarray(
        np.asarray(offsets, dtype=np.int32))
    cdef _Encoder enc = _Encoder()
    cdef Py_ssize_t i, n = syms.shape[0]
    cdef int64_t value, t
    cdef int nsym, sym
    cdef uint64_t total
    for i in range(n):
        value = syms[i]
        t = idx[i]
        nsym = sizes[t] - 1
        total = <uint64_t>tabs[t, nsym]
        sym = <int>(value - offs[t])
        if 0 <= sym < nsym - 1:
            enc._encode(<uint64_t>tabs[t, sym], <uint64_t>tabs[t, sym + 1], total)
        else:
            enc._encode(<uint64_t>tabs[t, nsym - 1], <uint64_t>tabs[t, nsym], total)
            enc._encode_raw(<uint64_t>(value & 0xFFFFFFFF), 32)
    enc._encode_raw(<uint64_t>zlib.crc32(syms.astype(np.int32).tobytes()), 32)
    return enc._finish()


def decode_symbols(data, n, indexes, cdfs, cdf_sizes, offsets):
    cdef cnp.ndarray[int64_t, ndim=1] idx = np.ascontiguousarray(
        np.asarray(indexes, dtype=np.int64).ravel())
    if idx.shape[0] != n:
        raise ValueError("indexes length must equal symbol count")
    cdef cnp.ndarray[int32_t, ndim=2] tabs = np.ascontiguousarray(
        np.asarray(cdfs, dtype=np.int32))
    cdef cnp.ndarray[int32_t, ndim=1] sizes = np.ascontiguousarray(
        np.asarray(cdf_sizes, dtype=np.int32))
    cdef cnp.ndarray[int32_t, ndim=1] offs = np.ascontiguousarray(
        np.asarray(offsets, dtype=np.int32))
    cdef cnp.ndarray[int32_t, ndim=1] out = np.empty(n, dtype=np.int32)
    cdef _Decoder dec = _Decoder(bytes(data))
    cdef Py_ssize_t i
    cdef int64_t t, raw
    cdef int nsym, sym
    cdef uint64_t total
    for i in range(n):
        t = idx[i]
        nsym = sizes[t] - 1
        total = <uint64_t>tabs[t, nsym]
        sym = dec._decode(tabs[t], nsym, total)
        if sym == nsym - 1:
            raw = <int64_t>dec._decode_raw(32)
            if raw >= (<int64_t>1) << 31:
                raw -= (<int64_t>1) << 32
            out[i] = <int32_t>raw
        else:
            out[i] = sym + offs[t]
    if dec._decode_raw(32) != <uint64_t>zlib.crc32(out.tobytes()):
        raise DecodeError("range-coded stream failed its checksum")
    return out
