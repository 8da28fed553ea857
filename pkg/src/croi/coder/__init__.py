"""Range coder with a compiled kernel and a pure-Python fallback.

The Cython extension is preferred when it imports; set
``CROI_CODER=python`` to force the fallback (the two produce
byte-identical streams).
"""

import os

from . import _range_py
from ._range_py import DecodeError

if os.environ.get("CROI_CODER", "").lower() == "python":
    _impl = _range_py
    BACKEND = "python"
else:
    try:
        from . import _range_cy as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _range_py
        BACKEND = "python"

encode_symbols = _impl.encode_symbols
decode_symbols = _impl.decode_symbols

__all__ = ["encode_symbols", "decode_symbols", "DecodeError", "BACKEND"]
