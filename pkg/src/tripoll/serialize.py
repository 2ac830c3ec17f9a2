"""Byte-level encoding of RPC arguments.

Every value is a one-byte tag followed by a little-endian body.  Strings
and containers carry a ``u32`` length prefix.  Homogeneous lists of ints,
floats or ``None`` take a packed fast path, which is what keeps adjacency
payloads cheap to move around.
"""

from __future__ import annotations

import struct
import sys
from array import array

__all__ = ["SerializationError", "dumps", "loads"]


class SerializationError(ValueError):
    """Raised when a value cannot be encoded or a byte string is malformed."""


T_NONE = 0
T_I64 = 1
T_U64 = 2
T_F64 = 3
T_STR = 4
T_BYTES = 5
T_TUPLE = 6
T_LIST = 7
T_I64_ARRAY = 8
T_F64_ARRAY = 9
T_NONE_ARRAY = 10
T_BOOL = 11

_I64_MIN = -(1 << 63)
_I64_MAX = (1 << 63) - 1
_U64_MAX = (1 << 64) - 1

_u32 = struct.Struct("<I")
_i64 = struct.Struct("<q")
_u64 = struct.Struct("<Q")
_f64 = struct.Struct("<d")
_tag_u32 = struct.Struct("<BI")
_tag_i64 = struct.Struct("<Bq")

_BIG_ENDIAN = sys.byteorder == "big"
_NoneType = type(None)


def dumps(value) -> bytes:
    out = bytearray()
    _encode(value, out)
    return bytes(out)


def loads(data: bytes | bytearray | memoryview):
    value, offset = _decode(memoryview(data), 0)
    if offset != len(data):
        raise SerializationError(f"{len(data) - offset} trailing bytes after value")
    return value


def _packed(typecode: str, values: list) -> bytes:
    arr = array(typecode, values)
    if _BIG_ENDIAN:
        arr.byteswap()
    return arr.tobytes()


def _encode(value, out: bytearray) -> None:
    t = type(value)
    if t is int:
        if _I64_MIN <= value <= _I64_MAX:
            out += _tag_i64.pack(T_I64, value)
        elif 0 <= value <= _U64_MAX:
            out.append(T_U64)
            out += _u64.pack(value)
        else:
            raise SerializationError(f"integer {value} does not fit in 64 bits")
    elif t is str:
        raw = value.encode("utf-8")
        out += _tag_u32.pack(T_STR, len(raw))
        out += raw
    elif value is None:
        out.append(T_NONE)
    elif t is float:
        out.append(T_F64)
        out += _f64.pack(value)
    elif t is list:
        _encode_list(value, out)
    elif t is tuple:
        out += _tag_u32.pack(T_TUPLE, len(value))
        _encode_items(value, out)
    elif t is bool:
        out.append(T_BOOL)
        out.append(1 if value else 0)
    elif t is bytes or t is bytearray:
        out += _tag_u32.pack(T_BYTES, len(value))
        out += value
    else:
        raise SerializationError(f"cannot serialize value of type {t.__name__}")


def _encode_list(value: list, out: bytearray) -> None:
    n = len(value)
    if n:
        types = set(map(type, value))
        if len(types) == 1:
            (t,) = types
            if t is int:
                try:
                    body = _packed("q", value)
                except OverflowError:
                    body = None
                if body is not None:
                    out += _tag_u32.pack(T_I64_ARRAY, n)
                    out += body
                    return
            elif t is float:
                out += _tag_u32.pack(T_F64_ARRAY, n)
                out += _packed("d", value)
                return
            elif t is _NoneType:
                out += _tag_u32.pack(T_NONE_ARRAY, n)
                return
    out += _tag_u32.pack(T_LIST, n)
    _encode_items(value, out)


def _encode_items(items, out: bytearray) -> None:
    # RPC argument tuples are mostly small ints and lists; keep those off the recursive path
    pack_int = _tag_i64.pack
    for item in items:
        t = type(item)
        if t is int and _I64_MIN <= item <= _I64_MAX:
            out += pack_int(T_I64, item)
        elif t is list:
            _encode_list(item, out)
        else:
            _encode(item, out)


def _unpacked(typecode: str, raw) -> list:
    arr = array(typecode)
    arr.frombytes(raw)
    if _BIG_ENDIAN:
        arr.byteswap()
    return arr.tolist()


def _decode(buf: memoryview, offset: int):
    try:
        tag = buf[offset]
    except IndexError:
        raise SerializationError("truncated input: missing tag") from None
    offset += 1
    try:
        if tag == T_I64:
            return _i64.unpack_from(buf, offset)[0], offset + 8
        if tag == T_STR:
            (n,) = _u32.unpack_from(buf, offset)
            offset += 4
            end = offset + n
            if end > len(buf):
                raise SerializationError("truncated string")
            return str(buf[offset:end], "utf-8"), end
        if tag == T_NONE:
            return None, offset
        if tag == T_F64:
            return _f64.unpack_from(buf, offset)[0], offset + 8
        if tag == T_I64_ARRAY or tag == T_F64_ARRAY:
            (n,) = _u32.unpack_from(buf, offset)
            offset += 4
            end = offset + 8 * n
            if end > len(buf):
                raise SerializationError("truncated array")
            return _unpacked("q" if tag == T_I64_ARRAY else "d", buf[offset:end]), end
        if tag == T_LIST or tag == T_TUPLE:
            (n,) = _u32.unpack_from(buf, offset)
            offset += 4
            items = []
            append = items.append
            unpack_i64 = _i64.unpack_from
            for _ in range(n):
                t = buf[offset]
                if t == T_I64:
                    append(unpack_i64(buf, offset + 1)[0])
                    offset += 9
                elif t == T_I64_ARRAY and not _BIG_ENDIAN:
                    (m,) = _u32.unpack_from(buf, offset + 1)
                    offset += 5
                    end = offset + 8 * m
                    if end > len(buf):
                        raise SerializationError("truncated array")
                    arr = array("q")
                    arr.frombytes(buf[offset:end])
                    append(arr.tolist())
                    offset = end
                elif t == T_STR:
                    (m,) = _u32.unpack_from(buf, offset + 1)
                    offset += 5
                    end = offset + m
                    if end > len(buf):
                        raise SerializationError("truncated string")
                    append(str(buf[offset:end], "utf-8"))
                    offset = end
                else:
                    item, offset = _decode(buf, offset)
                    append(item)
            return (items if tag == T_LIST else tuple(items)), offset
        if tag == T_NONE_ARRAY:
            (n,) = _u32.unpack_from(buf, offset)
            return [None] * n, offset + 4
        if tag == T_U64:
            return _u64.unpack_from(buf, offset)[0], offset + 8
        if tag == T_BOOL:
            return buf[offset] != 0, offset + 1
        if tag == T_BYTES:
            (n,) = _u32.unpack_from(buf, offset)
            offset += 4
            end = offset + n
            if end > len(buf):
                raise SerializationError("truncated bytes")
            return bytes(buf[offset:end]), end
    except (struct.error, IndexError) as exc:
        raise SerializationError(f"truncated input at offset {offset}") from exc
    except UnicodeDecodeError as exc:
        raise SerializationError(f"invalid utf-8 at offset {offset}") from exc
    raise SerializationError(f"unknown tag {tag} at offset {offset - 1}")
