"""Classical post-processing: downgrading n-ary streams to bits, XOR
combination, von Neumann debiasing, and bit packing."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SymbolStream",
    "BitStream",
    "Equipartition",
    "eliminate",
    "identify",
    "xor_combine",
    "von_neumann_debias",
    "pack_bits",
    "unpack_bits",
]


@dataclass(frozen=True, eq=False)
class SymbolStream:
    """Sequence of integer symbols from the alphabet {0, ..., alphabet_size-1}."""

    alphabet_size: int
    symbols: np.ndarray

    def __post_init__(self):
        if self.alphabet_size < 2:
            raise ValueError("SymbolStream: alphabet size must be >= 2")
        symbols = np.asarray(self.symbols)
        if symbols.ndim != 1 or not np.issubdtype(symbols.dtype, np.integer):
            symbols = np.array(self.symbols, dtype=np.int64)
            if symbols.ndim != 1:
                raise ValueError("SymbolStream: symbols must be a 1-d integer sequence")
        if symbols.size and (symbols.min() < 0 or symbols.max() >= self.alphabet_size):
            raise ValueError("SymbolStream: symbol out of alphabet range")
        symbols = np.ascontiguousarray(symbols, dtype=np.int64)
        symbols.setflags(write=False)
        object.__setattr__(self, "symbols", symbols)

    def __len__(self) -> int:
        return self.symbols.size


@dataclass(frozen=True, eq=False)
class BitStream:
    """Sequence of bits stored as uint8 values 0 and 1."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.ascontiguousarray(self.bits, dtype=np.uint8)
        if bits.ndim != 1:
            raise ValueError("BitStream: bits must be a 1-d sequence")
        if bits.size and bits.max() > 1:
            raise ValueError("BitStream: values must be 0 or 1")
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    def __len__(self) -> int:
        return self.bits.size


@dataclass(frozen=True)
class Equipartition:
    """Split of an even alphabet into two equal-size classes mapping to 0 / 1."""

    class_zero: frozenset
    class_one: frozenset

    def __post_init__(self):
        zero = frozenset(int(s) for s in self.class_zero)
        one = frozenset(int(s) for s in self.class_one)
        if not zero or not one:
            raise ValueError("Equipartition: classes must be nonempty")
        if zero & one:
            raise ValueError("Equipartition: classes must be disjoint")
        if len(zero) != len(one):
            raise ValueError("Equipartition: classes must have equal size")
        object.__setattr__(self, "class_zero", zero)
        object.__setattr__(self, "class_one", one)

    def covers(self, alphabet_size: int) -> bool:
        return (self.class_zero | self.class_one) == set(range(alphabet_size))


def eliminate(stream: SymbolStream, keep: tuple[int, int]) -> BitStream:
    """Drop every symbol except the two in `keep`, preserving order.

    The first kept symbol maps to 0, the second to 1.
    """
    keep_zero, keep_one = (int(keep[0]), int(keep[1]))
    if keep_zero == keep_one:
        raise ValueError("eliminate: kept symbols must be distinct")
    for sym in (keep_zero, keep_one):
        if not 0 <= sym < stream.alphabet_size:
            raise ValueError(f"eliminate: kept symbol {sym} outside alphabet")
    symbols = stream.symbols
    mask = (symbols == keep_zero) | (symbols == keep_one)
    return BitStream((symbols[mask] == keep_one).astype(np.uint8))


def identify(stream: SymbolStream, partition: Equipartition) -> BitStream:
    """Map each symbol to its partition class (0 or 1), preserving length.

    Requires an even alphabet fully covered by the partition; for odd
    alphabets, eliminate one symbol first.
    """
    n = stream.alphabet_size
    if n % 2 != 0:
        raise ValueError("identify: alphabet size must be even (eliminate a symbol first)")
    if not partition.covers(n):
        raise ValueError("identify: partition does not cover the alphabet exactly")
    lut = np.zeros(n, dtype=np.uint8)
    lut[list(partition.class_one)] = 1
    return BitStream(lut[stream.symbols])


def xor_combine(a: BitStream, b: BitStream) -> BitStream:
    """Bitwise sum mod 2 of two equal-length streams."""
    if len(a) != len(b):
        raise ValueError(f"xor_combine: lengths differ ({len(a)} vs {len(b)})")
    return BitStream(np.bitwise_xor(a.bits, b.bits))


def von_neumann_debias(stream: BitStream) -> BitStream:
    """Classical debiasing on non-overlapping pairs: 01 -> 0, 10 -> 1.

    Equal pairs and a trailing odd bit are discarded. Pairing is positional,
    so chunked processing must split at even offsets.
    """
    bits = stream.bits
    even_len = bits.size - (bits.size % 2)
    first = bits[0:even_len:2]
    second = bits[1:even_len:2]
    return BitStream(first[first != second])


def pack_bits(stream: BitStream) -> bytes:
    """Pack bits MSB-first into bytes; the final partial byte is zero-padded."""
    return np.packbits(stream.bits).tobytes()


def unpack_bits(data: bytes, bit_length: int) -> BitStream:
    """Inverse of pack_bits given the recorded bit length."""
    if bit_length < 0:
        raise ValueError("unpack_bits: bit length must be nonnegative")
    if (bit_length + 7) // 8 != len(data):
        raise ValueError(
            f"unpack_bits: bit length {bit_length} inconsistent with {len(data)} bytes"
        )
    raw = np.frombuffer(data, dtype=np.uint8)
    return BitStream(np.unpackbits(raw, count=bit_length))
