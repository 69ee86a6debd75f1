"""Bijective bitstring encodings of line configurations.

Three schemes map triples of a reduced three-body space to fixed-length
bitstrings (basic positional, per-stage Gray, production-guided Gray), plus a
field-wise Gray scheme over the raw 12-body parameters. Bitstrings are
strings of '0'/'1', big-endian within each field. Every decode either yields
a valid state or returns ``None`` (the invalid-state signal); it never
raises on well-formed input of the right length.
"""

from __future__ import annotations

from typing import Sequence

from .freestage import ReducedSpace
from .simulate import LineConfig, ShopState

N_SHIFT_OPTIONS = 15
N_RATE_OPTIONS = 5
SHIFT_FIELD_BITS = 4
RATE_FIELD_BITS = 3
TWELVE_BODY_BITS = 6 * SHIFT_FIELD_BITS + 6 * RATE_FIELD_BITS  # 42


def gray_code(n: int) -> int:
    """Reflected binary Gray code of a nonnegative integer."""
    if n < 0:
        raise ValueError("gray_code of a negative integer")
    return n ^ (n >> 1)


def gray_inverse(g: int) -> int:
    """Inverse of ``gray_code``."""
    if g < 0:
        raise ValueError("gray_inverse of a negative integer")
    n = g
    shift = 1
    while (n >> shift) > 0:
        n ^= n >> shift
        shift <<= 1
    return n


def field_width(size: int) -> int:
    """Bits needed to index ``size`` values: ceil(log2(size)); 0 for size 1."""
    if size < 1:
        raise ValueError("size must be >= 1")
    return (size - 1).bit_length()


def int_to_bits(value: int, width: int) -> str:
    if value < 0 or value >= (1 << width):
        raise ValueError(f"value {value} does not fit in {width} bits")
    return format(value, f"0{width}b") if width else ""


def bits_to_int(bits: str) -> int:
    return int(bits, 2) if bits else 0


def _check_bits(bits: str, expected: int) -> None:
    if len(bits) != expected:
        raise ValueError(f"expected {expected} bits, got {len(bits)}")
    if bits and set(bits) - {"0", "1"}:
        raise ValueError("bitstring may contain only 0 and 1")


# ---------------------------------------------------------------------------
# basic: single flat index, binary
# ---------------------------------------------------------------------------

def basic_width(space: ReducedSpace) -> int:
    return field_width(space.total_size)


def encode_basic(space: ReducedSpace, triple: Sequence[int]) -> str:
    return int_to_bits(space.flat_index(triple), basic_width(space))


def decode_basic(space: ReducedSpace, bits: str) -> tuple[int, int, int] | None:
    _check_bits(bits, basic_width(space))
    flat = bits_to_int(bits)
    if flat >= space.total_size:
        return None
    return space.triple_at(flat)


# ---------------------------------------------------------------------------
# gray: per-stage Gray fields, concatenated
# ---------------------------------------------------------------------------

def gray_widths(space: ReducedSpace) -> tuple[int, int, int]:
    return tuple(field_width(s) for s in space.sizes)  # type: ignore[return-value]


def encode_gray(space: ReducedSpace, triple: Sequence[int]) -> str:
    widths = gray_widths(space)
    sizes = space.sizes
    parts = []
    for k in range(3):
        if not 0 <= triple[k] < sizes[k]:
            raise ValueError(f"stage {k + 1} index {triple[k]} outside 0..{sizes[k] - 1}")
        parts.append(int_to_bits(gray_code(triple[k]), widths[k]))
    return "".join(parts)


def decode_gray(space: ReducedSpace, bits: str) -> tuple[int, int, int] | None:
    widths = gray_widths(space)
    _check_bits(bits, sum(widths))
    sizes = space.sizes
    triple = []
    pos = 0
    for k in range(3):
        value = gray_inverse(bits_to_int(bits[pos : pos + widths[k]]))
        pos += widths[k]
        if value >= sizes[k]:
            return None
        triple.append(value)
    return tuple(triple)  # type: ignore[return-value]


# ---------------------------------------------------------------------------
# pggray: production-guided reordering, then per-stage Gray
# ---------------------------------------------------------------------------

class PgTables:
    """Production-guided stage orderings for one reduced space.

    Stage 1 is ordered by distance of its estimate from the annual target.
    Later stages are ordered by distance from the estimate of the triple's
    first-stage state (or, with ``chain=True``, stage 3 follows stage 2).
    Conditional orders are materialized lazily and memoized; construction is
    idempotent so concurrent first access is safe.
    """

    def __init__(self, space: ReducedSpace, chain: bool = False):
        self.space = space
        self.chain = chain
        est = space.stage_estimates
        self._est = (est(1), est(2), est(3))
        target = space.annual_target
        e1 = self._est[0]
        self.stage1_order: tuple[int, ...] = tuple(
            sorted(range(len(e1)), key=lambda i: (abs(e1[i] - target), i))
        )
        self.stage1_rank: dict[int, int] = {p: r for r, p in enumerate(self.stage1_order)}
        self._cond: dict[tuple[int, int], tuple[tuple[int, ...], dict[int, int]]] = {}

    def _conditional(self, stage: int, key_estimate: float) -> tuple[tuple[int, ...], dict[int, int]]:
        e = self._est[stage - 1]
        order = tuple(sorted(range(len(e)), key=lambda i: (abs(e[i] - key_estimate), i)))
        return order, {p: r for r, p in enumerate(order)}

    def stage_order(self, stage: int, anchor_position: int) -> tuple[tuple[int, ...], dict[int, int]]:
        """Order (rank -> position) and rank lookup for stage 2 or 3,
        conditioned on the anchor stage's position."""
        key = (stage, anchor_position)
        cached = self._cond.get(key)
        if cached is None:
            anchor_stage = 0 if (stage == 2 or not self.chain) else 1
            cached = self._conditional(stage, float(self._est[anchor_stage][anchor_position]))
            self._cond[key] = cached
        return cached


def build_pg_order(space: ReducedSpace, chain: bool = False) -> PgTables:
    return PgTables(space, chain=chain)


def encode_pggray(space: ReducedSpace, triple: Sequence[int], tables: PgTables | None = None) -> str:
    if tables is None:
        tables = PgTables(space)
    widths = gray_widths(space)
    sizes = space.sizes
    i1, i2, i3 = triple
    for k, i in enumerate((i1, i2, i3)):
        if not 0 <= i < sizes[k]:
            raise ValueError(f"stage {k + 1} index {i} outside 0..{sizes[k] - 1}")
    r1 = tables.stage1_rank[i1]
    r2 = tables.stage_order(2, i1)[1][i2]
    r3 = tables.stage_order(3, i2 if tables.chain else i1)[1][i3]
    return (
        int_to_bits(gray_code(r1), widths[0])
        + int_to_bits(gray_code(r2), widths[1])
        + int_to_bits(gray_code(r3), widths[2])
    )


def decode_pggray(
    space: ReducedSpace, bits: str, tables: PgTables | None = None
) -> tuple[int, int, int] | None:
    if tables is None:
        tables = PgTables(space)
    widths = gray_widths(space)
    _check_bits(bits, sum(widths))
    sizes = space.sizes
    ranks = []
    pos = 0
    for k in range(3):
        r = gray_inverse(bits_to_int(bits[pos : pos + widths[k]]))
        pos += widths[k]
        if r >= sizes[k]:
            return None
        ranks.append(r)
    i1 = tables.stage1_order[ranks[0]]
    i2 = tables.stage_order(2, i1)[0][ranks[1]]
    i3 = tables.stage_order(3, i2 if tables.chain else i1)[0][ranks[2]]
    return (i1, i2, i3)


# ---------------------------------------------------------------------------
# 12-body field-wise Gray (no-knowledge formulation)
# ---------------------------------------------------------------------------

def encode_12body(config: LineConfig) -> str:
    parts = []
    for shop in config.shops:
        if not 1 <= shop.shift_id <= N_SHIFT_OPTIONS:
            raise ValueError(f"shift id {shop.shift_id} outside 1..{N_SHIFT_OPTIONS}")
        parts.append(int_to_bits(gray_code(shop.shift_id - 1), SHIFT_FIELD_BITS))
    for shop in config.shops:
        if not 1 <= shop.rate_id <= N_RATE_OPTIONS:
            raise ValueError(f"rate id {shop.rate_id} outside 1..{N_RATE_OPTIONS}")
        parts.append(int_to_bits(gray_code(shop.rate_id - 1), RATE_FIELD_BITS))
    return "".join(parts)


def decode_12body(bits: str) -> LineConfig | None:
    _check_bits(bits, TWELVE_BODY_BITS)
    shifts = []
    rates = []
    pos = 0
    for _ in range(6):
        value = gray_inverse(bits_to_int(bits[pos : pos + SHIFT_FIELD_BITS]))
        pos += SHIFT_FIELD_BITS
        if value >= N_SHIFT_OPTIONS:
            return None
        shifts.append(value + 1)
    for _ in range(6):
        value = gray_inverse(bits_to_int(bits[pos : pos + RATE_FIELD_BITS]))
        pos += RATE_FIELD_BITS
        if value >= N_RATE_OPTIONS:
            return None
        rates.append(value + 1)
    return LineConfig(tuple(ShopState(s, r) for s, r in zip(shifts, rates)))


# ---------------------------------------------------------------------------
# Config-level facade
# ---------------------------------------------------------------------------

SCHEME_KINDS = ("basic", "gray", "pggray", "twelvebody-gray")


class EncodingScheme:
    """Uniform encode/decode of whole line configurations for one scheme."""

    def __init__(self, kind: str, space: ReducedSpace | None = None, pg_chain: bool = False):
        if kind not in SCHEME_KINDS:
            raise ValueError(f"unknown scheme {kind!r}")
        if kind == "twelvebody-gray":
            if space is not None:
                raise ValueError("twelvebody-gray takes no space")
            self.n_bits = TWELVE_BODY_BITS
        else:
            if space is None:
                raise ValueError(f"scheme {kind!r} requires a reduced space")
            self.n_bits = basic_width(space) if kind == "basic" else sum(gray_widths(space))
        self.kind = kind
        self.space = space
        self.tables = PgTables(space, chain=pg_chain) if kind == "pggray" else None

    def encode_triple(self, triple: Sequence[int]) -> str:
        if self.kind == "basic":
            return encode_basic(self.space, triple)
        if self.kind == "gray":
            return encode_gray(self.space, triple)
        if self.kind == "pggray":
            return encode_pggray(self.space, triple, self.tables)
        raise ValueError("twelvebody-gray has no triple view")

    def decode_triple(self, bits: str) -> tuple[int, int, int] | None:
        if self.kind == "basic":
            return decode_basic(self.space, bits)
        if self.kind == "gray":
            return decode_gray(self.space, bits)
        if self.kind == "pggray":
            return decode_pggray(self.space, bits, self.tables)
        raise ValueError("twelvebody-gray has no triple view")

    def encode_config(self, config: LineConfig) -> str:
        if self.kind == "twelvebody-gray":
            return encode_12body(config)
        triple = self.space.triple_of(config)
        if triple is None:
            raise ValueError("configuration lies outside the scheme's space")
        return self.encode_triple(triple)

    def decode_config(self, bits: str) -> LineConfig | None:
        if self.kind == "twelvebody-gray":
            return decode_12body(bits)
        triple = self.decode_triple(bits)
        return None if triple is None else self.space.config(triple)
