"""Bundles are bitmasks: bit ``i`` set means good ``i`` is in the bundle.

Goods carry dense indices in ``[0, m)``; a complete partition of ``m`` goods
is a tuple of pairwise disjoint masks whose union is ``(1 << m) - 1``.
"""

from typing import Iterable, Iterator, List, Tuple


def mask_from_goods(goods: Iterable[int]) -> int:
    mask = 0
    for g in goods:
        mask |= 1 << g
    return mask


def goods_from_mask(mask: int) -> List[int]:
    return list(iter_goods(mask))


def iter_goods(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def iter_submasks(mask: int) -> Iterator[int]:
    """All submasks of ``mask`` including 0 and ``mask`` itself."""
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


def is_partition(bundles: Tuple[int, ...], m: int) -> bool:
    """True iff the bundles are pairwise disjoint and cover all ``m`` goods."""
    union = 0
    total = 0
    for b in bundles:
        union |= b
        total += b.bit_count()
    return union == (1 << m) - 1 and total == m
