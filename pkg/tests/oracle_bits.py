"""Naive per-bit reference implementations used as independent oracles.

Words are plain Python bit lists, most significant bit first. Nothing
here shares code with the package under test: no int shifts, no masks,
no bit_count. Slow on purpose.
"""


def to_bits(value: int, width: int) -> list[int]:
    bits = []
    for _ in range(width):
        bits.append(value % 2)
        value //= 2
    bits.reverse()
    return bits


def from_bits(bits: list[int]) -> int:
    value = 0
    for b in bits:
        value = value * 2 + b
    return value


def xor_bits(a, b, width):
    return from_bits(
        [x ^ y for x, y in zip(to_bits(a, width), to_bits(b, width))]
    )


def or_bits(a, b, width):
    return from_bits(
        [x | y for x, y in zip(to_bits(a, width), to_bits(b, width))]
    )


def and_bits(a, b, width):
    return from_bits(
        [x & y for x, y in zip(to_bits(a, width), to_bits(b, width))]
    )


def weight_bits(a, width):
    return sum(to_bits(a, width))


def rotl_bits(a, n, width):
    bits = to_bits(a, width)
    n = n % width
    return from_bits(bits[n:] + bits[:n])


def rot_bits(a, b, width):
    return rotl_bits(a, weight_bits(b, width), width)
