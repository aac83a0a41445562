#!/usr/bin/env python3
"""Draws curve_order{1,2,3}.ppm independently of the C++ code: the curve comes
from quadrant substitution and every segment is an axis-aligned pixel run
between cell centers (32 px cells, black on white, top row = highest y)."""
from pathlib import Path

CELL = 32


def curve(n):
    if n == 0:
        return [(0, 0)]
    prev = curve(n - 1)
    s = 1 << (n - 1)
    return ([(y, x) for x, y in prev] + [(x, y + s) for x, y in prev] +
            [(x + s, y + s) for x, y in prev] + [(2 * s - 1 - y, s - 1 - x) for x, y in prev])


def draw(n):
    side = 1 << n
    w = side * CELL
    px = bytearray(b"\xff" * (w * w * 3))
    pts = [(x * CELL + CELL // 2, (side - 1 - y) * CELL + CELL // 2) for x, y in curve(n)]
    for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
        assert x0 == x1 or y0 == y1
        for x in range(min(x0, x1), max(x0, x1) + 1):
            for y in range(min(y0, y1), max(y0, y1) + 1):
                i = (y * w + x) * 3
                px[i:i + 3] = b"\x00\x00\x00"
    return f"P6\n{w} {w}\n255\n".encode() + bytes(px)


if __name__ == "__main__":
    here = Path(__file__).parent
    for n in (1, 2, 3):
        (here / f"curve_order{n}.ppm").write_bytes(draw(n))
