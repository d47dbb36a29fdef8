#!/usr/bin/env python3
"""Regenerate fixtures/corpus.json with a naive reference simulation.

Shares nothing with the C++ engine: neighbour counting on lists of lists,
Python's own RNG for the grids. Run from the repository root.
"""

import json
import random
import sys


def step(g):
    h, w = len(g), len(g[0])
    out = [row[:] for row in g]
    for y in range(h):
        for x in range(w):
            if g[y][x]:
                continue
            n = 0
            if x > 0: n += g[y][x - 1]
            if x + 1 < w: n += g[y][x + 1]
            if y > 0: n += g[y - 1][x]
            if y + 1 < h: n += g[y + 1][x]
            if n >= 2:
                out[y][x] = 1
    return out


def run(g):
    h, w = len(g), len(g[0])
    times = [[0 if g[y][x] else -1 for x in range(w)] for y in range(h)]
    t = 0
    while True:
        n = step(g)
        if n == g:
            return g, t, times
        t += 1
        for y in range(h):
            for x in range(w):
                if n[y][x] and not g[y][x]:
                    times[y][x] = t
        g = n


def components(g):
    """Bounding boxes [a, b, c, d] of 4-connected components; each must be full."""
    h, w = len(g), len(g[0])
    seen = [[False] * w for _ in range(h)]
    boxes = []
    for y0 in range(h):
        for x0 in range(w):
            if not g[y0][x0] or seen[y0][x0]:
                continue
            stack, cells = [(x0, y0)], []
            seen[y0][x0] = True
            while stack:
                x, y = stack.pop()
                cells.append((x, y))
                for nx, ny in ((x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1)):
                    if 0 <= nx < w and 0 <= ny < h and g[ny][nx] and not seen[ny][nx]:
                        seen[ny][nx] = True
                        stack.append((nx, ny))
            xs = [c[0] for c in cells]
            ys = [c[1] for c in cells]
            box = [min(xs), min(ys), max(xs), max(ys)]
            assert len(cells) == (box[2] - box[0] + 1) * (box[3] - box[1] + 1), "closure component is not a rectangle"
            boxes.append(box)
    boxes.sort(key=lambda b: (b[1], b[0], b[3], b[2]))
    return boxes


def text(g):
    return ["".join("1" if v else "0" for v in row) for row in g]


def entry(name, g):
    closure, steps, times = run(g)
    full = all(all(row) for row in closure)
    return {
        "name": name,
        "grid": text(g),
        "closure": text(closure),
        "steps": steps,
        "T": steps if full else None,
        "times": times,
        "finals": components(closure),
    }


def main():
    rng = random.Random(20240611)
    corpus = [
        entry("empty2", [[0, 0], [0, 0]]),
        entry("full2", [[1, 1], [1, 1]]),
        entry("diagonal5", [[1 if x == y else 0 for x in range(5)] for y in range(5)]),
        entry("corner_pair", [[1, 0, 0], [0, 0, 0], [0, 0, 1]]),
        entry("line7", [[1] * 7]),
        entry("column_gap", [[1], [0], [1], [0], [0], [1]]),
    ]
    for i in range(60):
        w = rng.randint(1, 24)
        h = rng.randint(1, 24)
        p = rng.choice([0.05, 0.1, 0.2, 0.3, 0.5])
        g = [[1 if rng.random() < p else 0 for _ in range(w)] for _ in range(h)]
        corpus.append(entry(f"random{i}_{w}x{h}_p{p}", g))
    out = sys.argv[1] if len(sys.argv) > 1 else "fixtures/corpus.json"
    with open(out, "w") as f:
        json.dump({"format": "bootperc-fixtures-1", "entries": corpus}, f, separators=(",", ":"))
        f.write("\n")


if __name__ == "__main__":
    main()
