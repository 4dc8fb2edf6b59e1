#!/usr/bin/env python3
"""Writes the synthetic SNDlib-format source networks under data/networks.

The topologies are 2-edge-connected (ring plus chords, grids, wheels) so most
single-link failures keep every demand routable.
"""
import math
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "data" / "networks"


def ring_chords(n, chords, rng):
    edges = {(i, (i + 1) % n) for i in range(n)}
    while len(edges) < n + chords:
        a, b = sorted(rng.sample(range(n), 2))
        if b - a not in (1, n - 1):
            edges.add((a, b))
    return sorted(tuple(sorted(e)) for e in edges)


def grid(rows, cols):
    edges = []
    for r in range(rows):
        for c in range(cols):
            i = r * cols + c
            if c + 1 < cols:
                edges.append((i, i + 1))
            if r + 1 < rows:
                edges.append((i, i + cols))
    return edges


def wheel(n):
    rim = n - 1
    edges = [(0, i) for i in range(1, n)]
    edges += [(1 + i, 1 + (i + 1) % rim) for i in range(rim)]
    return sorted(tuple(sorted(e)) for e in edges)


def write(name, n, edges, demands, rng):
    lines = [f"# synthetic network {name}", "", "NODES ("]
    for i in range(n):
        ang = 2 * math.pi * i / n
        lines.append(f"  N{i} ( {math.cos(ang):.3f} {math.sin(ang):.3f} )")
    lines += [")", "", "LINKS ("]
    for k, (a, b) in enumerate(edges):
        base = rng.randint(3, 9)
        modules = [(10, base)]
        if rng.random() < 0.6:
            modules.append((40, round(base * rng.uniform(2.2, 3.2), 1)))
        pre = rng.choice([0, 0, 0, 5])
        mods = " ".join(f"{c:.2f} {w:.2f}" for c, w in modules)
        lines.append(f"  L{k} ( N{a} N{b} ) {pre:.2f} 0.00 0.00 0.00 ( {mods} )")
    lines += [")", "", "DEMANDS ("]
    pairs = set()
    while len(pairs) < demands:
        a, b = rng.sample(range(n), 2)
        pairs.add((a, b))
    for k, (a, b) in enumerate(sorted(pairs)):
        lines.append(f"  D{k} ( N{a} N{b} ) 1 {rng.randint(2, 15):.2f} UNLIMITED")
    lines += [")", ""]
    (OUT / f"{name}.txt").write_text("\n".join(lines))


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    rng = random.Random(20240611)
    specs = [
        ("ring10", 10, lambda: ring_chords(10, 4, rng), 8),
        ("ring12", 12, lambda: ring_chords(12, 5, rng), 9),
        ("ring14", 14, lambda: ring_chords(14, 6, rng), 10),
        ("grid3x4", 12, lambda: grid(3, 4), 8),
        ("grid3x5", 15, lambda: grid(3, 5), 10),
        ("wheel11", 11, lambda: wheel(11), 7),
        ("ring11", 11, lambda: ring_chords(11, 3, rng), 8),
        ("ring13", 13, lambda: ring_chords(13, 4, rng), 9),
        ("grid2x6", 12, lambda: grid(2, 6), 7),
        ("grid4x4", 16, lambda: grid(4, 4), 10),
        ("wheel9", 9, lambda: wheel(9), 6),
    ]
    for name, n, make, demands in specs:
        write(name, n, make(), demands, rng)


if __name__ == "__main__":
    main()
