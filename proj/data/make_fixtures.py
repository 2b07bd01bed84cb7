#!/usr/bin/env python3
"""Regenerate the bundled MatrixMarket fixtures under data/matrices/.

The collection mimics the variety of small sparse-collection matrices used
for the weighted-vs-unweighted comparison: conduction chains, mesh
Laplacians, network matrices, rectangular sparse systems, and a couple of
well-conditioned dense cases. All matrices are deterministic (fixed seeds)
and sized 100 <= m, n <= 1000.

Run from the repository root:  python3 data/make_fixtures.py
"""

import os

import numpy as np


def chain_conduct_240():
    n = 240
    a = np.zeros((n, n))
    for i in range(n):
        a[i, i] = 0.06 * (2 + np.sin(i * 0.3))
        if i > 0:
            a[i, i - 1] = -0.06
        if i + 1 < n:
            a[i, i + 1] = -0.06
    return a


def mesh_laplacian(g, scale, shift):
    n = g * g
    lap = np.zeros((n, n))
    for r in range(g):
        for c in range(g):
            i = r * g + c
            deg = 0
            for dr, dc in [(0, 1), (0, -1), (1, 0), (-1, 0)]:
                rr, cc = r + dr, c + dc
                if 0 <= rr < g and 0 <= cc < g:
                    lap[i, rr * g + cc] = -1.0
                    deg += 1
            lap[i, i] = deg + shift
    return lap * scale


def powernet_220():
    rng = np.random.default_rng(7)
    n = 220
    a = np.eye(n) * 2.0
    for i in range(n):
        for j in rng.choice(n, 2, replace=False):
            v = rng.choice([-1, 1]) * rng.uniform(0.5, 1.5)
            a[i, j] += v
            a[j, i] += v
    return a * 0.05


def kinetics_260x180():
    rng = np.random.default_rng(8)
    m, n = 260, 180
    a = np.zeros((m, n))
    for i in range(m):
        cols = rng.choice(n, 4, replace=False)
        a[i, cols] = rng.standard_normal(4) * rng.uniform(0.2, 2)
    return a * 0.03


def membrane_256():
    rng = np.random.default_rng(9)
    g = 16
    n = g * g
    lap = np.zeros((n, n))
    coef = rng.uniform(0.3, 3.0, size=n)
    for r in range(g):
        for c in range(g):
            i = r * g + c
            for dr, dc in [(0, 1), (0, -1), (1, 0), (-1, 0)]:
                rr, cc = r + dr, c + dc
                if 0 <= rr < g and 0 <= cc < g:
                    j = rr * g + cc
                    w = 0.5 * (coef[i] + coef[j])
                    lap[i, j] = -w
                    lap[i, i] += w
            lap[i, i] += 0.08
    return lap * 0.03


def ladder_300():
    n = 300
    a = np.zeros((n, n))
    sten = [1, -4, 7, -4, 1]
    for i in range(n):
        for k in range(-2, 3):
            j = i + k
            if 0 <= j < n:
                a[i, j] = sten[k + 2]
    return a * 0.08 / 7


def web_150():
    rng = np.random.default_rng(10)
    n = 150
    a = np.eye(n)
    deg = (rng.pareto(1.5, n) + 1).astype(int).clip(1, 20)
    for i in range(n):
        for j in rng.choice(n, deg[i], replace=False):
            a[i, j] += rng.uniform(0.2, 1.0)
    return a * 0.02


def span_400x320():
    rng = np.random.default_rng(11)
    m, n = 400, 320
    a = np.zeros((m, n))
    for i in range(m):
        cols = rng.choice(n, 5, replace=False)
        a[i, cols] = rng.standard_normal(5)
    return a * 0.05


def stiff_beam_200():
    n = 200
    a = np.zeros((n, n))
    sten = [1, -4, 6, -4, 1]
    for i in range(n):
        for k in range(-2, 3):
            j = i + k
            if 0 <= j < n:
                a[i, j] = sten[k + 2]
    return a * 0.01


def easy_spd_160():
    rng = np.random.default_rng(12)
    n = 160
    b = rng.standard_normal((n, n)) * 0.2
    return b @ b.T + 2.0 * np.eye(n)


def dense_rand_120():
    rng = np.random.default_rng(13)
    return rng.standard_normal((140, 120)) / np.sqrt(120)


FIXTURES = [
    ("chain_conduct_240", chain_conduct_240),
    ("mesh_lap_196", lambda: mesh_laplacian(14, 0.04, 0.1)),
    ("mesh_lap_324", lambda: mesh_laplacian(18, 0.02, 0.05)),
    ("powernet_220", powernet_220),
    ("kinetics_260x180", kinetics_260x180),
    ("membrane_256", membrane_256),
    ("ladder_300", ladder_300),
    ("web_150", web_150),
    ("span_400x320", span_400x320),
    ("stiff_beam_200", stiff_beam_200),
    ("easy_spd_160", easy_spd_160),
    ("dense_rand_120", dense_rand_120),
]


def write_mtx(path, a):
    rows, cols = np.nonzero(a)
    with open(path, "w") as f:
        f.write("%%MatrixMarket matrix coordinate real general\n")
        f.write(f"{a.shape[0]} {a.shape[1]} {len(rows)}\n")
        for i, j in zip(rows, cols):
            f.write(f"{i + 1} {j + 1} {a[i, j]:.17g}\n")


def main():
    base = os.path.join(os.path.dirname(os.path.abspath(__file__)), "matrices")
    os.makedirs(base, exist_ok=True)
    names = []
    for name, builder in FIXTURES:
        a = builder()
        assert 100 <= a.shape[0] <= 1000 and 100 <= a.shape[1] <= 1000, name
        write_mtx(os.path.join(base, name + ".mtx"), a)
        names.append(name)
        print(f"wrote {name}.mtx  ({a.shape[0]}x{a.shape[1]})")
    with open(os.path.join(base, "manifest.txt"), "w") as f:
        f.write("# bundled matrix manifest, one MatrixMarket file per line\n")
        for name in names:
            f.write(name + ".mtx\n")


if __name__ == "__main__":
    main()
