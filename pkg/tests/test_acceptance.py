"""Acceptance gate: eleven end-to-end criteria at their stated tolerances.

Each test prints exactly one PASS/FAIL line (visible with `pytest -v -s` or
in captured output on failure) and asserts the same condition.
"""

import json
import os
import subprocess
import sys

import numpy as np
import pytest
from scipy import integrate

from carnot import randomness
from carnot.algebra import group_law_checks, preset_group
from carnot.blowup import (SurfacePatch, blowup_check, density_curve,
                           LevelSetSpec, graph_area_levelset, levelset_patch,
                           surface_measure_total)
from carnot.factor import (convex_normal_check, rotational_sweep,
                           slice_volume_mc, slice_volume_nested,
                           spherical_factor)
from carnot.metrics import check_axioms, dinf, euclidean, hebisch_sikora, koranyi
from carnot.subgroups import (ComplementaryPair, coset_volume_check,
                              subspace_from_vectors)

HEIS = preset_group("heisenberg1")
VERTICAL = subspace_from_vectors(HEIS, [[0, 1, 0], [0, 0, 1]])


def verdict(num, name, ok, detail):
    line = f"criterion {num:02d} [{'PASS' if ok else 'FAIL'}] {name}: {detail}"
    print(line)
    assert ok, line


def random_ball_centers(d, k, seed):
    g = d.group
    rng = randomness.stream(seed, randomness.OP_PROPERTY_SAMPLES, 1)
    out = []
    while len(out) < k:
        pts = rng.uniform(-1, 1, (4 * k, g.q))
        keep = d.ball_contains(g.zero(), 1.0, pts)
        out.extend(pts[keep])
    return np.asarray(out[:k])


def test_01_euclidean_baseline():
    g = preset_group("abelian:3")
    V = subspace_from_vectors(g, [[1, 0, 0], [0, 1, 0]])
    rep = spherical_factor(euclidean(g), V, n_starts=8, n_mc=100000, seed=0)
    ok = (abs(rep.beta - np.pi) <= 3 * rep.beta_error
          and abs(rep.center_gap) <= 3 * rep.gap_error)
    verdict(1, "euclidean baseline beta=pi", ok,
            f"beta={rep.beta:.6f} (pi={np.pi:.6f}, 3sig={3 * rep.beta_error:.2e}), "
            f"gap={rep.center_gap:.2e} (3sig={3 * rep.gap_error:.2e})")


def test_02_multiradial_origin_maximality():
    details = []
    ok = True
    for d in (dinf(HEIS), koranyi(HEIS)):
        origin = slice_volume_mc(d, VERTICAL, HEIS.zero(), n=100000, seed=0)
        exceed = 0.0
        for i, z in enumerate(random_ball_centers(d, 100, seed=2)):
            est = slice_volume_mc(d, VERTICAL, z, n=100000, seed=100 + i)
            combined = 3.0 * np.hypot(est.std_error, origin.std_error)
            exceed = max(exceed, est.value - origin.value - combined)
        rep = spherical_factor(d, VERTICAL, n_starts=6, n_mc=100000, seed=0)
        ok &= exceed <= 0 and abs(rep.center_gap) <= 3 * rep.gap_error
        details.append(f"{d.name}: exceed={exceed:.2e}, gap={rep.center_gap:.2e}")
    closed = slice_volume_mc(dinf(HEIS), VERTICAL, HEIS.zero(), n=1000000, seed=0)
    ok &= abs(closed.value - 1.0) <= 0.01
    details.append(f"dinf closed-form 4/c^2: mc={closed.value:.5f} vs 1.0")
    verdict(2, "origin maximality for multiradial distances", ok, "; ".join(details))


def test_03_koranyi_vertical_plane_value():
    nested = slice_volume_nested(koranyi(HEIS), VERTICAL)
    oracle = 0.5 * integrate.quad(lambda y: np.sqrt(1 - y ** 4), -1, 1,
                                  limit=200)[0]
    mc = slice_volume_mc(koranyi(HEIS), VERTICAL, HEIS.zero(), n=1000000, seed=0)
    rel = abs(nested.value - oracle) / oracle
    ok = rel <= 1e-6 and abs(mc.value - nested.value) <= 3 * mc.std_error
    verdict(3, "koranyi vertical-plane slice value", ok,
            f"nested={nested.value:.10f} oracle={oracle:.10f} rel={rel:.2e}, "
            f"mc={mc.value:.5f}+-{mc.std_error:.5f}")


def test_04_rotational_symmetry_sweep():
    rep = rotational_sweep(koranyi(HEIS), (1, 1), k=8, n_starts=4,
                           n_mc=100000, seed=0)
    ok = rep.spread <= rep.spread_error
    verdict(4, "koranyi rotational symmetry (k=8 sweep)", ok,
            f"spread={rep.spread:.2e} <= bars={rep.spread_error:.2e}, "
            f"mean beta={rep.mean:.5f}")


def test_05_convex_normal_symmetry():
    rep = convex_normal_check(hebisch_sikora(HEIS), VERTICAL, n_starts=6,
                              n_mc=100000, seed=0)
    ok = abs(rep.gap) <= 3 * rep.gap_error
    verdict(5, "convex-ball/normal-subgroup symmetry", ok,
            f"gap={rep.gap:.2e} (3sig={3 * rep.gap_error:.2e}), "
            f"beta={rep.beta:.5f}")


def test_06_group_law_exactness():
    worst = {}
    for name in ("heisenberg1", "engel"):
        checks = group_law_checks(preset_group(name), n_samples=10000, seed=0,
                                  tol=1e-10)
        worst[name] = max(c.worst for c in checks)
    ok = all(w <= 1e-10 for w in worst.values())
    verdict(6, "group-law exactness at 1e-10 over 1e4 triples", ok,
            ", ".join(f"{k}: {v:.2e}" for k, v in worst.items()))


def test_07_axiom_sampler_sensitivity():
    d = dinf(HEIS, c=10.0, validate=False)
    report = check_axioms(d, HEIS, n_samples=100000, seed=0)
    tri = [c for c in report.failures() if c.name == "triangle"]
    ok = bool(tri)
    detail = "no triangle violation found"
    if tri:
        x, y, z = (np.asarray(w) for w in tri[0].witness)
        margin = d.distance(x, z) - d.distance(x, y) - d.distance(y, z)
        ok = margin > 1e-7
        detail = f"violation margin {margin:.3f} at witness triple"
    verdict(7, "dinf c=10 rejected with counterexample", ok, detail)


def test_08_blowup_density():
    plane = SurfacePatch(
        group=HEIS,
        fn=lambda U, V: np.stack([np.zeros_like(U), U, V], axis=-1),
        domain=((-1.0, 1.0), (-1.0, 1.0)))
    d = dinf(HEIS, c=2.0)
    curve = density_curve(plane, d, 0.0, 0.0, (0.4, 0.2, 0.1))
    flat = max(abs(r - 1.0) for r in curve.ratios)
    para = SurfacePatch(
        group=HEIS,
        fn=lambda U, V: np.stack([(U ** 2 + V ** 2) / 4.0, U, V], axis=-1),
        domain=((-1.0, 1.0), (-1.0, 1.0)))
    rep = blowup_check(para, d, 0.0, 0.0, rel_tol=0.02,
                       factor_opts={"n_starts": 6, "n_mc": 100000, "seed": 0})
    ok = flat <= 1e-3 and rep.ok
    verdict(8, "blow-up density identity", ok,
            f"vertical-plane ratio drift {flat:.2e}; paraboloid "
            f"limit={rep.limit:.5f} vs beta={rep.beta:.5f} (tol={rep.tol:.3f})")


def test_09_level_set_area():
    region = ((0.0, 1.0), (0.0, 1.0))
    d = dinf(HEIS, c=2.0)
    flat = graph_area_levelset(LevelSetSpec(group=HEIS, fn=lambda p: p[:, 0]),
                               region, d)
    f = LevelSetSpec(group=HEIS, fn=lambda p: p[:, 0] - p[:, 1] ** 2)
    area = graph_area_levelset(f, region, d, n_grid=256)
    surface = surface_measure_total(levelset_patch(f, region), n_grid=256)
    rel = abs(area - surface) / area
    ok = abs(flat - 1.0) <= 1e-6 and rel <= 0.02
    verdict(9, "level-set area formula", ok,
            f"flat graph area={flat!r}; curved cross-check rel gap {rel:.2e}")


def test_10_coset_translation_invariance():
    W = VERTICAL
    V = subspace_from_vectors(HEIS, [[1, 0, 0]])
    pair = ComplementaryPair(W=W, V=V)
    rng = randomness.stream(0, randomness.OP_PROPERTY_SAMPLES, 2)
    worst = 0.0
    for x in rng.uniform(-2, 2, (10, 3)):
        before, after = coset_volume_check(pair, x, [(-1.0, 1.0), (-0.5, 0.5)])
        worst = max(worst, abs(after - before) / before)
    ok = worst <= 1e-4
    verdict(10, "coset volume translation invariance", ok,
            f"worst relative mismatch {worst:.2e} over 10 translates")


def test_11_csv_determinism(tmp_path):
    cfg = tmp_path / "beta.json"
    cfg.write_text(json.dumps({
        "group": "heisenberg1", "distance": {"family": "koranyi"},
        "subspace": "vertical_plane_x0", "samples": 20000,
        "n_starts": 3, "seed": 11}))

    def run(threads, out):
        env = {**os.environ, "CARNOT_THREADS": threads}
        subprocess.run([sys.executable, "-m", "carnot.cli", "beta",
                        "--config", str(cfg), "--out", str(out)],
                       check=True, env=env, capture_output=True)
        return out.read_bytes()

    a = run("1", tmp_path / "a.csv")
    b = run("4", tmp_path / "b.csv")
    c = run("1", tmp_path / "c.csv")
    ok = a == b == c
    verdict(11, "byte-identical CSV across reruns and thread counts", ok,
            f"{len(a)} bytes, identical={ok}")
