"""Acceptance criteria 1-10, each at its stated tolerance and time budget.

Under pytest every criterion is one test, and a PASS/FAIL line per criterion is
printed in the terminal summary.  Run this file directly to get the same lines
without pytest.
"""
from collections import OrderedDict
import math
import sys
import time

import mpmath
import numpy as np
import pytest

from fragscan import fusion, graindist, neuralkernels as nk, oracles as kernel_oracles, raster, segeval
from fragscan import shape, synth
from fragscan.config import PipelineConfig
from fragscan.pipeline import postprocess

from oracles import assign_from_table, blocky_mask, nearest_centre_labels, seed_distance_table

ACCEPTANCE_RESULTS = OrderedDict()


def record(n, title, ok, detail, elapsed, budget):
    ok = bool(ok) and elapsed < budget
    line = f"criterion {n:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail} [{elapsed:.2f}s < {budget:g}s]"
    ACCEPTANCE_RESULTS[n] = line
    print(line)
    return ok


# 1 ---------------------------------------------------------------------------------

def criterion_1():
    t = time.perf_counter()
    layout = raster.plan_tiles(4096, 3072, 512, 256)
    elapsed = time.perf_counter() - t
    n = len(layout.tile_origins)
    return record(1, "tiling count", n == 165 and 4 * n == 660, f"{n} tiles per image, {4 * n} for 4 images",
                  elapsed, 1e-3)


# 2 ---------------------------------------------------------------------------------

def criterion_2():
    t = time.perf_counter()
    means = OrderedDict([
        ("S1", (5.77, 18.01, 37.55)),
        ("S2", (8.30, 24.71, 45.13)),
        ("S3", (13.11, 35.38, 59.14)),
        ("S4", (27.63, 60.89, 97.64)),
    ])
    overall = (11.08, 37.72, 76.70)
    ratios = {s: graindist.relative_diameters(m, overall) for s, m in means.items()}
    s10 = graindist.fit_line([(i + 1, ratios[s][0]) for i, s in enumerate(means)]).slope
    s90 = graindist.fit_line([(i + 1, ratios[s][2]) for i, s in enumerate(means)]).slope
    elapsed = time.perf_counter() - t
    ok = abs(s10 - 0.636) <= 0.01 and abs(s90 - 0.253) <= 0.01
    for k, (lo, hi) in enumerate([(0.52, 2.49), (0.47, 1.61), (0.49, 1.27)]):
        ok &= abs(ratios["S1"][k] - lo) <= 0.01 and abs(ratios["S4"][k] - hi) <= 0.01
    detail = (f"slopes {s10:.4f}/{s90:.4f}; r10 {ratios['S1'][0]:.3f}->{ratios['S4'][0]:.3f}, "
              f"r50 {ratios['S1'][1]:.3f}->{ratios['S4'][1]:.3f}, r90 {ratios['S1'][2]:.3f}->{ratios['S4'][2]:.3f}")
    return record(2, "segregation slopes", ok, detail, elapsed, 1.0)


# 3 ---------------------------------------------------------------------------------

def criterion_3():
    t = time.perf_counter()
    mpmath.mp.dps = 50
    a, b = mpmath.mpf(20), mpmath.mpf(10)
    d_ref = mpmath.mpf("1.16") * b * mpmath.sqrt(mpmath.mpf("1.35") * a / b)
    d = shape.equivalent_diameter(20, 10)
    v_ref = mpmath.mpf(4) / 3 * mpmath.pi * a * b * mpmath.mpf("19.0607") / 2
    v = shape.ellipsoid_volume(20, 10, 19.0607)
    ok = abs(d - 19.0607) <= 1e-4 and abs(d - float(d_ref)) <= 1e-12
    ok &= abs(v - 7984.1) <= 0.5 and abs(v - float(v_ref)) <= 1e-9
    rng = np.random.default_rng(3)
    bs = 10 ** rng.uniform(-3, 3, 10 ** 6)
    as_ = bs * 10 ** rng.uniform(0, 2, 10 ** 6)
    k = 1.16 * math.sqrt(1.35)
    worst = 0.0
    for ai, bi in zip(as_.tolist(), bs.tolist()):
        di = shape.equivalent_diameter(ai, bi)
        worst = max(worst, abs(di - k * math.sqrt(ai * bi)) / di)
    ok &= worst <= 1e-12
    elapsed = time.perf_counter() - t
    return record(3, "diameter/volume numerics", ok,
                  f"d(20,10)={d:.4f}, V={v:.2f}, identity max rel err {worst:.1e} over 1e6 inputs", elapsed, 5.0)


# 4 ---------------------------------------------------------------------------------

def criterion_4(n_masks=200):
    t = time.perf_counter()
    rng = np.random.default_rng(4)
    bad = 0
    for _ in range(n_masks):
        m = blocky_mask(rng)
        labels, _ = fusion.extract_seeds(m, 4)
        table = seed_distance_table(m, labels, 10, 8)
        for r in (1, 3, 5, 10):
            out = fusion.expand_regions(m, labels, r, 8)
            bad += int(not np.array_equal(out, assign_from_table(m, labels, table, r)))
    elapsed = time.perf_counter() - t
    return record(4, "region expansion vs per-seed BFS", bad == 0,
                  f"{n_masks} masks x 4 radii, {bad} mismatches", elapsed, 30.0)


# 5 ---------------------------------------------------------------------------------

def criterion_5():
    t = time.perf_counter()
    rng = np.random.default_rng(5)
    layout = raster.plan_tiles(1024, 1024, 512, 256)
    identical = 0
    for _ in range(20):
        m = rng.integers(0, 3, (1024, 1024), dtype=np.uint8)
        tiles = [(o, tile.copy()) for o, tile in raster.iter_tiles(m, layout)]
        identical += raster.stitch(tiles, layout).tobytes() == m.tobytes()
    mismatches, sampled = 0, 0
    for _ in range(4):
        tiles = [rng.integers(0, 3, (512, 512), dtype=np.uint8) for _ in layout.tile_origins]
        out = raster.stitch(list(zip(layout.tile_origins, tiles)), layout)
        ys = rng.integers(0, 1024, 250_000)
        xs = rng.integers(0, 1024, 250_000)
        mismatches += int((out[ys, xs] != nearest_centre_labels(tiles, layout.tile_origins, 512, ys, xs)).sum())
        sampled += ys.size
    elapsed = time.perf_counter() - t
    return record(5, "stitching idempotence + oracle", identical == 20 and mismatches == 0,
                  f"{identical}/20 byte-identical, {mismatches} mismatches over {sampled} sampled pixels",
                  elapsed, 30.0)


# 6 ---------------------------------------------------------------------------------

def criterion_6(n_scenes=50):
    t = time.perf_counter()
    cfg = PipelineConfig()
    count_ok, worst_d, worst_d50 = 0, 0.0, 0.0
    for seed in range(n_scenes):
        spec = synth.random_scene(1024, 1024, 30, a_range=(10.0, 60.0), band=2, seed=seed)
        mask, truth = synth.generate_synthetic_scene(spec)
        inst, frags = postprocess(mask, cfg)
        count_ok += len(frags) == len(truth)
        by_id = {f.id: f for f in frags}
        for tf in truth:
            fid = int(inst[int(round(tf.centre[1])), int(round(tf.centre[0]))])
            f = by_id.get(fid)
            if f is None:
                worst_d = math.inf
                continue
            worst_d = max(worst_d, abs(f.d_px - tf.d_px) / tf.d_px)
        c = cfg.cm_per_pixel
        true_frags = [shape.Fragment(tf.index + 1, 1, tf.centre, tf.a_px * c, tf.b_px * c, 0.0,
                                     tf.d_px * c, tf.volume_px * c ** 3, False, tf.d_px) for tf in truth]
        d50_true = graindist.characteristic_diameters(graindist.psd(true_frags, "volume")).d50
        d50_rec = graindist.characteristic_diameters(graindist.psd(frags, "volume")).d50
        worst_d50 = max(worst_d50, abs(d50_rec - d50_true) / d50_true)
    elapsed = time.perf_counter() - t
    ok = count_ok == n_scenes and worst_d <= 0.03 and worst_d50 <= 0.05
    return record(6, "synthetic end-to-end recovery", ok,
                  f"exact count in {count_ok}/{n_scenes} scenes, worst d error {100 * worst_d:.2f}%, "
                  f"worst volume d50 error {100 * worst_d50:.2f}%", elapsed, 120.0)


# 7 ---------------------------------------------------------------------------------

def criterion_7():
    t = time.perf_counter()
    rng = np.random.default_rng(7)
    m = rng.integers(0, 3, (40, 40))
    perfect = segeval.metrics(segeval.confusion(m, m))
    y = segeval.one_hot(m, 3)
    ok = all(v == 1.0 for s in (perfect.iou, perfect.precision, perfect.recall, perfect.f1,
                                perfect.pixel_accuracy) for v in s)
    ok &= perfect.miou == 1.0 and perfect.mpa == 1.0 and segeval.total_loss(y, y) == 0.0
    truth = np.zeros(100, np.uint8)
    pred = np.zeros(100, np.uint8)
    truth[:10] = 1
    pred[:8] = 1
    pred[10:12] = 1
    cm = segeval.confusion(pred, truth, 2)
    r = segeval.metrics(cm)
    ok &= (cm.tp[1], cm.fp[1], cm.fn[1], cm.tn[1]) == (8, 2, 2, 88)
    ok &= all(abs(v - 0.8) < 1e-12 for v in (r.precision[1], r.recall[1], r.f1[1]))
    ok &= abs(r.iou[1] - 0.6667) < 1e-4 and abs(r.pixel_accuracy[1] - 0.96) < 1e-12
    worst = 0.0
    for k in (2, 3, 4, 7):
        yk = segeval.one_hot(rng.integers(0, k, 500), k)
        p = np.full((500, k), 1.0 / k)
        worst = max(worst, abs(segeval.cross_entropy(p, yk) - math.log(k)),
                    abs(segeval.dice_loss(p, yk) - (1 - 1 / k)))
    ok &= worst <= 1e-9
    elapsed = time.perf_counter() - t
    return record(7, "metrics/losses", ok,
                  f"perfect -> 1 and loss 0; P=R=F1={r.precision[1]:.4f}, IoU={r.iou[1]:.4f}, "
                  f"PA={r.pixel_accuracy[1]:.4f}; uniform loss err {worst:.1e}", elapsed, 5.0)


# 8 ---------------------------------------------------------------------------------

def criterion_8():
    t = time.perf_counter()
    rows = kernel_oracles.selftest(n_cases=100, seed=8, tol=1e-6)
    ok = all(passed for *_, passed in rows)
    worst = max(err for _, err, _ in rows)
    rng = np.random.default_rng(8)
    for sigma, k_up in ((1, 1), (2, 3), (2, 5), (3, 5)):
        cfg = nk.CarafeConfig(sigma=sigma, k_up=k_up, c_m=2)
        x = rng.normal(size=(4, 6, 5))
        kf = np.zeros((sigma * 6, sigma * 5, k_up * k_up))
        kf[..., (k_up * k_up) // 2] = 1.0
        nearest = np.repeat(np.repeat(x, sigma, axis=1), sigma, axis=2)
        ok &= np.array_equal(nk.carafe_reassemble(x, kf, cfg), nearest)
    cfg = nk.CarafeConfig(sigma=1, k_up=1, k_encoder=3, c_m=3, normalizer="softmax")
    x = rng.normal(size=(4, 6, 6))
    out = nk.carafe(x, rng.normal(size=(3, 4)), rng.normal(size=(1, 3, 3, 3)), cfg)
    ok &= np.array_equal(out, x)
    ok &= np.array_equal(nk.eca(x, np.zeros(3)), x / 2)
    elapsed = time.perf_counter() - t
    return record(8, "CARAFE/Ghost/ECA oracles", ok,
                  f"100 random cases, max |err| {worst:.1e}; delta, identity and ECA halving exact",
                  elapsed, 30.0)


# 9 ---------------------------------------------------------------------------------

def criterion_9():
    t = time.perf_counter()
    std = nk.count_params("conv3x3", 64, 64)
    ghost = nk.count_params("ghost", 64, 64)
    violations = 0
    checked = 0
    for c_in in range(2, 513):
        for c_out in range(2, 513, 2):
            checked += 1
            violations += nk.count_params("ghost", c_in, c_out) >= nk.count_params("conv3x3", c_in, c_out)
    elapsed = time.perf_counter() - t
    return record(9, "parameter counts", std == 36864 and ghost == 2336 and violations == 0,
                  f"standard {std}, ghost {ghost}, ghost < standard in {checked - violations}/{checked} "
                  f"(C_in, even C_out) pairs", elapsed, 1.0)


# 10 --------------------------------------------------------------------------------

def criterion_10():
    t = time.perf_counter()
    base = dict(pixel_area=1, centroid=(0.0, 0.0), a=1.0, b=1.0, orientation=0.0, volume=1.0,
                touches_border=False)
    frags = [shape.Fragment(id=i + 1, d=d * 0.125, d_px=d, **base) for i, d in enumerate((9.0, 10.0, 10.5, 25.0))]
    ids = np.array([[1, 2, 3, 4]], np.int32)
    out_ids, kept = fusion.filter_fine(ids, frags, 10.0)
    ok = [f.d_px for f in kept] == [10.5, 25.0] and out_ids.tolist() == [[0, 0, 1, 2]]
    # and through measurement: discs just below and above the cut
    k = 1.16 * math.sqrt(1.35)
    yy, xx = np.mgrid[0:60, 0:60]
    inst = np.zeros((60, 60), np.int32)
    inst[(xx - 15) ** 2 + (yy - 15) ** 2 <= (8.0 / k) ** 2] = 1
    inst[(xx - 42) ** 2 + (yy - 42) ** 2 <= (12.0 / k) ** 2] = 2
    measured = shape.measure(inst, 0.125)
    _, kept2 = fusion.filter_fine(inst, measured, 10.0)
    ok &= len(kept2) == 1 and kept2[0].d_px > 10
    cut_cm = 10 * 0.125
    ref = graindist.load_reference()["fine_particle_cut"]
    lo, hi = ref["approx_cm"]
    ok &= ref["pixels"] == 10 and lo <= cut_cm <= hi
    elapsed = time.perf_counter() - t
    return record(10, "fine-particle rule", ok,
                  f"d=10.0 px excluded, 10.5 px kept; cut = {cut_cm:.2f} cm at 0.125 cm/px", elapsed, 5.0)


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"criterion_{i}" for i in range(1, 11)])
def test_acceptance(criterion):
    if criterion is criterion_1:
        # warm the import and allocation path; the budget is for the call itself
        raster.plan_tiles(4096, 3072, 512, 256)
    assert criterion(), ACCEPTANCE_RESULTS.get(CRITERIA.index(criterion) + 1)


if __name__ == "__main__":
    raster.plan_tiles(4096, 3072, 512, 256)
    results = [c() for c in CRITERIA]
    print(f"{sum(results)}/{len(results)} criteria passed")
    sys.exit(0 if all(results) else 1)
