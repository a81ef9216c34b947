"""Time each accelerated kernel on the numba and numpy backends.

    python benchmarks/bench_backends.py [--repeat 5] [--size 2048]

Results are checked for equality across backends before timing is reported.
"""
import argparse
import time

import numpy as np

from fragscan import accel, fusion, neuralkernels as nk, raster, synth


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def cases(size, rng):
    spec = synth.random_scene(size, size, max(8, size // 40), seed=1)
    mask, _ = synth.generate_synthetic_scene(spec)
    noisy = mask.copy()
    flip = rng.random(mask.shape) < 0.01
    noisy[flip] = rng.integers(0, 3, int(flip.sum()))
    labels, _ = fusion.extract_seeds(mask)
    layout = raster.plan_tiles(size, size, 512, 256)
    tiles = [(o, t.copy()) for o, t in raster.iter_tiles(mask, layout)]
    cfg = nk.CarafeConfig(sigma=2, k_up=5, c_m=16)
    x = rng.normal(size=(32, 48, 48))
    kf = rng.random((96, 96, 25))
    w = rng.normal(size=(32, 32, 3, 3))
    return [
        ("morphological_open", lambda: raster.morphological_open(noisy)),
        ("extract_seeds", lambda: fusion.extract_seeds(mask)[0]),
        ("expand_regions", lambda: fusion.expand_regions(mask, labels, 10)),
        ("stitch", lambda: raster.stitch(tiles, layout)),
        ("conv2d 32->32 3x3", lambda: nk.conv2d(x, w)),
        ("carafe_reassemble", lambda: nk.carafe_reassemble(x, kf, cfg)),
    ]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--size", type=int, default=2048, help="square mask side in pixels")
    args = ap.parse_args(argv)
    if not accel.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    rng = np.random.default_rng(0)
    prev = accel.backend()
    rows = []
    for name, fn in cases(args.size, rng):
        accel.set_backend("numba")
        fn()  # compile / load from cache
        t_nb, out_nb = best_of(fn, args.repeat)
        accel.set_backend("numpy")
        t_np, out_np = best_of(fn, args.repeat)
        same = np.allclose(out_nb, out_np, rtol=0, atol=1e-9)
        rows.append((name, t_nb, t_np, same))
    accel.set_backend(prev)

    print(f"mask {args.size}x{args.size}, best of {args.repeat}")
    print(f"{'kernel':<22}{'numba ms':>10}{'numpy ms':>10}{'speedup':>9}  equal")
    for name, t_nb, t_np, same in rows:
        print(f"{name:<22}{1e3 * t_nb:>10.2f}{1e3 * t_np:>10.2f}{t_np / t_nb:>8.1f}x  {'yes' if same else 'NO'}")
    return 0 if all(r[3] for r in rows) else 1


if __name__ == "__main__":
    raise SystemExit(main())
