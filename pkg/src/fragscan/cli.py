"""Command line interface.

Exit codes: 0 success, 1 usage or configuration error, 2 data error.
"""
import argparse
from dataclasses import fields
import json
from pathlib import Path
import sys

import numpy as np

from . import accel, graindist, io, pipeline, raster, segeval, shape, synth
from .config import PipelineConfig, load_config
from .errors import DataError, EmptyInputError, InsufficientSamplesError, InvalidArgument

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _config_flags(parser):
    g = parser.add_argument_group("configuration (overrides the config file)")
    g.add_argument("--config", help="key = value config file (default: $FRAGSCAN_CONFIG)")
    for f in fields(PipelineConfig):
        flag = "--" + f.name.replace("_", "-")
        if f.type in (bool, "bool"):
            g.add_argument(flag, dest=f.name, default=None,
                           type=lambda s: s.lower() in ("1", "true", "yes", "on"), metavar="BOOL")
        else:
            kind = {"int": int, "float": float}.get(f.type if isinstance(f.type, str) else f.type.__name__, str)
            g.add_argument(flag, dest=f.name, type=kind, default=None)


def _cfg(args):
    overrides = {f.name: getattr(args, f.name, None) for f in fields(PipelineConfig)}
    return load_config(args.config, overrides)


def _tile_name(origin):
    return f"tile_{origin[0]}_{origin[1]}.png"


# -- commands ------------------------------------------------------------------

def cmd_tile(args, cfg):
    img = io.read_gray(args.image)
    if args.rescale:
        img = raster.rescale_bilinear(img, args.rescale[0], args.rescale[1])
    h, w = img.shape
    layout = raster.plan_tiles(w, h, cfg.window, cfg.stride)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for origin, tile in raster.iter_tiles(img, layout):
        io.write_gray(out / _tile_name(origin), np.ascontiguousarray(tile))
    (out / "layout.json").write_text(json.dumps(layout.to_dict()) + "\n")
    print(f"{len(layout.tile_origins)} tiles ({layout.grid[0]} x {layout.grid[1]}) -> {out}")


def cmd_stitch(args, cfg):
    tile_dir = Path(args.tile_dir)
    layout_path = Path(args.layout) if args.layout else tile_dir / "layout.json"
    try:
        layout = raster.TileLayout.from_dict(json.loads(layout_path.read_text()))
    except (OSError, ValueError, KeyError) as exc:
        raise DataError(f"{layout_path}: cannot read tile layout ({exc})") from exc
    tiles = []
    for origin in layout.tile_origins:
        p = tile_dir / _tile_name(origin)
        if not p.exists():
            raise DataError(f"missing tile at origin ({origin[0]}, {origin[1]}): {p}")
        tiles.append((origin, io.read_class_mask(p)))
    io.write_class_mask(args.out, raster.stitch(tiles, layout))
    print(f"stitched {len(tiles)} tiles -> {args.out}")


def cmd_postprocess(args, cfg):
    mask = io.read_class_mask(args.mask)
    inst, frags = pipeline.postprocess(mask, cfg)
    if not cfg.include_border_fragments:
        frags = [f for f in frags if not f.touches_border]
    image_id = args.image_id or Path(args.mask).stem
    io.write_instance_map(args.out_instances, inst)
    io.write_fragments(args.out_csv, image_id, frags)
    print(f"{image_id}: {len(frags)} fragments")


def cmd_measure(args, cfg):
    inst = io.read_instance_map(args.instances)
    frags = shape.measure(inst, cfg.cm_per_pixel)
    if not cfg.include_border_fragments:
        frags = [f for f in frags if not f.touches_border]
    image_id = args.image_id or Path(args.instances).stem
    io.write_fragments(args.out_csv, image_id, frags)
    print(f"{image_id}: {len(frags)} fragments")


def _load_csvs(paths):
    merged = {}
    for p in paths:
        for img, frags in io.read_fragments(p).items():
            merged.setdefault(img, []).extend(frags)
    return merged


def cmd_psd(args, cfg):
    by_image = _load_csvs(args.csv)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = {}
    for img, frags in by_image.items():
        if not cfg.include_border_fragments:
            frags = [f for f in frags if not f.touches_border]
        summary, count, volume = pipeline.image_summary(frags, cfg)
        report[img] = summary
        if args.svg:
            from . import plots
            plots.histogram_svg(count, out_dir / f"{img}_count.svg", f"{img} (by count)")
            plots.histogram_svg(volume, out_dir / f"{img}_volume.svg", f"{img} (by volume)",
                                summary["characteristic_diameters"])
    io.write_json(out_dir / "psd.json", report)
    print(f"psd for {len(report)} image(s) -> {out_dir / 'psd.json'}")


def cmd_sections(args, cfg):
    out_dir = Path(args.out_dir)
    if args.reference:
        ref = graindist.load_reference()
        seg = graindist.reference_segregation(ref)
        out_dir.mkdir(parents=True, exist_ok=True)
        io.write_json(out_dir / "segregation.json", seg.to_dict())
        if args.svg:
            from . import plots
            plots.ratios_svg(seg, out_dir / "relative_diameters.svg")
        _print_fits(seg)
        return
    map_path = cfg.section_map
    if not map_path:
        raise InvalidArgument("sections needs --section-map (or section_map in the config)")
    if not args.csv:
        raise InvalidArgument("sections needs at least one fragment CSV")
    image_section, depths = io.read_section_map(map_path)
    by_image = _load_csvs(args.csv)
    sections, overall_dist, seg, per_image = pipeline.analyse_sections(
        by_image, image_section, depths, cfg.include_border_fragments)
    out_dir.mkdir(parents=True, exist_ok=True)
    io.write_json(out_dir / "sections.json", {
        "sections": [s.to_dict() for s in sections],
        "per_image": {img: cd.to_dict() for img, (_, cd) in per_image.items()},
    })
    io.write_json(out_dir / "segregation.json", seg.to_dict())
    if args.svg:
        from . import plots
        for img, (dist, cd) in per_image.items():
            plots.histogram_svg(dist, out_dir / f"{img}_volume.svg", img, cd.to_dict())
        plots.histogram_svg(overall_dist, out_dir / "overall_volume.svg", "whole slope",
                            {"d'10": seg.overall.d10, "d'50": seg.overall.d50, "d'90": seg.overall.d90})
        plots.sections_svg(sections, out_dir / "sections.svg")
        plots.ratios_svg(seg, out_dir / "relative_diameters.svg")
    _print_fits(seg)


def _print_fits(seg):
    for sid in seg.section_order:
        r = seg.ratios[sid]
        print(f"{sid}: " + "  ".join(f"{n}={v:.3f}" for n, v in zip(("r10", "r50", "r90"), r)))
    for name, fit in seg.fits.items():
        print(f"slope {name}: {fit.slope:.4f}  intercept {fit.intercept:.4f}")


def cmd_eval(args, cfg):
    pred = io.read_class_mask(args.pred)
    truth = io.read_class_mask(args.truth)
    if pred.shape != truth.shape:
        raise DataError(f"prediction {pred.shape[::-1]} and truth {truth.shape[::-1]} differ in size")
    classes = (1, 2) if args.foreground_only else None
    report = segeval.metrics(segeval.confusion(pred, truth), classes=classes)
    if args.out:
        io.write_json(args.out, report.to_dict())
    print(report.table())


def cmd_kernels_selftest(args, cfg):
    from .oracles import selftest

    rows = selftest(args.cases, args.seed, args.tol)
    print(f"{'operator':<24}{'max |err|':>12}  result   (backend: {accel.backend()})")
    for name, err, ok in rows:
        print(f"{name:<24}{err:>12.3e}  {'PASS' if ok else 'FAIL'}")
    if not all(ok for *_, ok in rows):
        raise DataError("kernel selftest failed")


def cmd_synth(args, cfg):
    spec = synth.random_scene(args.width, args.height, args.n, a_range=(args.a_min, args.a_max),
                              band=args.band, seed=args.seed)
    mask, truth = synth.generate_synthetic_scene(spec)
    io.write_class_mask(args.out_mask, mask)
    if args.out_truth:
        with open(args.out_truth, "w") as fh:
            fh.write("index,centre_x_px,centre_y_px,a_px,b_px,d_px,volume_px3\n")
            for t in truth:
                fh.write(",".join([str(t.index)] + [io.fmt(v) for v in
                                   (t.centre[0], t.centre[1], t.a_px, t.b_px, t.d_px, t.volume_px)]) + "\n")
    print(f"{len(truth)} ellipses -> {args.out_mask}")


def build_parser():
    p = _Parser(prog="fragscan", description="Rock fragment segmentation post-processing and size analysis.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_, description=help_)
        _config_flags(sp)
        sp.set_defaults(func=func)
        return sp

    sp = add("tile", cmd_tile, "Cut an image into overlapping tiles")
    sp.add_argument("image")
    sp.add_argument("--out-dir", required=True)
    sp.add_argument("--rescale", nargs=2, type=int, metavar=("W", "H"),
                    help="bilinear rescale before tiling (e.g. 4096 3072)")

    sp = add("stitch", cmd_stitch, "Stitch tile masks into one full-size mask")
    sp.add_argument("tile_dir")
    sp.add_argument("--layout", help="layout JSON (default: TILE_DIR/layout.json)")
    sp.add_argument("--out", required=True)

    sp = add("postprocess", cmd_postprocess, "Class mask -> instance map + fragment CSV")
    sp.add_argument("mask")
    sp.add_argument("--out-instances", required=True)
    sp.add_argument("--out-csv", required=True)
    sp.add_argument("--image-id")

    sp = add("measure", cmd_measure, "Instance map -> fragment CSV")
    sp.add_argument("instances")
    sp.add_argument("--out-csv", required=True)
    sp.add_argument("--image-id")

    sp = add("psd", cmd_psd, "Count and volume size distributions per image")
    sp.add_argument("csv", nargs="+")
    sp.add_argument("--out-dir", required=True)
    sp.add_argument("--svg", action="store_true", help="also write histogram SVGs")

    sp = add("sections", cmd_sections, "Section statistics and segregation indices")
    sp.add_argument("csv", nargs="*")
    sp.add_argument("--out-dir", required=True)
    sp.add_argument("--reference", action="store_true",
                    help="use the bundled published section means instead of fragment CSVs")
    sp.add_argument("--svg", action="store_true")

    sp = add("eval", cmd_eval, "Score a predicted class mask against ground truth")
    sp.add_argument("pred")
    sp.add_argument("truth")
    sp.add_argument("--out")
    sp.add_argument("--foreground-only", action="store_true", help="average over Body and Boundary only")

    sp = add("kernels-selftest", cmd_kernels_selftest, "Check CARAFE/Ghost/ECA against loop oracles")
    sp.add_argument("--cases", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--tol", type=float, default=1e-6)

    sp = add("synth", cmd_synth, "Generate a synthetic Body/Boundary scene")
    sp.add_argument("--width", type=int, default=1024)
    sp.add_argument("--height", type=int, default=1024)
    sp.add_argument("--n", type=int, default=30)
    sp.add_argument("--a-min", type=float, default=10.0)
    sp.add_argument("--a-max", type=float, default=60.0)
    sp.add_argument("--band", type=int, default=2)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out-mask", required=True)
    sp.add_argument("--out-truth")
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = _cfg(args)
    except UsageError as exc:
        print(f"fragscan: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvalidArgument as exc:
        print(f"fragscan: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        args.func(args, cfg)
    except (DataError, EmptyInputError, InsufficientSamplesError) as exc:
        print(f"fragscan: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except InvalidArgument as exc:
        print(f"fragscan: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
