"""End-to-end processing built from the module primitives."""
from collections import OrderedDict

from . import fusion, graindist, raster, shape
from .config import PipelineConfig


def postprocess(mask, cfg=PipelineConfig()):
    """Class mask -> ``(instance map, fragments)``.

    Opening, seed extraction, region expansion, measurement and fine-particle
    exclusion, in that order.
    """
    opened = raster.morphological_open(mask, cfg.se_half, cfg.se_shape)
    seeds = fusion.extract_seeds(opened, cfg.seed_connectivity)
    inst = fusion.expand_regions(opened, seeds, cfg.max_radius, cfg.step_connectivity)
    frags = shape.measure(inst, cfg.cm_per_pixel)
    return fusion.filter_fine(inst, frags, cfg.min_diameter_px)


def tile_and_stitch(mask_or_tiles, layout, predict=None):
    """Run ``predict`` on every tile of an image and stitch the results."""
    tiles = raster.iter_tiles(mask_or_tiles, layout)
    if predict is not None:
        tiles = ((o, predict(t)) for o, t in tiles)
    return raster.stitch(list(tiles), layout)


def image_summary(fragments, cfg=PipelineConfig()):
    """Count/volume distributions and their headline statistics for one image."""
    count = graindist.psd(fragments, "count", cfg.count_bin_cm)
    volume = graindist.psd(fragments, "volume", cfg.volume_bin_cm)
    below, above, mean_d = graindist.count_summary(fragments, cfg.small_threshold_cm, cfg.large_threshold_cm)
    return {
        "n_fragments": len(fragments),
        "count_summary": {
            f"share_below_{cfg.small_threshold_cm:g}cm": below,
            f"share_above_{cfg.large_threshold_cm:g}cm": above,
            "mean_d_cm": mean_d,
        },
        "characteristic_diameters": graindist.characteristic_diameters(volume).to_dict(),
        "count_distribution": count.to_dict(),
        "volume_distribution": volume.to_dict(),
    }, count, volume


def analyse_sections(fragments_by_image, image_section, depths, include_border=True):
    """Per-section reports, pooled overall diameters and the segregation fit.

    ``image_section`` maps image id -> section id; section order follows
    ``depths`` (an ordered mapping section id -> depth range).
    """
    def usable(frags):
        return [f for f in frags if include_border or not f.touches_border]

    per_section = OrderedDict((sid, []) for sid in depths)
    per_image = {}
    pooled = []
    for img, frags in fragments_by_image.items():
        if img not in image_section:
            continue
        frags = usable(frags)
        dist = graindist.psd(frags, "volume")
        cd = graindist.characteristic_diameters(dist)
        per_image[img] = (dist, cd)
        per_section.setdefault(image_section[img], []).append(cd)
        pooled.extend(frags)
    sections = [
        graindist.section_report(cds, sid, depths.get(sid, ""))
        for sid, cds in per_section.items()
    ]
    overall_dist, overall = graindist.pool_overall(pooled)
    seg = graindist.segregation(OrderedDict((s.section_id, s.mean) for s in sections), overall)
    return sections, overall_dist, seg, per_image
