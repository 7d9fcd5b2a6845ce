"""Walk the shape family: offsets -> footprint -> 48x30 plan image.

Prints the construction numbers for a few hand-picked offset vectors and
dumps their rasters as ASCII art plus PGM files next to this script.
"""

from pathlib import Path

from shapenergy import (
    GeometryConfig, RasterSpec, ShapeParams,
    build_footprint, encode_pgm, mirror_ew, rasterize,
)

OUT = Path(__file__).parent / "out"


def ascii_art(img):
    rows = []
    for r in range(img.height_px):
        rows.append("".join("#" if v else "." for v in img.pixels[r]))
    return "\n".join(rows)


def main():
    OUT.mkdir(exist_ok=True)
    cfg = GeometryConfig()
    spec = RasterSpec.for_config(cfg)
    print(f"base rectangle: {cfg.length:.3f} m x {cfg.width:.3f} m = {cfg.area_target} m2")
    print(f"raster window: x [{spec.x_min}, {spec.x_max:.1f}], y [{spec.y_min}, {spec.y_max:.1f}], "
          f"pixel {spec.pixel_dx:.3f} x {spec.pixel_dy:.3f} m\n")

    gallery = {
        "rectangle": ShapeParams(0, 0, 0, 0),
        "south_bump": ShapeParams(3.5, 0, 0, 0),
        "south_notch": ShapeParams(-3.5, 0, 0, 0),
        "pinwheel": ShapeParams(2.5, -2.5, 2.5, -2.5),
        "deep_notches": ShapeParams(-3.5, -3.5, -3.5, -3.5),
    }
    for name, p in gallery.items():
        f = build_footprint(p, cfg)
        img = rasterize(f, spec)
        print(f"--- {name} {p.as_tuple()}")
        print(f"    area {f.area:.6f} m2, perimeter {f.perimeter:.3f} m, "
              f"{len(f.vertices)} vertices, {img.interior_count()} interior px")
        (OUT / f"{name}.pgm").write_bytes(encode_pgm(img))

    p = ShapeParams(1.0, -2.0, 0.5, 3.0)
    print("\nmirroring swaps east/west offsets:",
          p.as_tuple(), "->", mirror_ew(p).as_tuple())
    print("\nsouth_notch raster:")
    print(ascii_art(rasterize(build_footprint(gallery["south_notch"], cfg), spec)))
    print(f"\nPGM files in {OUT}/")


if __name__ == "__main__":
    main()
