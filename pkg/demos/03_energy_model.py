"""The self-shading energy model: what a notch does to the balance.

Compares annual breakdowns for a convex bump shape versus a deeply
notched one, and demonstrates the east-west mirror symmetry that the
hourly model preserves exactly.
"""

from shapenergy import (
    BuildingConfig, GeometryConfig, ShapeParams, SyntheticWeatherConfig,
    annual_energy, build_footprint, facade_patches, mirror_ew, synthesize_weather,
)


def describe(name, breakdown):
    print(f"{name:14s} heating {breakdown.heating_kwh:10.0f}   cooling {breakdown.cooling_kwh:10.0f}   "
          f"lighting {breakdown.lighting_kwh:10.0f}   total {breakdown.total_kwh:10.0f} kWh/yr")


def main():
    geo = GeometryConfig()
    bld = BuildingConfig()
    weather = synthesize_weather(SyntheticWeatherConfig())

    base = build_footprint(ShapeParams(0, 0, 0, 0), geo)
    patches = facade_patches(base, bld)
    print(f"building: {bld.floors} floors x {bld.floor_height} m, envelope "
          f"{base.perimeter * bld.height:.0f} m2, {len(patches)} facade patches\n")

    shapes = {
        "rectangle": ShapeParams(0, 0, 0, 0),
        "bumpy": ShapeParams(3.5, 3.5, 3.5, 3.5),
        "notched": ShapeParams(-3.5, -3.5, -3.5, -3.5),
        "south_notch": ShapeParams(-3.5, 0, 0, 0),
        "north_notch": ShapeParams(0, 0, -3.5, 0),
    }
    for name, p in shapes.items():
        describe(name, annual_energy(build_footprint(p, geo), weather, bld))

    p = ShapeParams(2.2, -3.1, 0.4, 1.7)
    e1 = annual_energy(build_footprint(p, geo), weather, bld)
    e2 = annual_energy(build_footprint(mirror_ew(p), geo), weather, bld)
    print(f"\nmirror check {p.as_tuple()}:")
    describe("  original", e1)
    describe("  mirrored", e2)
    print(f"  relative difference: {abs(e1.total_kwh - e2.total_kwh) / e1.total_kwh:.2e}")


if __name__ == "__main__":
    main()
