"""Solar geometry and the synthetic year.

Shows the sun path for solstices and equinox at the default site, then
summarizes the deterministic clear-sky weather series the energy model
consumes.
"""

import numpy as np

from shapenergy import SiteSpec, SyntheticWeatherConfig, sun_position, synthesize_weather


def main():
    site = SiteSpec()
    print(f"site: {site.name} ({site.latitude} N, {site.longitude} E, UTC{site.timezone_offset_hours:+.0f})\n")

    for name, day in (("winter solstice", 355), ("equinox", 81), ("summer solstice", 172)):
        noon = sun_position(site, day, 12.0)
        print(f"{name:16s} declination {noon.declination:+6.2f} deg, noon altitude {noon.altitude:5.2f} deg")
        hours = [7, 9, 12, 15, 17]
        path = ", ".join(
            f"{h:02d}h az {sun_position(site, day, float(h)).azimuth:5.1f}"
            for h in hours
        )
        print(f"{'':16s} {path}")

    w = synthesize_weather(SyntheticWeatherConfig(), site)
    print("\nsynthetic year:")
    print(f"  dry-bulb: {w.dry_bulb.min():.1f} .. {w.dry_bulb.max():.1f} C "
          f"(mean {w.dry_bulb.mean():.1f})")
    print(f"  peak DNI: {w.dni.max():.0f} W/m2, daylight hours: {(w.dni > 0).sum()}")
    daily = w.dni.reshape(365, 24)
    jan, jul = daily[14], daily[195]
    print("  Jan 15 DNI by hour:", " ".join(f"{v:3.0f}" for v in jan[5:20]))
    print("  Jul 15 DNI by hour:", " ".join(f"{v:3.0f}" for v in jul[5:20]))
    print("\n(the solar day is symmetric about noon: record hours 13-k and 13+k match)")
    assert np.allclose(daily[:, 12 - 3], daily[:, 12 + 3])


if __name__ == "__main__":
    main()
