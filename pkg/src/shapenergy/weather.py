"""Hourly weather series (EPW or synthesized) and the solar geometry they feed.

A series always holds 8760 chronological records of a non-leap year.  Each
record covers one clock hour, numbered 1..24 as in EPW files, and is
evaluated at the start of its hour: record h of a day corresponds to solar
hour h - 1.  The synthetic model applies no equation-of-time or longitude
correction, so solar noon coincides with clock noon and the solar day is
exactly symmetric about it; record hours h and 26 - h of one day see
mirror-image sun positions.

Azimuth is measured clockwise from north, altitude above the horizon,
both in degrees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

HOURS_PER_YEAR = 8760

_DAYS_PER_MONTH = (31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31)
_MONTH_START = np.concatenate([[0], np.cumsum(_DAYS_PER_MONTH)])[:12]

# EPW data-row fields, 1-based as in the EPW data dictionary
_FIELD_DRY_BULB = 7
_FIELD_DNI = 15
_FIELD_DHI = 16
_SENTINEL_DRY_BULB = 99.9
_SENTINEL_IRRADIANCE = 9999.0


class EpwParseError(ValueError):
    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        loc = ""
        if line is not None:
            loc += f" (line {line}"
            loc += f", field {field})" if field else ")"
        super().__init__(message + loc)
        self.line = line
        self.field = field


@dataclass(frozen=True)
class SiteSpec:
    latitude: float = 30.601
    longitude: float = -96.314
    timezone_offset_hours: float = -6.0
    name: str = "College Station TX"

    def __post_init__(self):
        if not -90.0 <= self.latitude <= 90.0:
            raise ValueError(f"latitude {self.latitude} outside [-90, 90]")
        if not -180.0 <= self.longitude <= 180.0:
            raise ValueError(f"longitude {self.longitude} outside [-180, 180]")


@dataclass(frozen=True)
class HourRecord:
    month: int
    day: int
    hour: int
    dry_bulb: float
    dni: float
    dhi: float


@dataclass(frozen=True)
class SunPosition:
    altitude: float
    azimuth: float
    declination: float


@dataclass(frozen=True)
class SyntheticWeatherConfig:
    """Deterministic stand-in climate, hot-summer continental by default.

    The default diurnal amplitude is zero: the diurnal term peaks at 15:00
    solar, which is not symmetric about solar noon, and a symmetric day is
    what makes east-west mirror tests of the energy model exact.
    """

    mean_temp_c: float = 20.5
    annual_amplitude_c: float = 8.5
    diurnal_amplitude_c: float = 0.0
    dni_peak_wm2: float = 900.0
    diffuse_fraction: float = 0.25

    def __post_init__(self):
        if self.annual_amplitude_c < 0 or self.diurnal_amplitude_c < 0:
            raise ValueError("temperature amplitudes must be >= 0")
        if self.dni_peak_wm2 < 0:
            raise ValueError("dni peak must be >= 0")
        if not 0.0 <= self.diffuse_fraction <= 1.0:
            raise ValueError("diffuse fraction must be in [0, 1]")


class WeatherSeries:
    """8760 chronological hourly records with bulk array access."""

    def __init__(self, site, month, day, hour, dry_bulb, dni, dhi, source):
        self.site = site
        self.source = source
        arrays = {}
        for name, values, dtype in (
            ("month", month, np.int64),
            ("day", day, np.int64),
            ("hour", hour, np.int64),
            ("dry_bulb", dry_bulb, np.float64),
            ("dni", dni, np.float64),
            ("dhi", dhi, np.float64),
        ):
            a = np.asarray(values, dtype=dtype)
            if a.shape != (HOURS_PER_YEAR,):
                raise ValueError(
                    f"{name}: expected {HOURS_PER_YEAR} values, got {a.shape}"
                )
            a.setflags(write=False)
            arrays[name] = a
        self.__dict__.update(arrays)
        if (self.dni < 0).any() or (self.dhi < 0).any():
            raise ValueError("irradiance values must be >= 0")
        if (self.dry_bulb < -60).any() or (self.dry_bulb > 60).any():
            raise ValueError("dry-bulb values outside [-60, 60] C")
        t = (day_of_year(self.month, self.day) - 1) * 24 + (self.hour - 1)
        if not (np.diff(t) == 1).all() or t[0] != 0:
            raise ValueError("records must cover the non-leap year in order")

    def __len__(self):
        return HOURS_PER_YEAR

    def record(self, i: int) -> HourRecord:
        return HourRecord(
            int(self.month[i]), int(self.day[i]), int(self.hour[i]),
            float(self.dry_bulb[i]), float(self.dni[i]), float(self.dhi[i]),
        )

    def day_of_year(self) -> np.ndarray:
        return day_of_year(self.month, self.day)

    def solar_hour(self) -> np.ndarray:
        """Solar hour of each record: start of the record's clock hour."""
        return (self.hour - 1).astype(np.float64)


def day_of_year(month, day):
    """1-based day of a non-leap year; vectorized."""
    m = np.asarray(month, dtype=np.int64)
    return _MONTH_START[m - 1] + np.asarray(day, dtype=np.int64)


def month_day_of_year(doy: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of `day_of_year`, vectorized."""
    doy = np.asarray(doy, dtype=np.int64)
    month = np.searchsorted(_MONTH_START, doy, side="right")
    day = doy - _MONTH_START[month - 1]
    return month, day


def solar_vectors(site: SiteSpec, days, solar_hours):
    """Declination (deg), altitude (deg) and the horizontal sun direction.

    The direction is returned as unit (east, north) components rather than
    an angle: the hour-angle form gives exact zeros at solar noon and exact
    sign flips between mirrored morning/afternoon hours, which angle
    round-trips through degrees would destroy.
    """
    days = np.asarray(days, dtype=np.float64)
    hours = np.asarray(solar_hours, dtype=np.float64)
    decl = np.radians(23.45) * np.sin(2.0 * math.pi * (284.0 + days) / 365.0)
    omega = np.radians(15.0 * (hours - 12.0))
    phi = math.radians(site.latitude)

    sin_alt = (
        math.sin(phi) * np.sin(decl)
        + math.cos(phi) * np.cos(decl) * np.cos(omega)
    )
    altitude = np.degrees(np.arcsin(np.clip(sin_alt, -1.0, 1.0)))

    east = -np.cos(decl) * np.sin(omega)
    north = math.cos(phi) * np.sin(decl) - math.sin(phi) * np.cos(decl) * np.cos(omega)
    norm = np.hypot(east, north)
    safe = np.where(norm == 0.0, 1.0, norm)
    return np.degrees(decl), altitude, east / safe, north / safe


def solar_angles(site: SiteSpec, days, solar_hours):
    """Declination, altitude, azimuth (degrees) for arrays of times.

    Cooper declination; altitude from the standard hour-angle identity;
    azimuth as atan2(east, north) of the sun direction vector, mapped to
    [0, 360) clockwise from north.
    """
    decl, altitude, east, north = solar_vectors(site, days, solar_hours)
    azimuth = np.degrees(np.arctan2(east, north)) % 360.0
    return decl, altitude, azimuth


def sun_position(site: SiteSpec, day_of_year: int, solar_hour: float) -> SunPosition:
    if not 1 <= day_of_year <= 365:
        raise ValueError(f"day_of_year {day_of_year} outside 1..365")
    decl, alt, az = solar_angles(site, [day_of_year], [solar_hour])
    return SunPosition(float(alt[0]), float(az[0]), float(decl[0]))


def synthesize_weather(
    cfg: SyntheticWeatherConfig, site: SiteSpec = SiteSpec()
) -> WeatherSeries:
    """Deterministic clear-sky year for `site`.

    dry_bulb(t) = mean - annual_amp * cos(2*pi*(day - 15)/365)
                       + diurnal_amp * cos(2*pi*(solar_hour - 15)/24)
    dni(t) = peak * max(0, sin(altitude))**0.6 while the sun is up, else 0;
    dhi = diffuse_fraction * dni.
    """
    doy = np.repeat(np.arange(1, 366), 24)
    hour = np.tile(np.arange(1, 25), 365)
    month, day = month_day_of_year(doy)
    solar_hour = (hour - 1).astype(np.float64)

    dry_bulb = (
        cfg.mean_temp_c
        - cfg.annual_amplitude_c * np.cos(2.0 * math.pi * (doy - 15) / 365.0)
        + cfg.diurnal_amplitude_c * np.cos(2.0 * math.pi * (solar_hour - 15.0) / 24.0)
    )
    _, altitude, _ = solar_angles(site, doy, solar_hour)
    sin_alt = np.sin(np.radians(altitude))
    dni = np.where(altitude > 0.0, cfg.dni_peak_wm2 * np.maximum(0.0, sin_alt) ** 0.6, 0.0)
    dhi = cfg.diffuse_fraction * dni
    return WeatherSeries(site, month, day, hour, dry_bulb, dni, dhi, source="synthetic")


def parse_epw(data: bytes) -> WeatherSeries:
    """Extract dry-bulb, DNI and DHI plus site metadata from an EPW file.

    Expects the standard layout: 8 header lines, then 8760 data rows.
    Missing-value sentinels (99.9 dry-bulb, 9999 irradiance) are rejected
    rather than imputed.
    """
    text = data.decode("utf-8", errors="replace")
    lines = text.splitlines()
    if len(lines) < 8:
        raise EpwParseError(f"expected 8 header lines, found {len(lines)}")

    loc = lines[0].split(",")
    if loc[0].strip().upper() != "LOCATION" or len(loc) < 9:
        raise EpwParseError("first line is not a LOCATION header", line=1)
    try:
        site = SiteSpec(
            latitude=float(loc[6]),
            longitude=float(loc[7]),
            timezone_offset_hours=float(loc[8]),
            name=",".join(loc[1:4]),
        )
    except ValueError as e:
        raise EpwParseError(f"bad LOCATION header: {e}", line=1) from None

    rows = [ln for ln in lines[8:] if ln.strip()]
    if len(rows) != HOURS_PER_YEAR:
        raise EpwParseError(f"expected {HOURS_PER_YEAR} rows, found {len(rows)}")

    month = np.empty(HOURS_PER_YEAR, dtype=np.int64)
    day = np.empty(HOURS_PER_YEAR, dtype=np.int64)
    hour = np.empty(HOURS_PER_YEAR, dtype=np.int64)
    dry_bulb = np.empty(HOURS_PER_YEAR)
    dni = np.empty(HOURS_PER_YEAR)
    dhi = np.empty(HOURS_PER_YEAR)

    for i, row in enumerate(rows):
        lineno = 9 + i
        fields = row.split(",")
        if len(fields) < _FIELD_DHI:
            raise EpwParseError(
                f"row has {len(fields)} fields, need at least {_FIELD_DHI}",
                line=lineno,
            )

        def num(index_1based: int, name: str) -> float:
            raw = fields[index_1based - 1].strip()
            try:
                return float(raw)
            except ValueError:
                raise EpwParseError(
                    f"non-numeric value {raw!r}", line=lineno, field=name
                ) from None

        month[i] = int(num(2, "month"))
        day[i] = int(num(3, "day"))
        hour[i] = int(num(4, "hour"))
        t = num(_FIELD_DRY_BULB, "dry_bulb")
        b = num(_FIELD_DNI, "dni")
        d = num(_FIELD_DHI, "dhi")
        if t == _SENTINEL_DRY_BULB:
            raise EpwParseError("missing-value sentinel 99.9", line=lineno, field="dry_bulb")
        if b == _SENTINEL_IRRADIANCE:
            raise EpwParseError("missing-value sentinel 9999", line=lineno, field="dni")
        if d == _SENTINEL_IRRADIANCE:
            raise EpwParseError("missing-value sentinel 9999", line=lineno, field="dhi")
        dry_bulb[i] = t
        dni[i] = b
        dhi[i] = d

    try:
        return WeatherSeries(site, month, day, hour, dry_bulb, dni, dhi, source="epw")
    except ValueError as e:
        raise EpwParseError(str(e)) from None


def serialize_epw(series: WeatherSeries) -> bytes:
    """Write a minimal EPW carrying the three channels this library reads.

    Fields other than timestamp, dry-bulb, DNI and DHI are filled with
    benign constants; `parse_epw` round-trips the extracted channels.
    """
    site = series.site
    lines = [
        f"LOCATION,{site.name},-,-,synthetic,000000,"
        f"{site.latitude},{site.longitude},{site.timezone_offset_hours},100.0"
    ]
    lines += [
        "DESIGN CONDITIONS,0",
        "TYPICAL/EXTREME PERIODS,0",
        "GROUND TEMPERATURES,0",
        "HOLIDAYS/DAYLIGHT SAVINGS,No,0,0,0",
        "COMMENTS 1,synthetic export",
        "COMMENTS 2,",
        "DATA PERIODS,1,1,Data,Sunday,1/1,12/31",
    ]
    for i in range(HOURS_PER_YEAR):
        f = ["0"] * 35
        f[0] = "1999"
        f[1] = str(int(series.month[i]))
        f[2] = str(int(series.day[i]))
        f[3] = str(int(series.hour[i]))
        f[4] = "0"
        f[5] = "A"
        f[_FIELD_DRY_BULB - 1] = repr(float(series.dry_bulb[i]))
        f[_FIELD_DNI - 1] = repr(float(series.dni[i]))
        f[_FIELD_DHI - 1] = repr(float(series.dhi[i]))
        lines.append(",".join(f))
    return ("\n".join(lines) + "\n").encode("utf-8")
