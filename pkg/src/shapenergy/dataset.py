"""Labeled shape datasets: sample, simulate, split, normalize, persist.

A dataset directory holds `labels.csv` (one row per sample, full float
precision), one `img_<id>.pgm` per sample, and `manifest.json`, written
last as the commit marker.  The manifest echoes every config plus the PRNG
name, seed and derived-stream labels, so regenerating from it reproduces
every byte.

PRNG streams, derived from the master seed: 0 parameter draws (x1..x4 per
sample), 1 train/test split, 2 load-time audit sample choice.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .energy import BuildingConfig, EnergyBreakdown, annual_energy
from .geometry import Footprint, GeometryConfig, ShapeParams, build_footprint
from .raster import BinaryImage, RasterSpec, decode_pgm, encode_pgm, rasterize
from .rng import PRNG_NAME, Xoshiro256StarStar, derive_seed
from .weather import SiteSpec, SyntheticWeatherConfig, WeatherSeries, parse_epw, synthesize_weather

FORMAT_VERSION = 1
PARAM_SCALE = 3.5
AUDIT_SAMPLES = 5

_STREAM_PARAMS = 0
_STREAM_SPLIT = 1
_STREAM_AUDIT = 2


class DatasetGenerationError(RuntimeError):
    pass


class DatasetLoadError(ValueError):
    pass


class DegenerateTargetsError(ValueError):
    pass


@dataclass(frozen=True)
class DatasetConfig:
    n_samples: int
    seed: int
    split_ratio: float = 0.8
    weather_source: str = "synthetic"  # "synthetic" or "epw:<path>"
    geometry: GeometryConfig = GeometryConfig()
    building: BuildingConfig = BuildingConfig()
    synthetic_weather: SyntheticWeatherConfig = SyntheticWeatherConfig()
    site: SiteSpec = SiteSpec()

    def __post_init__(self):
        if self.n_samples < 10:
            raise ValueError("n_samples must be >= 10")
        if not 0.0 < self.split_ratio < 1.0:
            raise ValueError("split ratio must be in (0, 1)")
        if self.weather_source != "synthetic" and not self.weather_source.startswith("epw:"):
            raise ValueError("weather_source must be 'synthetic' or 'epw:<path>'")


@dataclass(frozen=True)
class Sample:
    id: int
    params: ShapeParams
    image: BinaryImage
    label: EnergyBreakdown


@dataclass(frozen=True)
class Normalizer:
    """Input/target scaling fitted on the training split only.

    Parameters map to [-1, 1] by dividing by the 3.5 m offset limit;
    images are already {0, 1}; targets are z-scored with population
    statistics of the training totals.
    """

    mu_y: float
    sigma_y: float
    param_scale: float = PARAM_SCALE

    def apply_params(self, params) -> np.ndarray:
        return np.asarray(params, dtype=np.float64) / self.param_scale

    def apply_target(self, y):
        return (np.asarray(y, dtype=np.float64) - self.mu_y) / self.sigma_y

    def invert_target(self, z):
        return np.asarray(z, dtype=np.float64) * self.sigma_y + self.mu_y


def fit_normalizer(train_samples: list[Sample]) -> Normalizer:
    if len(train_samples) < 2:
        raise DegenerateTargetsError("need >= 2 training samples to fit")
    totals = np.array([s.label.total_kwh for s in train_samples])
    mu = float(totals.mean())
    sigma = float(np.sqrt(np.mean((totals - mu) ** 2)))
    if sigma == 0.0:
        raise DegenerateTargetsError("training targets are constant")
    return Normalizer(mu_y=mu, sigma_y=sigma)


def sample_params(n: int, seed: int) -> list[ShapeParams]:
    """n independent draws, each offset uniform on [-3.5, 3.5]."""
    rng = Xoshiro256StarStar(seed)
    out = []
    for _ in range(n):
        x = [rng.uniform(-PARAM_SCALE, PARAM_SCALE) for _ in range(4)]
        out.append(ShapeParams(*x))
    return out


def split(dataset_or_n, ratio: float, seed: int) -> tuple[list[int], list[int]]:
    """Seeded Fisher-Yates permutation; first floor(ratio*n) ids train.

    Accepts either a Dataset or a plain sample count.
    """
    if not 0.0 < ratio < 1.0:
        raise ValueError("ratio must be in (0, 1)")
    n = dataset_or_n if isinstance(dataset_or_n, int) else len(dataset_or_n.samples)
    rng = Xoshiro256StarStar(seed)
    ids = rng.permutation(n)
    n_train = int(math.floor(ratio * n))
    return ids[:n_train], ids[n_train:]


class Dataset:
    def __init__(self, config, samples, train_ids, test_ids, normalizer):
        self.config = config
        self.samples = samples
        self.train_ids = list(train_ids)
        self.test_ids = list(test_ids)
        self.normalizer = normalizer
        self._by_id = {s.id: s for s in samples}

    def __len__(self):
        return len(self.samples)

    def sample(self, sample_id: int) -> Sample:
        return self._by_id[sample_id]

    def params_matrix(self, ids) -> np.ndarray:
        """Normalized parameter rows (n, 4) for the DNN."""
        raw = np.array([self._by_id[i].params.as_tuple() for i in ids])
        return self.normalizer.apply_params(raw)

    def images_tensor(self, ids) -> np.ndarray:
        """Image batch (n, 1, H, W) of {0.0, 1.0} for the CNN."""
        imgs = np.stack([self._by_id[i].image.pixels for i in ids])
        return imgs[:, None, :, :].astype(np.float64)

    def totals(self, ids) -> np.ndarray:
        return np.array([self._by_id[i].label.total_kwh for i in ids])

    def targets(self, ids) -> np.ndarray:
        """Z-scored totals, shape (n, 1)."""
        return self.normalizer.apply_target(self.totals(ids))[:, None]


def build_weather(cfg: DatasetConfig) -> WeatherSeries:
    if cfg.weather_source == "synthetic":
        return synthesize_weather(cfg.synthetic_weather, cfg.site)
    path = cfg.weather_source[len("epw:"):]
    return parse_epw(Path(path).read_bytes())


def generate(cfg: DatasetConfig, out_dir) -> Dataset:
    """Run the full per-sample pipeline and persist the dataset."""
    weather = build_weather(cfg)
    rspec = RasterSpec.for_config(cfg.geometry)
    params = sample_params(cfg.n_samples, derive_seed(cfg.seed, _STREAM_PARAMS))

    samples = []
    for i, p in enumerate(params):
        try:
            footprint = build_footprint(p, cfg.geometry)
            image = rasterize(footprint, rspec)
            label = annual_energy(footprint, weather, cfg.building)
        except Exception as e:
            raise DatasetGenerationError(f"sample {i}: {e}") from e
        samples.append(Sample(id=i, params=p, image=image, label=label))

    train_ids, test_ids = split(cfg.n_samples, cfg.split_ratio, derive_seed(cfg.seed, _STREAM_SPLIT))
    normalizer = fit_normalizer([samples[i] for i in train_ids])
    ds = Dataset(cfg, samples, train_ids, test_ids, normalizer)
    save_dataset(ds, out_dir)
    return ds


def _manifest_dict(ds: Dataset) -> dict:
    cfg = ds.config
    rspec = RasterSpec.for_config(cfg.geometry)
    return {
        "format_version": FORMAT_VERSION,
        "kind": "shapenergy-dataset",
        "prng": PRNG_NAME,
        "prng_streams": {"params": _STREAM_PARAMS, "split": _STREAM_SPLIT, "audit": _STREAM_AUDIT},
        "draw_order": "x1..x4 per sample, samples in id order",
        "seed": cfg.seed,
        "n_samples": cfg.n_samples,
        "split_ratio": cfg.split_ratio,
        "train_ids": ds.train_ids,
        "test_ids": ds.test_ids,
        "normalizer": {
            "mu_y": ds.normalizer.mu_y,
            "sigma_y": ds.normalizer.sigma_y,
            "param_scale": ds.normalizer.param_scale,
        },
        "weather_source": cfg.weather_source,
        "site": asdict(cfg.site),
        "synthetic_weather": asdict(cfg.synthetic_weather),
        "geometry": asdict(cfg.geometry),
        "building": asdict(cfg.building),
        "raster": asdict(rspec),
    }


def config_from_manifest(manifest: dict) -> DatasetConfig:
    return DatasetConfig(
        n_samples=manifest["n_samples"],
        seed=manifest["seed"],
        split_ratio=manifest["split_ratio"],
        weather_source=manifest["weather_source"],
        geometry=GeometryConfig(**manifest["geometry"]),
        building=BuildingConfig(**manifest["building"]),
        synthetic_weather=SyntheticWeatherConfig(**manifest["synthetic_weather"]),
        site=SiteSpec(**manifest["site"]),
    )


def save_dataset(ds: Dataset, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    header = "id,x1,x2,x3,x4,heating_kwh,cooling_kwh,lighting_kwh,total_kwh"
    rows = [header]
    for s in ds.samples:
        x = s.params.as_tuple()
        lbl = s.label
        rows.append(",".join(
            [str(s.id)]
            + [repr(float(v)) for v in x]
            + [repr(float(v)) for v in (lbl.heating_kwh, lbl.cooling_kwh, lbl.lighting_kwh, lbl.total_kwh)]
        ))
    (out / "labels.csv").write_text("\n".join(rows) + "\n")

    for s in ds.samples:
        (out / f"img_{s.id}.pgm").write_bytes(encode_pgm(s.image))

    # manifest last: its presence marks a complete dataset
    manifest = _manifest_dict(ds)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def audited_sample_ids(manifest: dict) -> list[int]:
    """Ids whose images get recomputed during `load_dataset` (deterministic)."""
    rng = Xoshiro256StarStar(derive_seed(manifest["seed"], _STREAM_AUDIT))
    ids = rng.permutation(manifest["n_samples"])
    return ids[:min(AUDIT_SAMPLES, manifest["n_samples"])]


def load_dataset(dataset_dir, audit: bool = True) -> Dataset:
    """Read a dataset directory back, validating invariants as it goes."""
    root = Path(dataset_dir)
    manifest_path = root / "manifest.json"
    if not manifest_path.exists():
        raise DatasetLoadError(f"{manifest_path}: missing manifest")
    manifest = json.loads(manifest_path.read_text())
    if manifest.get("format_version") != FORMAT_VERSION:
        raise DatasetLoadError(
            f"{manifest_path}: format_version {manifest.get('format_version')}, "
            f"expected {FORMAT_VERSION}"
        )
    cfg = config_from_manifest(manifest)
    rspec = RasterSpec(**manifest["raster"])

    labels_path = root / "labels.csv"
    lines = labels_path.read_text().splitlines()
    if len(lines) != cfg.n_samples + 1:
        raise DatasetLoadError(
            f"{labels_path}: {len(lines)} lines, expected {cfg.n_samples + 1}"
        )

    samples = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 9:
            raise DatasetLoadError(f"{labels_path}:{lineno}: expected 9 fields")
        try:
            sid = int(parts[0])
            params = ShapeParams(*(float(v) for v in parts[1:5]))
            label = EnergyBreakdown(*(float(v) for v in parts[5:9]))
        except ValueError as e:
            raise DatasetLoadError(f"{labels_path}:{lineno}: {e}") from None
        img_path = root / f"img_{sid}.pgm"
        if not img_path.exists():
            raise DatasetLoadError(f"{img_path}: missing image")
        try:
            image = decode_pgm(img_path.read_bytes(), rspec.width_px, rspec.height_px)
        except ValueError as e:
            raise DatasetLoadError(f"{img_path}: {e}") from None
        samples.append(Sample(id=sid, params=params, image=image, label=label))

    if [s.id for s in samples] != list(range(cfg.n_samples)):
        raise DatasetLoadError(f"{labels_path}: ids must be 0..{cfg.n_samples - 1} in order")

    train_ids, test_ids = manifest["train_ids"], manifest["test_ids"]
    if sorted(train_ids + test_ids) != list(range(cfg.n_samples)):
        raise DatasetLoadError(f"{manifest_path}: split is not a partition of the ids")

    normalizer = Normalizer(**manifest["normalizer"])
    refit = fit_normalizer([samples[i] for i in train_ids])
    if (
        abs(refit.mu_y - normalizer.mu_y) > 1e-9 * max(1.0, abs(normalizer.mu_y))
        or abs(refit.sigma_y - normalizer.sigma_y) > 1e-9 * max(1.0, normalizer.sigma_y)
    ):
        raise DatasetLoadError(f"{manifest_path}: normalizer stats do not match labels.csv")

    if audit:
        for sid in audited_sample_ids(manifest):
            footprint = build_footprint(samples[sid].params, cfg.geometry)
            expected = rasterize(footprint, rspec)
            if expected != samples[sid].image:
                raise DatasetLoadError(
                    f"img_{sid}.pgm: image does not match its parameters"
                )

    return Dataset(cfg, samples, train_ids, test_ids, normalizer)
