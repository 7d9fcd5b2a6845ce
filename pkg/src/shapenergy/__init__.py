"""shapenergy: building-shape energy surrogates at desk scale.

Parametric rectilinear footprints, binary plan rasters, a deterministic
self-shading annual energy model, dataset synthesis, a from-scratch
float64 neural network engine (dense + conv, Adam), and the training
protocol comparing parameter-input and image-input regressors.
"""

__version__ = "0.1.0"

from .geometry import (
    Footprint, GeometryConfig, ShapeParams,
    base_rectangle, build_footprint, contains_point, mirror_ew,
    polygon_area, polygon_perimeter,
)
from .raster import BinaryImage, RasterSpec, decode_pgm, encode_pgm, rasterize
from .weather import (
    SiteSpec, SunPosition, SyntheticWeatherConfig, WeatherSeries,
    parse_epw, serialize_epw, sun_position, synthesize_weather,
)
from .energy import BuildingConfig, EnergyBreakdown, annual_energy, facade_patches
from .dataset import (
    Dataset, DatasetConfig, Normalizer, Sample,
    fit_normalizer, generate, load_dataset, sample_params, split,
)
from .nn import (
    AdamState, ModelSpec, ModelState,
    adam_step, backward, build_cnn, build_dnn, forward, init,
    load_checkpoint, loss_mse, param_count, save_checkpoint,
)
from .train import (
    CVReport, GridSearchRow, History, Metrics, TrainConfig,
    evaluate, export_predictions, grid_search, kfold,
    measure_step_time, train_model,
)
