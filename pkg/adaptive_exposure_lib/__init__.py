# coding=utf-8
#
from .errors import (ConfigError, DegenerateAbscissa, DomainError, ExposureLibError, FitError, FlatResponse,
                     InvariantBreach, PreconditionError, UsageError)
from .scene_model import (HeartRateProfile, IlluminationEvent, IlluminationField, ScenarioSpec,
                          SkinReflectanceField, SpatialGainMap, ground_truth_hr, scene_radiance)
from .sensor_model import Frame, SensorConfig, capture, response_curve, roi_mean
from .exposure_controller import ControllerConfig, ControllerState, run_cycle
from .region_fusion import FusionConfig, fuse
from .rppg_core import PipelineConfig, run_pipeline
from .experiment import ExperimentConfig, run_experiment

__version__ = '0.1.0'
