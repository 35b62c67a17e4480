"""Event-camera gesture recognition.

Per-event pipeline: dynamic background suppression, linear-decay
time-surface features, hierarchical online prototype learning, and
histogram-signature k-NN classification, plus synthetic stream generators
and brute-force reference implementations for verification.
"""

from .events import (
    ClipRecord, Event, EventStream, SensorGeometry, StreamError,
    load_manifest, read_binary_events, read_text_events, validate_stream,
    write_binary_events, write_text_events,
)
from .dbs import DbsConfig, DbsFilter, cell_index, filter_stream, update_activity
from .surfaces import TimeSurface, TimeSurfaceConfig, TimestampMemory, extract, is_valid
from .network import (
    Layer, LayerConfig, Network, NetworkConfig, UndertrainedLayerError,
    learn_update, load_network, nearest_prototype, save_network, train,
)
from .classify import (
    PoolingConfig, Signature, TrainedModel, accumulate, cross_validate,
    evaluate, knn_classify, load_model, normalize, save_model,
)
from .classify import split_by_class
from .config import ConfigError, LayerSpec, PipelineConfig, parse_config
from .synth import (
    BlobSpec, CompositeSpec, LabeledStream, MovingBarSpec, gen_composite,
    gen_gesture_clip, gen_gesture_set, gen_moving_bar, gen_translating_blob,
)
from .pipeline import (
    RunReport, TrainedPipeline, benchmark, build_network, clip_signature,
    evaluate_pipeline, train_pipeline,
)

__version__ = "0.1.0"
