"""vitalcast: workout-stream telemetry extraction and emotion correlation.

A library plus CLI that reads heart-rate and power readouts out of recorded
workout videos through an OCR preprocessing pipeline, ingests emotion-channel
CSV exports, cleans and aligns the series on a common 1 Hz grid, and emits
Pearson-correlation reports. A synthetic fixture generator provides exact
ground truth so the whole pipeline is verifiable offline.
"""

__version__ = "0.1.0"

from .analysis import (
    CorrelationReport,
    WindowCorrelation,
    correlation_matrix,
    export_report,
    pearson,
    tradeoff_series,
    windowed_correlation,
)
from .emotion_ingest import (
    AlignedDataset,
    EmotionMapping,
    EmotionSeries,
    align,
    parse_emotion_csv,
)
from .errors import (
    BadDuration,
    ConfigError,
    EmptyExport,
    EmptyImage,
    EmptySeries,
    EngineFailure,
    EngineMissing,
    IoFailure,
    MediaToolFailure,
    MediaToolMissing,
    MissingColumn,
    NoGlyphFound,
    RoiOutOfBounds,
    TooFewPairs,
    UnknownFeature,
    UnreadableVideo,
    VitalcastError,
    ZeroVariance,
)
from .image_ops import (
    BinaryImage,
    GrayImage,
    PreprocessParams,
    RoiSpec,
    binarize,
    crop,
    gaussian_blur,
    load_gray,
    otsu_threshold,
    preprocess_roi,
    resize,
    save_png,
    sharpen,
)
from .ocr import (
    ChannelRange,
    ExtractResult,
    Reading,
    RecognizerSpec,
    extract_series,
    parse_reading,
    recognize,
    template_match_digit,
)
from .series_clean import (
    CleanParams,
    CleanedChannel,
    TelemetrySeries,
    clean_series,
    ema,
    series_stats,
    zscore_filter,
)
from .synth import (
    FixtureLayout,
    GroundTruth,
    NoiseParams,
    TruthParams,
    generate_correlated_emotion,
    generate_truth,
    render_frames,
)
from .video_prep import (
    PrepPlan,
    VideoMeta,
    VideoPart,
    crop_video,
    extract_frames,
    normalize_and_concat,
    probe,
)
