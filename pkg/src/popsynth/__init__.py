"""Population synthesis toolkit: structure-aware autoregressive generation of
categorical socio-demographic records, with feasibility and diversity metrics
against a reference population."""

from .bayesnet import (
    BayesNet,
    Cpt,
    CyclicGraph,
    Dag,
    Ordering,
    bn_ancestral_sample,
    fit_cpts,
    hill_climb,
    k2_log_score,
    sample_topological_order,
)
from .benchmark import (
    BenchmarkSpec,
    ExactJoint,
    SpaceTooLarge,
    default_benchmark_spec,
    exact_joint,
    make_benchmark,
)
from .dataset import (
    Attribute,
    AttributeSchema,
    Category,
    CombinationIndex,
    CoverageCurve,
    Dataset,
    EmptyDataset,
    InvalidRate,
    Record,
    SchemaError,
    UnknownCategoryLabel,
    UnknownColumn,
    build_combination_index,
    combo_and_instance_coverage,
    coverage_analysis,
    load_dataset,
    split_h_sample,
)
from .experiment import ExperimentConfig, StageError, SweepResult, run_experiment, sweep
from .genmodels import (
    ChainModel,
    ConditionalModel,
    NonPositiveTemperature,
    PrototypicalAgent,
    apply_temperature,
    prototypical_generate,
)
from .metrics import (
    EvalReport,
    ZeroClassCounts,
    build_report,
    classify_combinations,
    precision_recall_f1,
    srmse,
    unique_combination_count,
)
from .sampler import (
    AttemptBudgetExceeded,
    EndpointUnavailable,
    GenerationConfig,
    GenerationStats,
    ProtocolViolation,
    StdioEndpoint,
    TcpEndpoint,
    generate_population,
    generate_via_external,
)
from .textcodec import (
    EncodedText,
    InvalidOutput,
    InvalidReason,
    build_corpus,
    decode_text,
    encode_record,
    generation_prompt,
)

__version__ = "0.1.0"
