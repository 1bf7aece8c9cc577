"""bnnfi: binarized-NN accelerator simulation and SEU fault injection."""

from .bnn import (
    BitMatrix,
    BitVector,
    BnnModel,
    ClassScores,
    LayerSpec,
    NetworkTopology,
    ThresholdVector,
    binarize_image,
    classify_scores,
    layer_forward,
    network_forward,
    neuron_activate,
    reference_topology,
    topology_from_shapes,
    xnor_popcount,
)
from .errors import BnnfiError, ConfigError, ContractError, DataIntegrityError, ParseError
from .faults import (
    Outcome,
    PersistentSpace,
    SamplePlan,
    ThresholdFault,
    TransientFault,
    TransientSpace,
    WeightFault,
    apply_persistent_to_model,
    classify,
    draw_sample,
    golden_run,
    inject_and_run,
    sample_size,
)
from .pipeline import (
    CompiledModel,
    LayerWindow,
    Phase,
    PhaseTable,
    RegisterDescriptor,
    RegisterFile,
    Simulator,
    build_pipeline,
    default_fifo_depths,
    phase_table,
)

__version__ = "0.1.0"
