"""Cycle-count-accurate simulator and design-space exploration harness for
sparsity-aware spiking-neural-network accelerators."""

from .accel import (
    CompressedSpikes,
    LayerCycleCost,
    SimResult,
    affected_addresses,
    compress_spikes,
    pipeline_schedule,
    simulate_network,
    timing_from_traces,
)
from .config import (
    ConfigError,
    LayerSpec,
    MappingPlan,
    NetworkConfig,
    build_mapping,
    parse_network_config,
    serialize_network_config,
)
from .cost import (
    CostLibrary,
    PowerModel,
    ResourceReport,
    estimate_energy,
    estimate_resources,
    load_cost_library,
)
from .dse import (
    SweepRow,
    SweepSpec,
    enumerate_configs,
    pareto_front,
    parse_sweep_spec,
    run_sweep,
)
from .golden import (
    LayerSpikeTrace,
    NumericOverflowError,
    WeightSet,
    decode_population,
    golden_forward,
    lif_step,
)
from .manifest import config_from_manifest, load_weights, save_weights
from .spikeio import (
    ImageSet,
    SpikeTensor,
    load_idx,
    load_image_set,
    rate_encode,
    read_spike_file,
    write_spike_file,
)

__version__ = "0.1.0"
