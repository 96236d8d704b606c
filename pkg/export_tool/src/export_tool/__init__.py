"""Export trained spiking-network checkpoints for the snndse simulator.

The tool converts torch checkpoints built from :class:`LifLinear`,
:class:`LifConv2d`, and ``nn.MaxPool2d`` layers into the ``snndse-model-v1``
manifest directory (float32 little-endian blobs plus sha256 checksums) and
writes recorded spike traces as SNNSPK1 files. Both formats are consumed by
the simulator purely through its documented external interfaces; nothing
here imports the simulator package.
"""

from .export import ExportError, ExportManifest, export_model, export_spike_trace, verify_export
from .layers import LifConv2d, LifLinear
from .recorder import record_forward
from .train import build_demo_net, train_demo_net, training_accuracy

__version__ = "0.1.0"

__all__ = [
    "ExportError",
    "ExportManifest",
    "LifConv2d",
    "LifLinear",
    "build_demo_net",
    "export_model",
    "export_spike_trace",
    "record_forward",
    "train_demo_net",
    "training_accuracy",
    "verify_export",
]
