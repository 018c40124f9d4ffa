"""Export region features from annotated images as PAF1 files.

The exporter reads JSON-lines annotations, crops the person box and any
part boxes out of grayscale ``.npy`` images, runs a small fixed-weight
embedding network over each crop, and writes the vectors in the PAF1
binary format consumed by the recognition pipeline.  It depends only on
the documented file formats, never on the pipeline's code.
"""

__version__ = "0.1.0"

from .export import ExportJob, ExportSummary, run_export
from .models import MODEL_REGISTRY, TinyConvNet, load_model

__all__ = [
    "__version__",
    "ExportJob",
    "ExportSummary",
    "run_export",
    "MODEL_REGISTRY",
    "TinyConvNet",
    "load_model",
]
