"""genuq: uncertainty quantification for language-model text generation.

Estimators consume GenerationRecords (see genuq.records); the registry
(genuq.registry) exposes every estimator variant by name; the benchmark
(genuq.benchmark) scores them with rejection-curve area ratios; the
service (genuq.service) and CLI (genuq.cli) are the user-facing surfaces.
"""

__version__ = "0.1.0"

from .records import (Dataset, EnsembleTrace, GenerationRecord,  # noqa: F401
                      SampledOutput, TokenStep, load_dataset, save_dataset,
                      validate_record)
