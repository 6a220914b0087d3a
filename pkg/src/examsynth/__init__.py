"""examsynth: exam-style text-in-image synthesis and multiple-choice scoring.

The pipeline turns multiple-choice science questions (text, answer options
and an optional figure) into single composite images that look like scanned
exam pages, records full provenance for every rendered instance, and scores
model predictions against the resulting dataset manifests.
"""

__version__ = "0.1.0"

from examsynth.records import Script, UnifiedRecord, FigureRef, validate_record, classify_script

__all__ = [
    "__version__",
    "Script",
    "UnifiedRecord",
    "FigureRef",
    "validate_record",
    "classify_script",
]
