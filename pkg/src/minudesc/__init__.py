"""Gabor-jet minutia descriptors and two-stage fingerprint matching.

The usual path is image -> :class:`Pipeline` -> :class:`Template`, then
:func:`match` on two templates. A trained :class:`SubspaceTransform` maps the
360-D raw jets to 25-D descriptors; :func:`build_training_set` and
:func:`train` produce one from synthetic fingers.
"""

from .errors import MinudescError
from .evaluation import ScoreSet, eer, frr_at_far, fvc_protocol, run_experiment
from .gabor import build_bank, raw_jet, sampling_points
from .imaging import EnhanceParams, GrayImage, enhance, read_image
from .matching import MatchParams, MatchResult, Template, match, system1, system2, system3
from .minutiae import BIFURCATION, TERMINATION, ExtractParams, Minutia, extract_minutiae
from .pipeline import Pipeline
from .subspace import LabeledJetSet, SubspaceTransform, project, train
from .synth import Jitter, SynthParams, build_training_set, generate_database, generate_finger

__version__ = "0.1.0"

__all__ = [
    "BIFURCATION", "TERMINATION", "EnhanceParams", "ExtractParams", "GrayImage", "Jitter",
    "LabeledJetSet", "MatchParams", "MatchResult", "MinudescError", "Minutia", "Pipeline",
    "ScoreSet", "SubspaceTransform", "SynthParams", "Template", "build_bank",
    "build_training_set", "eer", "enhance", "extract_minutiae", "frr_at_far", "fvc_protocol",
    "generate_database", "generate_finger", "match", "project", "raw_jet", "read_image",
    "run_experiment", "sampling_points", "system1", "system2", "system3", "train",
]
