"""Linked matrix factorization (LMF, LMF-JIVE) for three linked matrices."""

import json as _json

from ._core import (  # noqa: F401
    FitReport,
    JiveFit,
    JiveModel,
    JointFit,
    JointModel,
    LowRank,
    NumericalError,
    RankSpec,
    ValidationError,
    __version__,
    center_and_scale,
    diagonalize_sx,
    fit_jive,
    fit_joint,
    generate_linked,
    impute,
    orthogonalize,
    reconstruction_error,
    select_ranks,
    verify_identifiability,
)
from ._core import run_joint_study_json as _run_joint_study_json


def run_joint_study(replicates=100, seed=0, threads=1):
    """Joint-only simulation study; returns the report as a dict."""
    return _json.loads(_run_joint_study_json(replicates, seed, threads))
