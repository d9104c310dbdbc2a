"""Classically emulated quantum random feature method for 1-D linear PDEs."""

from .blockenc import BlockEncoding, amplify, extract_block, lcu_combine, oracle_to_be
from .experiment import ExperimentConfig, convergence_sweep, emit_results, run_experiment
from .kernel import RffBasis, dual_to_primal, kernel_approx, krr_dual_solve, rff_features
from .oracles import CollocationGrid, RandomFeatureSpec, random_feature_spec, ux_coordinate, ux_cyclic
from .pipeline import KappaCapExceeded, PipelineConfig, run_qrfm
from .problems import PdeProblem, helmholtz_problem
from .rfm import assemble_system, solve_coefficients

__version__ = "0.1.0"

__all__ = [
    "BlockEncoding", "amplify", "extract_block", "lcu_combine", "oracle_to_be",
    "ExperimentConfig", "convergence_sweep", "emit_results", "run_experiment",
    "RffBasis", "dual_to_primal", "kernel_approx", "krr_dual_solve", "rff_features",
    "CollocationGrid", "RandomFeatureSpec", "random_feature_spec", "ux_coordinate", "ux_cyclic",
    "KappaCapExceeded", "PipelineConfig", "run_qrfm",
    "PdeProblem", "helmholtz_problem",
    "assemble_system", "solve_coefficients",
]
