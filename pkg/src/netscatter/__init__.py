"""Scattering theory of excitation transfer across disordered centrosymmetric networks."""

__version__ = "0.1.0"

from .exceptions import (CentrosymmetryViolation, ConvergenceFailure, DimensionMismatch,
                         EmptyInput, NearDegenerate, NetscatterError, OutOfDomain,
                         SingularMatrix, VanishingAmplitude)
from .network import (NetworkHamiltonian, NetworkParams, SymmetryBlocks, build_deterministic,
                      decompose_symmetry, sample_random)
from .scattering import (ChannelCoupling, ScatteringResponse, dwell_time, find_peaks, s_matrix,
                         scan, transfer_probability)
from .doublet import DoubletAnalysis, Regime, analyze, classify, doublet_quality
from .statistics import (Histogram, ScaledParams, efficiency_cdf, efficiency_density,
                         efficient_fraction)
from .ensemble import EnsembleResult, SweepConfig, compare_to_theory, dimer_baseline, run_sweep

__all__ = [
    "CentrosymmetryViolation", "ConvergenceFailure", "DimensionMismatch", "EmptyInput",
    "NearDegenerate", "NetscatterError", "OutOfDomain", "SingularMatrix", "VanishingAmplitude",
    "NetworkHamiltonian", "NetworkParams", "SymmetryBlocks", "build_deterministic",
    "decompose_symmetry", "sample_random", "ChannelCoupling", "ScatteringResponse", "dwell_time",
    "find_peaks", "s_matrix", "scan", "transfer_probability", "DoubletAnalysis", "Regime",
    "analyze", "classify", "doublet_quality", "Histogram", "ScaledParams", "efficiency_cdf",
    "efficiency_density", "efficient_fraction", "EnsembleResult", "SweepConfig",
    "compare_to_theory", "dimer_baseline", "run_sweep",
]
