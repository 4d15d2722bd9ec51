"""LDPC decoding as quadratic binary optimization, with Chimera embedding,
simulated-annealing stand-ins for the annealer and rank-distribution BER/FER
estimators."""

__version__ = "0.1.0"

from .bp import decode as decode_min_sum
from .channel import ChannelConfig, ReceivedVector, modulate_bpsk, posterior_prob, snr_to_sigma2, transmit
from .chimera import ChimeraGraph, build_hardware_problem, capacity, construct_qgem_code, embed_code, unembed, verify_embedding
from .evaluator import InstanceDistribution, ber, fer, pr_rmin, rank_solutions, throughput
from .experiment import QbpDecoder, calibrate_jferro, calibrate_w2, run_experiment
from .ldpc import CodeSpec, ParityCheckMatrix, construct_regular_code, encode, generator, load_alist, save_alist, syndrome
from .qubo import ObjectiveWeights, ancilla_count, build_decoding_problem, qubo_to_ising
from .sampler import AnnealConfig, SampleSet, exhaustive_solve, simulated_anneal

__all__ = [
    "AnnealConfig",
    "ChannelConfig",
    "ChimeraGraph",
    "CodeSpec",
    "InstanceDistribution",
    "ObjectiveWeights",
    "ParityCheckMatrix",
    "QbpDecoder",
    "ReceivedVector",
    "SampleSet",
    "ancilla_count",
    "ber",
    "build_decoding_problem",
    "build_hardware_problem",
    "calibrate_jferro",
    "calibrate_w2",
    "capacity",
    "construct_qgem_code",
    "construct_regular_code",
    "decode_min_sum",
    "embed_code",
    "encode",
    "exhaustive_solve",
    "fer",
    "generator",
    "load_alist",
    "modulate_bpsk",
    "posterior_prob",
    "pr_rmin",
    "qubo_to_ising",
    "rank_solutions",
    "run_experiment",
    "save_alist",
    "simulated_anneal",
    "snr_to_sigma2",
    "syndrome",
    "throughput",
    "transmit",
    "unembed",
    "verify_embedding",
]
