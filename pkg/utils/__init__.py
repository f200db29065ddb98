# coding: utf-8
"""
工具模块
"""
from .core_math import (
    sigmoid,
    softplus,
    build_theta,
    log_odds,
    nll,
    nll_gradient,
    center_rows,
    nuclear_norm,
    prox_nuclear,
    procrustes_distance,
)
from .seeds import derive_seed, rng_for

__all__ = [
    'sigmoid',
    'softplus',
    'build_theta',
    'log_odds',
    'nll',
    'nll_gradient',
    'center_rows',
    'nuclear_norm',
    'prox_nuclear',
    'procrustes_distance',
    'derive_seed',
    'rng_for',
]
