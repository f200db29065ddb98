# coding: utf-8
"""
数据模型包
"""
from .database import Database
from .graph import Graph, MaskedGraph
from .latent import (
    DebiasConfig,
    DebiasResult,
    FitConfig,
    FitResult,
    LatentState,
    SourceParams,
    TransferFit,
    TransferProblem,
)

__all__ = [
    'Database',
    'Graph',
    'MaskedGraph',
    'LatentState',
    'FitConfig',
    'FitResult',
    'DebiasConfig',
    'DebiasResult',
    'SourceParams',
    'TransferFit',
    'TransferProblem',
]
