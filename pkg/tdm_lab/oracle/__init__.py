"""Exact tabular solutions and the checks that compare learners against them."""

from tdm_lab.oracle.diagnostics import NeuralCheckResult, critic_table, horizon_uniformity, neural_oracle_check
from tdm_lab.oracle.dp import (
    TdmTable,
    compare_tables,
    dp_solve,
    reachability,
    table_invariant_report,
    tabular_tdm_qlearning,
    tabular_tdm_sweep,
    tabular_tdm_update,
)

__all__ = [
    'TdmTable',
    'dp_solve',
    'tabular_tdm_update',
    'tabular_tdm_sweep',
    'tabular_tdm_qlearning',
    'compare_tables',
    'reachability',
    'table_invariant_report',
    'horizon_uniformity',
    'NeuralCheckResult',
    'critic_table',
    'neural_oracle_check',
]
