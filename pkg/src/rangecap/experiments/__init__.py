"""Desk-scale statistical experiments."""

from .report import Check, ExperimentReport
from .runs import (
    clt_experiment,
    dyadic_sandwich_experiment,
    exit_tail_check,
    exponent_fit,
    kernel_decay_check,
    pair_green_sum,
    pair_green_sum_check,
    pair_sum_expectation,
    slln_experiment,
)
from .stats import RunningMoments, ks_normal, normality, summarize, two_pass_moments
