"""Groundwater level category pipeline.

Fuses multi-network environmental time series into a harmonized daily
feature table, labels groundwater levels into five per-well quantile
categories, trains a stacked tree ensemble to predict them, and evaluates
predictions and climate what-if scenarios.
"""

__version__ = "0.1.0"
