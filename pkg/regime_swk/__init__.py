"""
regime-swk: regime detection in time series with Wasserstein k-means.
"""
__version__ = "1.0.0"
