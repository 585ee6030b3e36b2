"""
Sub-command aggregation for the regime-swk command line.
"""
import argparse

from .cluster import register as register_cluster
from .generate import register as register_generate
from .sweep import register as register_sweep


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='regime-swk',
        description="Regime detection in time series with (sliced) Wasserstein k-means.",
    )
    subparsers = parser.add_subparsers(dest='command', required=True)
    register_generate(subparsers)
    register_cluster(subparsers)
    register_sweep(subparsers)
    return parser
