"""Record -> spin textures -> two-time averages -> topology, in one call."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ringsim import SignalRecord, run_quench
from .spin import (SpinTimeSeries, TwoTimeGrid, overall_average, running_average,
                   series_from_record, two_time_reshape)
from .topology import BIS_THRESHOLD, TopologyResult, analyze


@dataclass(frozen=True)
class Analysis:
    series: SpinTimeSeries
    grid: TwoTimeGrid
    running: TwoTimeGrid
    avg_z: np.ndarray
    avg_y: np.ndarray
    result: TopologyResult


def analyze_series(series: SpinTimeSeries, *, threshold: float = BIS_THRESHOLD,
                   derivative: str = "central", running: bool = True) -> Analysis:
    grid = two_time_reshape(series)
    run = running_average(grid) if running else grid
    avg_z, avg_y = overall_average(grid)
    res = analyze(grid.tau, avg_z, avg_y, period=series.roundtrip_time,
                  threshold=threshold, derivative=derivative)
    return Analysis(series, grid, run, avg_z, avg_y, res)


def analyze_record(record: SignalRecord, **kw) -> Analysis:
    return analyze_series(series_from_record(record), **kw)


def simulate_and_analyze(config, *, keep_modes: bool | None = False, sink=None, **kw):
    """Run the quench and the analysis; returns ``(record, analysis)``."""
    record = run_quench(config, keep_modes=keep_modes, sink=sink)
    return record, analyze_record(record, **kw)
