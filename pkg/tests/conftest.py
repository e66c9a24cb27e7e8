import functools
import math
import warnings

import pytest

from holoquench.config import default_config, with_rates
from holoquench.pipeline import simulate_and_analyze
from holoquench.ringsim import with_time

# acceptance verdicts collected during the session, printed in the summary
AC_LINES: dict[str, str] = {}


def tiny_config(phi=math.pi, *, n_modes=11, roundtrips=40, load=60.0, **rates):
    """Fast configuration for plumbing tests (too short to classify)."""
    cfg = default_config(phi, n_modes=n_modes, modulation_roundtrips=roundtrips,
                       load_duration=load, ramp=load / 5)
    return with_rates(cfg, **rates) if rates else cfg


@functools.lru_cache(maxsize=None)
def desk_run(phi=math.pi, n_modes=41, roundtrips=4000, seed=0, mod_delta=0.0, src_delta=0.0):
    """Full-wave run and analysis, cached for the session."""
    from dataclasses import replace

    from holoquench.config import DisorderSettings
    from holoquench.disorder import DisorderSpec

    cfg = default_config(phi, n_modes=n_modes, modulation_roundtrips=roundtrips, seed=seed)
    cfg = replace(cfg, disorder=DisorderSettings(DisorderSpec("modulator", mod_delta),
                                                 DisorderSpec("source", src_delta)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        record, an = simulate_and_analyze(cfg, keep_modes=False)
    return cfg, record, an


@pytest.fixture
def tiny():
    return tiny_config()


def pytest_terminal_summary(terminalreporter):
    if AC_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(AC_LINES, key=lambda k: int(k.split("-")[1])):
            terminalreporter.write_line(AC_LINES[key])


__all__ = ["AC_LINES", "desk_run", "tiny_config", "with_time"]
