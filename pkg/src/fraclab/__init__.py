"""Numerical verification toolkit for higher-order fractional Laplacians on periodic domains.

The public API is re-exported from the submodules:

- :mod:`fraclab.core`: orders, grids, Fourier transforms, spectral ``(-Δ)^gamma``;
- :mod:`fraclab.profile`: the per-frequency profile ODE and its constants;
- :mod:`fraclab.extension`: the half-space extension and its identities;
- :mod:`fraclab.frequency`: frequency function and unique-continuation diagnostics;
- :mod:`fraclab.cli`: command-line front end and reports.
"""

from .core import *  # noqa: F401,F403
from .errors import *  # noqa: F401,F403
from .extension import *  # noqa: F401,F403
from .frequency import *  # noqa: F401,F403
from .profile import *  # noqa: F401,F403
from .audit import AuditSummary, CheckResult, run_checks  # noqa: F401
from .cli import RunConfig, parse_config, run_full_audit  # noqa: F401

__version__ = "0.1.0"
