"""Moment determinacy and quasi-analyticity toolkit.

Submodules:

- ``seqcore``: positive sequences, log-convex regularization, the T function
- ``qacheck``: quasi-analyticity conditions and their cross-consistency
- ``bumpforge``: exact compactly supported witnesses with derivative bounds
- ``mp1d``: one-dimensional moment problems (Hankel, Carleman, quadrature)
- ``mpmulti``: multivariate moment matrices and the truncated GNS model
- ``realize``: tensor moment sequences and determining sequences
- ``cli``: the ``momentdet`` command
"""

__version__ = "0.1.0"

from .seqcore import FLOAT, RATIONAL, PositiveSequence, builtin, from_values  # noqa: E402
from .verdict import DEFAULT_CONFIG, Status, Verdict, VerdictConfig  # noqa: E402

__all__ = [
    "DEFAULT_CONFIG",
    "FLOAT",
    "RATIONAL",
    "PositiveSequence",
    "Status",
    "Verdict",
    "VerdictConfig",
    "__version__",
    "builtin",
    "from_values",
]
