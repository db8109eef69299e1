"""Global numeric configuration.

Facial reduction decides ranks and face memberships from eigenvalues, so the
rank cutoff is a correctness knob, not a cosmetic one.  It lives here as a
process-wide default that callers may override per call.
"""

import os

# Relative eigenvalue cutoff used when deciding the rank of a PSD matrix.
RANK_TOL = 1e-6

# Default feasibility / certificate acceptance tolerance.  Overridable via
# the FACRED_TOL environment variable; command line flags beat both.
DEFAULT_TOL = 1e-7

# Target accuracy the interior-point subsolver works to.  Certificates are
# accepted at DEFAULT_TOL; outcomes between the two are reported ambiguous.
SOLVE_TOL = 1e-8


def resolve_tol(flag_value=None):
    """Tolerance precedence: explicit flag > FACRED_TOL env var > default."""
    if flag_value is not None:
        return float(flag_value)
    env = os.environ.get("FACRED_TOL")
    if env is not None:
        return float(env)
    return DEFAULT_TOL
