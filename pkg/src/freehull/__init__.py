"""Matrix convex hulls of free semialgebraic sets via free moment relaxations."""

__version__ = "0.1.0"

from .matops import NotPSDError, is_psd, principal_sqrt  # noqa: E402
from .moments import (MomentSequence, build_hankel, build_localizing,  # noqa: E402
                      moments_from_representation, riesz_apply)
from .ncpoly import MatrixPoly, MatrixTuple, eval_poly, format_poly, parse_poly  # noqa: E402
from .relax import (RelaxConfig, build_mixed_pencil, membership, quad_module_membership,  # noqa: E402
                    separate, split_symmetrize, verify_archimedean_identity)
from .sdpcore import AffineMatrixProblem, SolverConfig, Status, Verdict, solve  # noqa: E402
from .gns import GnsResult, reconstruct  # noqa: E402
from .pencils import AffinePencil, in_spectrahedrop, monic_normalize, pencil_eval  # noqa: E402
from .scenarios import malicious_point, run_scenario  # noqa: E402

__all__ = [
    "AffineMatrixProblem", "AffinePencil", "GnsResult", "MatrixPoly", "MatrixTuple",
    "MomentSequence", "NotPSDError", "RelaxConfig", "SolverConfig", "Status", "Verdict",
    "build_hankel", "build_localizing", "build_mixed_pencil", "eval_poly", "format_poly",
    "in_spectrahedrop", "is_psd", "malicious_point", "membership", "moments_from_representation",
    "monic_normalize", "parse_poly", "pencil_eval", "principal_sqrt", "quad_module_membership",
    "reconstruct", "riesz_apply", "run_scenario", "separate", "solve", "split_symmetrize",
    "verify_archimedean_identity",
]
