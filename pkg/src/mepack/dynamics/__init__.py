from .closed import QuadraticSolution, closed_form_record, quadratic_evolve, quadratic_solution
from .oracles import hamiltonian_matrix, matrix_oracle, mc_oracle
from .potential import PolynomialPotential
from .records import ScanResult, TrajectoryRecord, write_atomic
from .scan import classical_limit_scan, deviation, moment_scan
from .taylor import (TaylorDerivatives, classical_operator_tower, evolve_taylor, liouville,
                     quantum_operator_tower, taylor_derivatives_classical, taylor_derivatives_quantum)

__all__ = [
    "PolynomialPotential",
    "QuadraticSolution",
    "quadratic_solution",
    "quadratic_evolve",
    "closed_form_record",
    "TrajectoryRecord",
    "ScanResult",
    "write_atomic",
    "TaylorDerivatives",
    "liouville",
    "classical_operator_tower",
    "quantum_operator_tower",
    "taylor_derivatives_classical",
    "taylor_derivatives_quantum",
    "evolve_taylor",
    "mc_oracle",
    "matrix_oracle",
    "hamiltonian_matrix",
    "classical_limit_scan",
    "moment_scan",
    "deviation",
]
