"""Direct and inverse problems for the q-deformed heat equation ``D_q u + v(t) L u = f``."""
from .direct import DirectProblem, DirectSolution, lattice_stepper_oracle, solve_direct
from .errors import DegenerateDenominatorError, LatticeError, QDomainError, SpectrumError
from .growth import AffineFn, CoefficientProfile, ConstantFn, GrowthEvaluator
from .inverse import InverseProblem, InverseSolution, SourceProfile, recover_source, reconstruct_state, solve_inverse
from .operators import InvolutionOperator, custom_spectrum, involution_spectrum, landau_spectrum
from .qlattice import E_q, QLattice, QParams, e_q, jackson_integral
from .spectral import CoeffTrajectory, Spectrum

__version__ = "0.1.0"
