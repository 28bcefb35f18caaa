"""Classical workbench for a quantum-algorithm treatment of the
two-site Hubbard-Holstein impurity problem.

Subpackages are organized bottom-up: exact Pauli algebra, a dense
statevector simulator, the model Hamiltonians, exact-diagonalization
references, the two-angle variational landscape, the variational
Krylov chain search, continued-fraction spectra, the two-site DMFT
loop, real-time propagation (exact, product-formula, variational),
and a command-line workbench emitting reproducible artifacts.
"""

__version__ = "0.1.0"

from .model import ModelParams
from .pauli import PauliString, PauliSum, PauliTerm

__all__ = ["ModelParams", "PauliString", "PauliSum", "PauliTerm", "__version__"]
