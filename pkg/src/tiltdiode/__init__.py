"""Rectification in a boundary-driven, tilted, interacting spinless-fermion chain.

Submodules:

``model``           Fock basis, Hamiltonian, current operators
``symmetry``        CP and particle-number sectors
``lindblad``        Lindbladian construction and steady-state solvers
``observables``     populations, currents, impurity, OSEE, rectification
``spectrum``        perturbative domain energies and avoided crossings
``noninteracting``  closed linear system for the quadratic (Delta = 0) chain
``ansatz``          extended-precision dark-state ansatz for reverse bias
``mesoleads``       driving through a few damped lead modes
``sweep``           configured parameter sweeps with CSV/JSON output
"""

from .model import ModelParams

__version__ = "0.1.0"
__all__ = ["ModelParams", "__version__"]
