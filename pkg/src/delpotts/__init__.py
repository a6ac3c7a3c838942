"""Delaunay Potts / Widom-Rowlinson simulation and verification toolkit.

Submodules:
    geometry        robust planar predicates, circles, arcs
    delaunay        incremental Delaunay triangulation and insertion diffs
    model           interaction potential, Hamiltonian, pseudo-periodic configs
    random_cluster  edge drawing, tilted edge measures, component bounds
    kinks           spoked-chain / kink analysis of contracted neighbourhoods
    percolation     coarse-graining cells and lattice site-bond percolation
    sampler         grand-canonical MCMC and observables
    cli             experiment runner

The compiled kernel backend in use is reported by ``delpotts.BACKEND``.
"""

from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
