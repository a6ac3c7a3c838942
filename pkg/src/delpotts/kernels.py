"""Kernel backend selection.

The hot inner loops (heat-bath sweeps, exact tilted enumeration,
connectivity queries, lattice percolation trials, predicate filters) live
in a compiled Cython module.  When the compiled module is unavailable
(e.g. running straight from a source tree) the pure-Python twin is used
instead; both produce identical results for identical seeds.

``BACKEND`` reports which implementation is active.
"""

from . import _kernels_py

try:  # compiled core, built by setup.py
    from . import _kernels as _impl
    BACKEND = "cython"
except ImportError:  # pragma: no cover - depends on build environment
    _impl = _kernels_py
    BACKEND = "python"

UNCERTAIN = _kernels_py.UNCERTAIN
MAX_EXACT_EDGES = _kernels_py.MAX_EXACT_EDGES

uniform_at = _impl.uniform_at
trial_seed = _impl.trial_seed
count_components = _impl.count_components
component_labels = _impl.component_labels
ncc_boundary = _impl.ncc_boundary
tilted_heat_bath = _impl.tilted_heat_bath
tilted_exact = _impl.tilted_exact
lattice_site_trials = _impl.lattice_site_trials
lattice_mixed_trials = _impl.lattice_mixed_trials
lattice_mixed_pair_trials = _impl.lattice_mixed_pair_trials
orient2d_filtered = _impl.orient2d_filtered
incircle_filtered = _impl.incircle_filtered
