"""Point-source expansions on the exterior of the unit disk and ball.

Submodules:

- :mod:`pointsource.geometry` source configurations and the projection axis
- :mod:`pointsource.complex_basis` logarithmic and pole basis in the plane
- :mod:`pointsource.real_basis` masses, dipoles and multipoles in R^2 and R^3
- :mod:`pointsource.structured_matrices` moment matrices, elimination, C
- :mod:`pointsource.independence_lab` numerical uniqueness checks
- :mod:`pointsource.reduction` R^3 to R^2 line-integral reduction
- :mod:`pointsource.conjecture_probe` Monte-Carlo and adversarial C probes
"""

__version__ = "0.1.0"
