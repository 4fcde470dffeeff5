"""Pathwise mild solutions of parabolic equations driven by Hölder paths.

Subpackages and modules:

- ``fbm``: fractional Brownian motion sampling and path containers
- ``holder``: Hölder, modified and weighted norms
- ``fraccalc``: Weyl fractional derivatives and the fractional pathwise integral
- ``semigroup``: diagonal analytic semigroups and their smoothing estimates
- ``coefficients``: diagonal Nemytskii noise coefficients
- ``solver``: the fixed-point map, Picard iteration and certification
- ``cli``: command-line front end
"""

from .errors import (CertificationError, DivergenceError, DomainError, EmbeddingError,
                     FracSpdeError, NumericalError)

__version__ = "0.1.0"
