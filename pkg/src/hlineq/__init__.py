"""Numerical laboratory for Hardy-Littlewood inequalities on ell_p^n.

Modules: ``algebra`` (polynomials, multilinear forms, polarization, norms of
coefficients), ``normopt`` (sup norms over ell_p balls), ``theory`` (closed
form exponents and constants), ``certificates`` (sharpness experiments) and
``harness`` (config-driven runs behind the ``hlineq`` command).
"""

__version__ = "0.1.0"
