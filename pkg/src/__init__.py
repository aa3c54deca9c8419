"""
Quadratic Fourier Analysis on F_5^n

Fourier transforms, Gowers uniformity norms, progression counts, quadratic
phases and factors, and the Koopman-von Neumann and arithmetic regularity
decompositions, computed exactly on small vector spaces over F_5.
"""

__version__ = "1.0.0"
