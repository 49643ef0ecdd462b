"""Discrete logarithms in F_{q^(2k)} under a sparse medium-subfield
representation: projective-line relation generation, recursive descent to a
linear-polynomial log database, and exact combinatorial experiment tooling.
"""

__version__ = "0.1.0"
