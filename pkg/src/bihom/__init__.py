"""Integer solutions of bihomogeneous systems and their circle-method prediction."""

__version__ = "0.1.0"
