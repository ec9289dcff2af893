"""pentakit: solutions of the pentagon relation as families of block linear maps."""

__version__ = "0.1.0"
