"""Scale-invariance measurements on natural images and a square dead-leaves model."""

__version__ = "0.1.0"
