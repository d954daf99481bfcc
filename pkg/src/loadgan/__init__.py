"""loadgan: unsupervised feature extraction and controllable synthesis of daily load profiles."""

__version__ = "0.1.0"
