"""Branch-flip analysis: instrument if statements in C-like sources, flip one
branch per run via the environment, and compare measured work against the
unflipped baseline to surface planning and pruning mistakes."""

__version__ = "0.1.0"
