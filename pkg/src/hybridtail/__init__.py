"""Tail asymptotics and Monte Carlo for fluid buffers fed by Gaussian noise plus an On-Off source."""

__version__ = "0.1.0"
