#!/usr/bin/env python3
"""
niljs: Jenkins-Serrin constant mean curvature graphs in Nil3(tau).

Dirichlet solver for the prescribed mean curvature equation over curvilinear
domains, flux identities, admissible-polygon solvability checks and the
truncated-data sequences with divergence-line detection.
"""

from .core import Nil3Kernel, RunResult

__version__ = "0.1.0"

__all__ = ['Nil3Kernel', 'RunResult']
