"""
Kinetic Monte Carlo toolkit
Zig-Zag walks, thinning, hybrid jump/diffusion samplers and their validation oracles
"""

__version__ = "0.2.0"
__author__ = "Kinetic Toolkit Contributors"
