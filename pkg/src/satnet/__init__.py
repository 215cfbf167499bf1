"""satnet: a small NumPy inference framework for RGB-D salient object
detection with dual-view attention fusion, texture/semantic priors, and
multi-receptive-field refinement.

The package is CPU-only and deterministic: every operation is a pure
function of its inputs, and repeated runs produce bit-identical outputs.
"""

__version__ = "0.1.0"
