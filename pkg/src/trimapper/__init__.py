"""Interactive trimap prediction from clicks.

Simulated three-class click policies, pluggable trimap predictors, a
geodesic matting baseline, a batch evaluation harness, and a local session
service for a browser UI.
"""

from .core import Click, LabelClass, SimulationConfig

__version__ = "0.1.0"

__all__ = ["Click", "LabelClass", "SimulationConfig", "__version__"]
