"""
elevlab - forward-looking sonar elevation-angle geometry laboratory
"""

__version__ = "1.0.0"

from elevlab.core.geometry import RigidMotion, SensorConfig, Twist

__all__ = ["RigidMotion", "SensorConfig", "Twist", "__version__"]
