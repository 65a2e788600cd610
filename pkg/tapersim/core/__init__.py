"""Core utilities for tapersim."""
from .errors import ConfigError, PhysicsError, TapersimError
from .logging import get_run_id, setup_logging
