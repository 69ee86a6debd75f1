"""HTTP service exposing the planning operations."""

from . import models  # noqa: F401
