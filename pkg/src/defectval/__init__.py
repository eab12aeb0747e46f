"""Meta-validation of model-validation techniques for cross-release defect prediction."""

from __future__ import annotations

__version__ = "0.1.0"
