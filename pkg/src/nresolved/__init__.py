"""Particle-number-resolved master equations for mesoscopic transport."""

from __future__ import annotations

__version__ = "0.1.0"
