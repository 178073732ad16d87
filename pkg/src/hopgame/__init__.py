"""Cut-matching game for constant-hop expanders with flow-based verification."""

from __future__ import annotations

__version__ = "0.1.0"
