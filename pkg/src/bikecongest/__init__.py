"""Dockless bike-sharing congestion analytics.

Reconstruct trips from lock/unlock events, measure per-fence congestion
density over time bins, and cluster congested parking fences.
"""

__version__ = "0.1.0"
