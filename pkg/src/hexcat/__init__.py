"""hexcat: planar 3-SAT to embedded-caterpillar reduction toolkit.

Builds caterpillars whose weak unit-disk contact representations on the
hexagonal lattice encode satisfying assignments, verifies candidate
placements exactly, and exhaustively enumerates realizations of small
fragments to validate every gadget's state count.
"""

__version__ = "0.1.0"
