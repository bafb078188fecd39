"""Theory tests package."""
