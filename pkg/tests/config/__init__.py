"""Config tests package."""
