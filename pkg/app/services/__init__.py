"""Services layer: experiment pipelines, reports, goldens and acceptance targets."""

from app.services.experiment_service import run

__all__ = ["run"]
