"""Distillation of several students that also learn from their peers' combined outputs, on a small autodiff engine."""

__version__ = "0.1.0"
