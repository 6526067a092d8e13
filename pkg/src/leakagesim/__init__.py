"""Treatment-leakage simulation: text proxies for an unobserved confounder,
oracle distillation, and IPW estimates of the average treatment effect."""

__version__ = "0.1.0"
