"""Robot-routing benchmark: instances, exact baselines, and LLM code-generation harness."""

__version__ = "0.1.0"
