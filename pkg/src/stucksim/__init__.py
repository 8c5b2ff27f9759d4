"""stucksim: a deterministic closed-loop driving simulator with a plug-in
recovery agent that detects immobilization and injects behavior plans."""

__version__ = "0.1.0"
