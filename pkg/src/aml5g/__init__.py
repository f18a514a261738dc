"""Adversarial machine learning against 5G spectrum sharing and physical-layer
authentication: signal models, from-scratch neural networks, the two attack
scenarios, the proactive defense and an experiment harness."""

__version__ = "0.1.0"
