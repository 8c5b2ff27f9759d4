"""Baseline AV stack: perception, routing, decision, control."""
