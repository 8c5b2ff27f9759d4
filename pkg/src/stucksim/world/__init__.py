"""World model: lane graph, actors, stepping, scenarios."""
