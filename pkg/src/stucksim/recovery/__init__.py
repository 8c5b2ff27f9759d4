"""Recovery layer: detector, observation, pipeline, coordinator."""
