"""Circle packings, scooped boundaries and fully augmented links."""
