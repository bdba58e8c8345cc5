"""Features module - Complete user capabilities."""
