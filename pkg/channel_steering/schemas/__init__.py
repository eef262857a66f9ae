"""Published JSON schemas for result documents."""
