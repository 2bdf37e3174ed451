"""JSON schemas for configuration and emitted files."""
