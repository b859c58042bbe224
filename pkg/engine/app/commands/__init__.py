"""CLI verbs."""
