"""Forward scattering and the uniqueness demonstration."""
