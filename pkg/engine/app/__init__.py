"""Corner vanishing-order engine."""
