"""Physical parameters and closed-form Lyapunov constants."""
