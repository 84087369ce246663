"""Grid, state layout and the order-reduced semi-discrete system."""
