"""Energy-balanced time integration of the semi-discrete system."""
