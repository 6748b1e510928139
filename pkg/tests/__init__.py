"""ProShrink test suite."""
