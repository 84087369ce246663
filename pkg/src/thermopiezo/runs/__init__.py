"""Run orchestration and result artifacts."""
