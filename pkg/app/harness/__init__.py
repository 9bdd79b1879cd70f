"""Experiment harness: configs, property suites, commands, CLI and HTTP routes."""
