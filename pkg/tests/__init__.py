"""Tests for the project. This is a package to stop things from trying to import the external `tests` library."""
