"""Tests for the `mmkgc.numeric` package."""
