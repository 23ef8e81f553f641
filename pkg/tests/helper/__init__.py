"""Tests for the config and logging helpers of `mmkgc`."""
