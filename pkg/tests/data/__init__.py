"""Tests for the dataset functionality of `mmkgc`."""
