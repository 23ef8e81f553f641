"""Tests for the experts, joint scoring and disentanglement of `mmkgc`."""
