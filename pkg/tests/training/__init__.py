"""Tests for training, evaluation and reports."""
