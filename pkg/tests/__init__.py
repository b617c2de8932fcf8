"""Tests for the phototaxis toolkit."""
