"""Tests for the castkit toolkit."""
