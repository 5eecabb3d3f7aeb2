"""Tests for the ttergm package."""
