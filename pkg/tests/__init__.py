"""Test package for the PIN landmark pipeline."""
