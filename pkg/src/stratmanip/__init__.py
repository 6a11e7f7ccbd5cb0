"""Manipulation planning among movable discs on a stratified configuration space."""

__version__ = "0.1.0"
