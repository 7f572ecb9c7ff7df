"""Utility modules for the castkit toolkit."""

from .base_operations import BaseOperations

__all__ = ["BaseOperations"]
