"""HTTP service exposing the routing toolkit."""

from .app import create_app

__all__ = ["create_app"]
