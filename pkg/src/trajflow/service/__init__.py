from .app import create_app
from .sessions import Session, SessionManager

__all__ = ["Session", "SessionManager", "create_app"]
