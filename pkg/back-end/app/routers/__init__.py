"""API Routers"""

from .analysis import router as analysis
