# main.py
from datetime import datetime, timezone

from fastapi import FastAPI, Request
from app.config import settings
from app.routers.analysis import router as analysis_router
from app.schemas import HealthResponse
import logging

app = FastAPI(title=settings.PROJECT_NAME, version=settings.VERSION)

@app.get("/")
async def root():
    return {"message": f"{settings.PROJECT_NAME} is running"}

@app.get("/health", response_model=HealthResponse)
async def health():
    return HealthResponse(status="ok", version=settings.VERSION, timestamp=datetime.now(timezone.utc))

# Middleware for logging requests
@app.middleware("http")
async def log_requests(request: Request, call_next):
    logger = logging.getLogger(__name__)
    logger.info(f"Incoming request: {request.method} {request.url}")

    if request.method == "POST":
        body = await request.body()
        try:
            logger.debug(f"Request body: {body.decode()}")
        except UnicodeDecodeError:
            logger.debug("Could not decode request body")

    response = await call_next(request)
    return response

# Include routers
app.include_router(analysis_router)

@app.on_event("startup")
async def startup_event():
    logging.basicConfig(level=settings.LOG_LEVEL)
    logger = logging.getLogger(__name__)
    logger.info(f"Starting {settings.PROJECT_NAME} {settings.VERSION}")
