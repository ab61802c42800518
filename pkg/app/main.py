from fastapi import FastAPI

from app import __version__
from app.api.routes import classical, quantum
from app.config import configure_logging
from app.core.constants import constants_table

configure_logging()

app = FastAPI(title="Dissipative Kicked Top Lab", version=__version__)

# Include routers
app.include_router(quantum.router, prefix="/api")
app.include_router(classical.router, prefix="/api")


@app.get("/")
async def index():
    return {
        "name": "Dissipative Kicked Top Lab",
        "version": __version__,
        "reference": constants_table(),
    }
