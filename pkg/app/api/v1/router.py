from fastapi import APIRouter

from app.api.v1.endpoints import constants, health, orbital

router = APIRouter()

# Include endpoint routers
router.include_router(constants.router, prefix="/constants", tags=["constants"])
router.include_router(orbital.router, prefix="/orbital", tags=["orbital"])
router.include_router(health.router, tags=["health"])
