from fastapi import APIRouter, HTTPException
import logging

from app.core.classical import attractor_metrics, grid_metrics, lyapunov_spectrum, to_sphere
from app.core.errors import NumericalError
from app.models.classical import ClassifyRequest, GridSpec, LyapunovRequest
from app.models.quantum import StatisticsResponse

logger = logging.getLogger(__name__)

router = APIRouter()


@router.post("/lyapunov", response_model=StatisticsResponse)
def lyapunov(request: LyapunovRequest):
    try:
        start = to_sphere(request.start())
        spec = lyapunov_spectrum(start, request.params(), request.n_periods, request.transient, request.map_variant)
        metrics = attractor_metrics(spec)

        return StatisticsResponse(
            success=True,
            message="Lyapunov spectrum computed",
            result={
                "h1": spec.h1,
                "h2": spec.h2,
                "upsilon": metrics.upsilon,
                "d_lyapunov": metrics.d_lyapunov,
            },
        )

    except NumericalError as e:
        logger.error(f"Lyapunov computation failed numerically: {str(e)}", exc_info=True)
        raise HTTPException(status_code=422, detail=str(e))
    except Exception as e:
        logger.error(f"Lyapunov computation failed: {str(e)}", exc_info=True)
        raise HTTPException(status_code=400, detail=str(e))


@router.post("/classify", response_model=StatisticsResponse)
def classify_grid(request: ClassifyRequest):
    try:
        metrics = grid_metrics(
            request.params(),
            GridSpec(request.n_target),
            n_periods=request.n_periods,
            transient=request.transient,
            h_tol=request.h_tol,
            map_variant=request.map_variant,
        )

        return StatisticsResponse(
            success=True,
            message="Grid classified",
            result={
                "f_c": metrics.chaotic_fraction,
                "mean_d_lyapunov": metrics.mean_d_lyapunov,
                "n_points": metrics.n_points,
            },
        )

    except NumericalError as e:
        logger.error(f"Grid classification failed numerically: {str(e)}", exc_info=True)
        raise HTTPException(status_code=422, detail=str(e))
    except Exception as e:
        logger.error(f"Grid classification failed: {str(e)}", exc_info=True)
        raise HTTPException(status_code=400, detail=str(e))
