from fastapi import APIRouter, HTTPException
import logging

from app.config import check_spin_ceiling
from app.core.errors import NumericalError
from app.core.liouville import floquet_spectrum
from app.core.spectral_stats import complex_spacing_ratios, oracle_statistics, ratio_statistics
from app.models.quantum import OracleRequest, SpectrumRequest, StatisticsResponse

logger = logging.getLogger(__name__)

router = APIRouter()


@router.post("/spectrum-stats", response_model=StatisticsResponse)
def spectrum_stats(request: SpectrumRequest):
    try:
        params = request.params()
        check_spin_ceiling(params.j)
        spec, fraction = floquet_spectrum(params, request.sector, request.variant, request.epsilon)
        samples = complex_spacing_ratios(spec.eigenphases)
        stats = ratio_statistics(samples)

        return StatisticsResponse(
            success=True,
            message="Spectrum analysed",
            result={
                "mean_r": stats.mean_r,
                "mean_neg_cos": stats.mean_neg_cos,
                "R_c": stats.R_c,
                "Theta_c": stats.Theta_c,
                "sector": spec.parity_sector,
                "n_eigs": len(spec),
                "n_filtered": spec.n_filtered,
                "n_filtered_fraction": fraction,
                "n_branch_cut": spec.n_branch_cut,
                "n_merged": samples.n_merged,
            },
        )

    except NumericalError as e:
        logger.error(f"Spectrum analysis failed numerically: {str(e)}", exc_info=True)
        raise HTTPException(status_code=422, detail=str(e))
    except Exception as e:
        logger.error(f"Spectrum analysis failed: {str(e)}", exc_info=True)
        raise HTTPException(status_code=400, detail=str(e))


@router.post("/oracle", response_model=StatisticsResponse)
def oracle(request: OracleRequest):
    try:
        return StatisticsResponse(success=True, message="Oracle sampled", result=oracle_statistics(request))

    except NumericalError as e:
        logger.error(f"Oracle sampling failed numerically: {str(e)}", exc_info=True)
        raise HTTPException(status_code=422, detail=str(e))
    except Exception as e:
        logger.error(f"Oracle sampling failed: {str(e)}", exc_info=True)
        raise HTTPException(status_code=400, detail=str(e))
