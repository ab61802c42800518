"""Reference constants that anchor every spectral and classical comparison.

Each entry carries the value and where it comes from. Bump CONSTANTS_VERSION
whenever a value changes; it is written into every output file.
"""
from typing import Dict, NamedTuple

CONSTANTS_VERSION = "1"


class ReferenceConstant(NamedTuple):
    value: float
    provenance: str


REFERENCE_CONSTANTS: Dict[str, ReferenceConstant] = {
    "r_2dp": ReferenceConstant(2.0 / 3.0, "2D Poisson average of the complex ratio modulus"),
    "neg_cos_2dp": ReferenceConstant(0.0, "2D Poisson average of -cos(theta)"),
    "r_ginue": ReferenceConstant(0.74, "GinUE average of the complex ratio modulus (two decimals)"),
    "neg_cos_ginue": ReferenceConstant(0.24, "GinUE average of -cos(theta) (two decimals)"),
    "r_poisson": ReferenceConstant(0.386, "Poisson average of the real spacing ratio"),
    "r_coe": ReferenceConstant(0.536, "COE average of the real spacing ratio"),
    "s_bar_ginue": ReferenceConstant(1.1429, "first moment of the GinUE nearest-neighbour spacing density"),
}

R_2DP = REFERENCE_CONSTANTS["r_2dp"].value
NEG_COS_2DP = REFERENCE_CONSTANTS["neg_cos_2dp"].value
R_GINUE = REFERENCE_CONSTANTS["r_ginue"].value
NEG_COS_GINUE = REFERENCE_CONSTANTS["neg_cos_ginue"].value
R_POISSON = REFERENCE_CONSTANTS["r_poisson"].value
R_COE = REFERENCE_CONSTANTS["r_coe"].value
S_BAR_GINUE = REFERENCE_CONSTANTS["s_bar_ginue"].value

# Dissipation strengths above this are outside the validated precision regime.
GAMMA_VALIDATED_MAX = 0.4

# Machine-precision threshold for discarding collapsed eigenvalues.
DEFAULT_EPSILON = 1e-16

# Below this many retained eigenvalues the normalized metrics are not reported.
MIN_EIGS_FOR_NORMALIZED = 50


def constants_table() -> Dict[str, Dict]:
    """Constants as plain dicts, for JSON summaries and the HTTP root."""
    return {
        "version": CONSTANTS_VERSION,
        "constants": {name: c._asdict() for name, c in REFERENCE_CONSTANTS.items()},
    }
