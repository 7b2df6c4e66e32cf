from twint.models.extended import (
    GeneralizedTwinT,
    MultivariateGeneralizedTwinT,
    MultivariateTwinT,
    gen_mv_log_pdf,
)
from twint.models.skew import AzzaliniTwinT, JonesTwinT, TwoPieceTwinT, skew_generic_sample, skew_weight
from twint.models.twin_t import LocationScaleModel, TwinT

__all__ = [
    "TwinT",
    "LocationScaleModel",
    "TwoPieceTwinT",
    "JonesTwinT",
    "AzzaliniTwinT",
    "GeneralizedTwinT",
    "MultivariateTwinT",
    "MultivariateGeneralizedTwinT",
    "gen_mv_log_pdf",
    "skew_generic_sample",
    "skew_weight",
]
