from shotladder.features.lowlevel import (
    BDCT_NAMES,
    LLF1_NAMES,
    LLF2_NAMES,
    DctTextureStats,
    FeatureVector,
    bitrate_dct_texture,
    chroma_intensity,
    colorfulness,
    cti,
    dct_texture,
    extract_llf,
    glcm_features,
    llf2_from_llf1,
    si,
    temporal_coherence,
    ti,
)
from shotladder.features.pooling import pool
from shotladder.features.vif import (
    VIFF_NAMES,
    GsmModel,
    SubbandPyramid,
    VifConfig,
    gsm_fit,
    subband_information,
    vif_features,
    wavelet_subbands,
)
from shotladder.features.yuv import FEATURE_SIZE, YUVVideo, read_yuv, write_yuv

__all__ = [
    "BDCT_NAMES", "LLF1_NAMES", "LLF2_NAMES", "DctTextureStats", "FeatureVector", "bitrate_dct_texture",
    "chroma_intensity", "colorfulness", "cti", "dct_texture", "extract_llf", "glcm_features",
    "llf2_from_llf1", "si", "temporal_coherence", "ti", "pool", "VIFF_NAMES", "GsmModel", "SubbandPyramid",
    "VifConfig", "gsm_fit", "subband_information", "vif_features", "wavelet_subbands", "FEATURE_SIZE",
    "YUVVideo", "read_yuv", "write_yuv",
]
