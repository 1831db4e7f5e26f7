"""Python bindings for the lipkit core."""

import json

from ._core import (
    DEFAULT_MAR_THRESHOLD,
    LipkitError,
    blend_latents,
    bootstrap_elo,
    build_mask,
    downsample_to_latent,
    edm_coefficients,
    elo_ratings,
    guided_combine,
    karras_sigmas,
    lipleak,
    lipleak_sweep,
    mouth_aspect_ratio,
    refine_with_occlusion,
    simulate,
    variance_of_laplacian,
    win_rate_matrix,
)
from ._core import curate_json as _curate_json


def curate(manifest, **kwargs):
    """Curate a manifest given as a dict or JSON string; returns the report dict."""
    text = manifest if isinstance(manifest, str) else json.dumps(manifest)
    return json.loads(_curate_json(text, **kwargs))


__all__ = [
    "DEFAULT_MAR_THRESHOLD",
    "LipkitError",
    "blend_latents",
    "bootstrap_elo",
    "build_mask",
    "curate",
    "downsample_to_latent",
    "edm_coefficients",
    "elo_ratings",
    "guided_combine",
    "karras_sigmas",
    "lipleak",
    "lipleak_sweep",
    "mouth_aspect_ratio",
    "refine_with_occlusion",
    "simulate",
    "variance_of_laplacian",
    "win_rate_matrix",
]
