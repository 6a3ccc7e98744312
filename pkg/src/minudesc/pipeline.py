"""Image-to-template glue: enhance, extract, sample jets, project."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .gabor import DEFAULT_KMAX, DEFAULT_RADIUS, DEFAULT_SIGMA, build_bank, normalize_jets, raw_jets
from .imaging import EnhanceParams, GrayImage, enhance
from .matching import Template
from .minutiae import ExtractParams, extract_minutiae
from .subspace import SubspaceTransform, project


@dataclass
class Pipeline:
    enhance_params: EnhanceParams = field(default_factory=EnhanceParams)  # at 500 dpi
    extract_params: ExtractParams = field(default_factory=ExtractParams)
    gabor_sigma: float = DEFAULT_SIGMA
    gabor_kmax: float = DEFAULT_KMAX
    radius: float = DEFAULT_RADIUS
    transform: SubspaceTransform | None = None

    def __post_init__(self):
        self.bank = build_bank(self.gabor_sigma, self.gabor_kmax)

    def _enhance_params(self, img: GrayImage) -> EnhanceParams:
        return self.enhance_params.scaled(img.dpi)

    def minutiae_and_jets(self, img: GrayImage):
        """Extracted minutiae and their unit-norm raw jets."""
        ep = self._enhance_params(img)
        minutiae = extract_minutiae(img, self.extract_params, ep)
        # the enhanced raster is centred on 128; remove it so zero padding is neutral
        raster = enhance(img, ep) - 128.0
        jets = normalize_jets(raw_jets(raster, minutiae, self.bank, self.radius))
        return minutiae, jets.reshape(len(minutiae), -1)

    def template(self, img: GrayImage) -> Template:
        if self.transform is None:
            raise ValueError("pipeline has no subspace transform; train or load one first")
        minutiae, jets = self.minutiae_and_jets(img)
        desc = project(jets, self.transform) if len(minutiae) else np.zeros((0, self.transform.out_dim))
        return Template(tuple(minutiae), desc, img.width, img.height, img.dpi)
