"""
Model selection procedures.
A selector is a pure function of (X~, y~, sigma_hat): frozen dataclasses without state,
so the simultaneous guarantee of PoSI constants applies to them
"""
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from posikit.design.canonical import CanonicalDesign
from posikit.design.models import ModelId
from posikit.design.universe import ModelUniverse, enumerate_models
from posikit.errors import InfeasibleError, UsageError
from posikit.inference import fit_submodel, spar1_select, spar_select, t_ratio
from posikit import minihydra


@dataclass(frozen=True)
class Selector:
    """
    Abstract selector of a model from a universe
    """
    universe: ModelUniverse = field(default_factory=ModelUniverse)

    def select(self, design: CanonicalDesign, y: np.ndarray,
               sigma_hat: float) -> ModelId:
        """
        Args:
            design (CanonicalDesign): design
            y (np.ndarray): canonical response
            sigma_hat (float): error estimate

        Returns:
            ModelId: selected model of the universe
        """
        raise NotImplementedError()


@dataclass(frozen=True)
class SparSelector(Selector):
    """
    The model containing the largest |t_{j.M}| over the universe
    """

    def select(self, design, y, sigma_hat):
        return spar_select(design, y, sigma_hat, self.universe).model

    def __str__(self):
        return 'spar'


@dataclass(frozen=True)
class Spar1Selector(Selector):
    """
    The model with the largest |t_{j.M}| of one predictor
    """
    predictor: int = 1

    def select(self, design, y, sigma_hat):
        return spar1_select(design, y, sigma_hat, self.universe,
                            self.predictor).model

    def __str__(self):
        return f'spar1({self.predictor})'


@dataclass(frozen=True)
class ForwardStepwise(Selector):
    """
    Adds one predictor at a time: the one whose |t| in the enlarged model is largest.
    The last step only considers models of the universe
    """
    size: int = 1

    def select(self, design, y, sigma_hat):
        if self.size < 1:
            raise UsageError(f'model size must be positive, got {self.size}')
        p = design.p
        current = 0
        for step in range(1, self.size + 1):
            best = None
            for j in range(1, p + 1):
                if current >> (j - 1) & 1:
                    continue
                model = ModelId(current | 1 << (j - 1))
                if step == self.size and not self.universe.accepts(model, p):
                    continue
                try:
                    fit = fit_submodel(design, y, model, sigma_hat)
                except ValueError:
                    continue
                key = (-abs(t_ratio(fit, j)), j)
                if best is None or key < best[0]:
                    best = (key, model)
            if best is None:
                raise InfeasibleError(
                    f'forward stepwise can not reach size {self.size} in universe "{self.universe}"'
                )
            current = best[1].mask
        return ModelId(current)

    def __str__(self):
        return f'forward({self.size})'


@dataclass(frozen=True)
class BestSubset(Selector):
    """
    The model of a fixed size with the largest R^2
    """
    size: int = 1

    def select(self, design, y, sigma_hat):
        best = None
        for model in enumerate_models(design, self.universe):
            if model.size != self.size:
                continue
            fit = fit_submodel(design, y, model, sigma_hat)
            block = design.values[:, [j - 1 for j in model]]
            explained = float(np.sum((block @ fit.estimates)**2))
            key = (-explained, model.mask)
            if best is None or key < best[0]:
                best = (key, model)
        if best is None:
            raise InfeasibleError(
                f'universe "{self.universe}" has no full-rank models of size {self.size}')
        return best[1]

    def __str__(self):
        return f'best_subset({self.size})'


def make_selector(name: str,
                  universe: ModelUniverse,
                  predictor: int | None = None,
                  size: int | None = None,
                  config: dict[str, Any] | None = None) -> Selector:
    """
    Creates a selector by name or from a mapping with a '_target_' classpath

    Args:
        name (str): spar, spar1, forward, best_subset
        universe (ModelUniverse): universe to choose from
        predictor (int | None, optional): predictor of spar1
        size (int | None, optional): model size of forward and best_subset
        config (dict[str, Any] | None, optional): pluggable selector config,
            used instead of the name if set

    Returns:
        Selector: selector
    """
    if config is not None:
        return minihydra.init(config, required_type=Selector, universe=universe)
    if name == 'spar':
        return SparSelector(universe)
    if name == 'spar1':
        if predictor is None:
            raise UsageError('spar1 selector requires a predictor')
        return Spar1Selector(universe, predictor)
    if name == 'forward':
        if size is None:
            raise UsageError('forward selector requires a size')
        return ForwardStepwise(universe, size)
    if name == 'best_subset':
        if size is None:
            raise UsageError('best_subset selector requires a size')
        return BestSubset(universe, size)
    raise UsageError(f'unknown selector {name}')
