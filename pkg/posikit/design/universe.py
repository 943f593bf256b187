"""
Model universes: declarative families of submodels built as an intersection of constraints
"""
from math import comb
from typing import Iterator

import numpy as np
from lark import Lark
from lark.exceptions import LarkError

from posikit.design.canonical import CanonicalDesign
from posikit.design.grammar import grammar, UniverseTransformer
from posikit.design.models import ModelId, full_model
from posikit.errors import DataError, InfeasibleError, UsageError
from posikit.utils import logger


def _bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length()
        mask ^= low


class Constraint:
    """
    Abstract class to represent a constraint on submodels
    """

    finite = False
    """
    If True, the constraint lists its models explicitly (see models)
    """

    def accepts(self, model: ModelId, p: int) -> bool:
        """
        Args:
            model (ModelId): model to check
            p (int): number of predictors

        Returns:
            bool: True if the model satisfies the constraint
        """
        raise NotImplementedError()

    def candidates(self, subset: int, p: int) -> int:
        """
        Mask of predictors j not in the subset such that subset + {j} is accepted.
        The default implementation checks each j

        Args:
            subset (int): bitmask of the subset, may be 0
            p (int): number of predictors

        Returns:
            int: bitmask of acceptable predictors
        """
        result = 0
        free = ((1 << p) - 1) & ~subset
        for j in _bits(free):
            if self.accepts(ModelId(subset | 1 << (j - 1)), p):
                result |= 1 << (j - 1)
        return result

    def prune(self, subset: int, p: int, slack: int) -> bool:
        """
        Tells if no model accepted by the constraint can be built
        from the subset extended by indices above its last one plus `slack` arbitrary indices

        Args:
            subset (int): bitmask of the subset
            p (int): number of predictors
            slack (int): 1 while streaming directions (one predictor j is added at the node),
                0 while enumerating models

        Returns:
            bool: True if the subtree can be skipped
        """
        return False

    def models(self, p: int) -> list[ModelId]:
        """
        Explicit list of models, only for finite constraints
        """
        raise NotImplementedError()

    def size_range(self, p: int) -> tuple[int, int]:
        """
        Returns:
            tuple[int, int]: smallest and largest possible model size
        """
        return 1, p

    def accepts_pair(self, vif: float) -> bool:
        """
        Pair-level screening of (j, M) by its variance inflation factor
        """
        return True


class AllModels(Constraint):
    """
    A constraint that accepts everything
    """

    def accepts(self, model, p):
        return True

    def candidates(self, subset, p):
        return ((1 << p) - 1) & ~subset

    def __str__(self):
        return 'all'


class MaxSize(Constraint):
    """
    Models with at most m predictors
    """

    def __init__(self, m: int):
        if m < 1:
            raise UsageError(f'maximal model size must be positive: {m}')
        self.m = m

    def accepts(self, model, p):
        return model.size <= self.m

    def candidates(self, subset, p):
        if subset.bit_count() + 1 > self.m:
            return 0
        return ((1 << p) - 1) & ~subset

    def prune(self, subset, p, slack):
        return subset.bit_count() + slack > self.m

    def size_range(self, p):
        return 1, min(p, self.m)

    def __str__(self):
        return f'size<={self.m}'


class MinSize(Constraint):
    """
    Models that drop fewer than m of the p predictors: |M| > p - m
    """

    def __init__(self, m: int):
        if m < 1:
            raise UsageError(f'number of dropped predictors must be positive: {m}')
        self.m = m

    def accepts(self, model, p):
        return model.size > p - self.m

    def candidates(self, subset, p):
        if subset.bit_count() + 1 <= p - self.m:
            return 0
        return ((1 << p) - 1) & ~subset

    def prune(self, subset, p, slack):
        reachable = subset.bit_count() + (p - subset.bit_length()) + slack
        return reachable <= p - self.m

    def size_range(self, p):
        return max(1, p - self.m + 1), p

    def __str__(self):
        return f'size>p-{self.m}'


class Forced(Constraint):
    """
    Models that contain all the forced predictors
    """

    def __init__(self, forced: ModelId):
        self.forced = forced

    def accepts(self, model, p):
        return self.forced.issubset(model)

    def candidates(self, subset, p):
        missing = self.forced.mask & ~subset
        if missing == 0:
            return ((1 << p) - 1) & ~subset
        if missing & (missing - 1) == 0:
            return missing
        return 0

    def prune(self, subset, p, slack):
        below = (1 << subset.bit_length()) - 1
        missing = self.forced.mask & ~subset & below
        return missing.bit_count() > slack

    def size_range(self, p):
        return self.forced.size, p

    def __str__(self):
        return f'forced={self.forced}'


class Nested(Constraint):
    """
    Nested models {1}, {1, 2}, ..., {1..p}
    """
    finite = True

    def accepts(self, model, p):
        return model.mask & (model.mask + 1) == 0

    def models(self, p):
        return [full_model(k) for k in range(1, p + 1)]

    def __str__(self):
        return 'nested'


class Explicit(Constraint):
    """
    Explicit list of models, one per line of a file
    """
    finite = True

    def __init__(self, models: list[ModelId], path: str | None = None):
        if not models:
            raise DataError('explicit universe has no models')
        self.model_list = list(dict.fromkeys(models))
        self.path = path
        self._masks = {m.mask for m in self.model_list}

    @classmethod
    def from_file(cls, path: str) -> "Explicit":
        """
        Reads models, one per line as comma-separated 1-based indices.
        Empty lines and lines starting with '#' are skipped
        """
        try:
            with open(path) as inp:
                lines = inp.read().splitlines()
        except OSError as e:
            raise DataError(f'can not read universe file {path}: {e}')
        models = []
        for line in lines:
            line = line.strip()
            if not line or line.startswith('#'):
                continue
            models.append(ModelId.parse(line))
        return cls(models, path)

    def accepts(self, model, p):
        return model.mask in self._masks

    def models(self, p):
        for m in self.model_list:
            if m.last > p:
                raise DataError(
                    f'model {m} of the universe file refers to predictor {m.last} > p={p}'
                )
        return list(self.model_list)

    def __str__(self):
        if self.path is None:
            return "explicit[" + ";".join(str(m) for m in self.model_list) + "]"
        return f'file={self.path}'


class VifScreen(Constraint):
    """
    Drops the pairs (j, M) whose variance inflation factor exceeds c.
    Acts on directions, not on models
    """

    def __init__(self, c: float):
        if c < 1:
            raise UsageError(f'vif threshold must be at least 1, got {c}')
        self.c = float(c)

    def accepts(self, model, p):
        return True

    def candidates(self, subset, p):
        return ((1 << p) - 1) & ~subset

    def accepts_pair(self, vif):
        return vif <= self.c

    def __str__(self):
        return f'vif<={np.format_float_positional(self.c, trim="-")}'


class ModelUniverse:
    """
    Intersection of constraints. The empty intersection is the universe of all models
    """

    def __init__(self, constraints: list[Constraint] | None = None):
        self.constraints = [
            c for c in (constraints or []) if not isinstance(c, AllModels)
        ]

    @classmethod
    def parse(cls, spec: str) -> "ModelUniverse":
        """
        Parses a universe spec: all, size<=m, size>p-m, forced=1,2, nested, file=PATH, vif<=c,
        combined with '&'

        Args:
            spec (str): universe spec

        Returns:
            ModelUniverse: universe
        """
        parser = Lark(grammar, start="start", parser="lalr")
        try:
            items = UniverseTransformer().transform(parser.parse(spec))
        except LarkError as e:
            raise UsageError(f'bad universe spec "{spec}": {e}')
        constraints = []
        for kind, arg in items:
            if kind == 'all':
                constraints.append(AllModels())
            elif kind == 'max_size':
                constraints.append(MaxSize(arg))
            elif kind == 'min_size':
                constraints.append(MinSize(arg))
            elif kind == 'forced':
                constraints.append(Forced(ModelId.from_members(arg)))
            elif kind == 'nested':
                constraints.append(Nested())
            elif kind == 'file':
                constraints.append(Explicit.from_file(arg))
            elif kind == 'vif':
                constraints.append(VifScreen(arg))
            else:
                raise UsageError(f'unknown universe constraint {kind}')
        return cls(constraints)

    def __str__(self):
        if not self.constraints:
            return 'all'
        return ' & '.join(str(c) for c in self.constraints)

    @property
    def is_unrestricted(self) -> bool:
        """
        True if the universe is the set of all full-rank models
        """
        return not self.constraints

    @property
    def is_finite(self) -> bool:
        """
        True if some constraint lists its models explicitly
        """
        return any(c.finite for c in self.constraints)

    @property
    def screens_pairs(self) -> bool:
        return any(isinstance(c, VifScreen) for c in self.constraints)

    def restricted_to(self, j: int) -> "ModelUniverse":
        """
        Universe of models that contain predictor j
        """
        return ModelUniverse(self.constraints +
                             [Forced(ModelId.from_members([j]))])

    def accepts(self, model: ModelId, p: int) -> bool:
        if model.last > p:
            return False
        return all(c.accepts(model, p) for c in self.constraints)

    def accepts_pair(self, vif: float) -> bool:
        return all(c.accepts_pair(vif) for c in self.constraints)

    def candidates(self, subset: int, p: int) -> int:
        result = ((1 << p) - 1) & ~subset
        for c in self.constraints:
            if not result:
                break
            result &= c.candidates(subset, p)
        return result

    def prune(self, subset: int, p: int, slack: int) -> bool:
        return any(c.prune(subset, p, slack) for c in self.constraints)

    def finite_models(self, p: int) -> list[ModelId] | None:
        """
        Models of the finite constraints filtered by all the others,
        None if no constraint is finite
        """
        source = next((c for c in self.constraints if c.finite), None)
        if source is None:
            return None
        return [m for m in source.models(p) if self.accepts(m, p)]

    def pair_count_bound(self, p: int, predictor: int | None = None) -> int:
        """
        Upper bound for the number of pairs (j, M), ignoring ranks and screening

        Args:
            p (int): number of predictors
            predictor (int | None, optional): count only pairs of this predictor

        Returns:
            int: bound
        """
        models = self.finite_models(p)
        if models is not None:
            if predictor is not None:
                return sum(1 for m in models if predictor in m)
            return sum(m.size for m in models)
        forced = 0
        low, high = 1, p
        for c in self.constraints:
            if isinstance(c, Forced):
                forced |= c.forced.mask
            lo, hi = c.size_range(p)
            low, high = max(low, lo), min(high, hi)
        if predictor is not None:
            forced |= 1 << (predictor - 1)
        f = forced.bit_count()
        total = 0
        for m in range(max(low, f, 1), high + 1):
            count = comb(p - f, m - f)
            total += count if predictor is not None else m * count
        return total


def enumerate_models(design: CanonicalDesign,
                     universe: ModelUniverse) -> Iterator[ModelId]:
    """
    Emits every full-rank model of the universe exactly once.
    Rank-deficient candidates are skipped

    Args:
        design (CanonicalDesign): design in canonical coordinates
        universe (ModelUniverse): universe

    Returns:
        Iterator[ModelId]: models in depth-first order of increasing indices
    """
    p = design.p
    tol = design.rank_tolerance
    norms = design.column_norms
    emitted = 0
    union = 0
    finite = universe.finite_models(p)
    if finite is not None:
        for model in finite:
            if model.size > design.d:
                continue
            block = design.values[:, [j - 1 for j in model]]
            singular = np.linalg.svd(block, compute_uv=False)
            if singular[-1] < tol * singular[0] or singular[0] == 0:
                continue
            emitted += 1
            union |= model.mask
            yield model
    else:
        stack = [(0, design.values.copy())]
        while stack:
            subset, residual = stack.pop()
            children = []
            for k in range(subset.bit_length() + 1, p + 1):
                child = subset | 1 << (k - 1)
                if universe.prune(child, p, slack=0):
                    continue
                column = residual[:, k - 1]
                norm = np.linalg.norm(column)
                if norm < tol * norms[k - 1] or norm == 0:
                    continue
                q = column / norm
                children.append((child, residual - np.outer(q, q @ residual)))
            for child, child_residual in reversed(children):
                stack.append((child, child_residual))
            if subset and universe.accepts(ModelId(subset), p):
                emitted += 1
                union |= subset
                yield ModelId(subset)
    if emitted == 0:
        raise InfeasibleError(
            f'universe "{universe}" has no full-rank models')
    if union != (1 << p) - 1:
        missing = [j for j in range(1, p + 1) if not union >> (j - 1) & 1]
        logger.warning(
            f'predictors {missing} are in no model of the universe "{universe}"'
        )
    logger.debug(f'enumerated {emitted} models of universe "{universe}"')


def load_universe(spec: str | ModelUniverse | None) -> ModelUniverse:
    """
    Accepts a universe or its spec
    """
    if spec is None:
        return ModelUniverse()
    if isinstance(spec, ModelUniverse):
        return spec
    return ModelUniverse.parse(spec)
