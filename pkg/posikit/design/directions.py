"""
PoSI directions: unit vectors l*_{j.M} = X~_{j.M} / |X~_{j.M}| for pairs j in M of a universe.

Directions are streamed by a depth-first traversal over subsets S with increasing indices.
The node S keeps the residuals of all columns after projecting out span(X~_S),
so each child costs one orthogonalization. The node emits the residual of every
column j outside S such that S + {j} belongs to the universe,
which realizes each pair (j, M) exactly once as (S = M - {j}, add j)
"""
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from posikit.consts import (DEFAULT_DEDUP_TOLERANCE, DIRECTION_BUFFER_SIZE)
from posikit.design.canonical import CanonicalDesign
from posikit.design.matrix import numerical_rank
from posikit.design.models import ModelId
from posikit.design.universe import ModelUniverse
from posikit.errors import DataError, InfeasibleError
from posikit.messages import MessageLog
from posikit.utils import logger

MODELS_PER_PART = 64
"""
Finite universes are split into parts of this many models
"""


@dataclass(frozen=True)
class Direction:
    """
    One PoSI direction with its provenance
    """
    vector: np.ndarray
    predictor: int
    model: ModelId | None
    """
    None for directions built without provenance
    """
    raw_norm: float
    """
    |X~_{j.M}|
    """


@dataclass
class DirectionBlock:
    """
    Several directions stored row-wise
    """
    vectors: np.ndarray
    """
    k x d matrix of unit rows
    """
    predictors: np.ndarray
    masks: list[int]
    raw_norms: np.ndarray

    @classmethod
    def empty(cls, d: int) -> "DirectionBlock":
        return cls(np.zeros((0, d)), np.zeros(0, dtype=int), [], np.zeros(0))

    @classmethod
    def concat(cls, blocks: list["DirectionBlock"], d: int) -> "DirectionBlock":
        if not blocks:
            return cls.empty(d)
        return cls(np.vstack([b.vectors for b in blocks]),
                   np.concatenate([b.predictors for b in blocks]),
                   [m for b in blocks for m in b.masks],
                   np.concatenate([b.raw_norms for b in blocks]))

    def __len__(self) -> int:
        return self.vectors.shape[0]

    def __getitem__(self, i: int) -> Direction:
        model = ModelId(self.masks[i]) if self.masks[i] else None
        return Direction(self.vectors[i], int(self.predictors[i]), model,
                         float(self.raw_norms[i]))

    def take(self, index: np.ndarray | list[int]) -> "DirectionBlock":
        index = np.asarray(index, dtype=int)
        return DirectionBlock(self.vectors[index], self.predictors[index],
                              [self.masks[i] for i in index],
                              self.raw_norms[index])


@dataclass(frozen=True)
class Part:
    """
    Independent piece of the stream. Subset parts traverse the subtree of subsets
    whose smallest index is `first` (first=0 is the root node alone).
    Model parts cover a slice of a finite universe
    """
    first: int = 0
    models: tuple[ModelId, ...] | None = None


def adjusted_predictor(design: CanonicalDesign, model: ModelId,
                       j: int) -> tuple[np.ndarray, float]:
    """
    Residual of X~_j regressed on the other columns of the model

    Args:
        design (CanonicalDesign): design
        model (ModelId): model, must be of full rank
        j (int): 1-based predictor index, must be in the model

    Returns:
        tuple[np.ndarray, float]: X~_{j.M} and its norm
    """
    if j not in model:
        raise DataError(f'predictor {j} is not in model {model}')
    if model.last > design.p:
        raise DataError(f'model {model} refers to predictors above p={design.p}')
    block = design.values[:, [k - 1 for k in model]]
    if model.size > design.d or numerical_rank(
            block, design.rank_tolerance) < model.size:
        raise DataError(f'model {model} is rank-deficient')
    column = design.column(j)
    others = [k - 1 for k in model if k != j]
    if others:
        basis = design.values[:, others]
        coef, *_ = np.linalg.lstsq(basis, column, rcond=None)
        residual = column - basis @ coef
    else:
        residual = column.copy()
    norm = float(np.linalg.norm(residual))
    if norm < design.rank_tolerance * design.column_norms[j - 1] or norm == 0:
        raise DataError(
            f'adjusted predictor {j} in model {model} is degenerate (norm {norm:.3g})'
        )
    return residual, norm


def vif(design: CanonicalDesign, model: ModelId, j: int) -> float:
    """
    Variance inflation factor |X~_j|^2 / |X~_{j.M}|^2.
    Centering the columns is the caller's responsibility

    Args:
        design (CanonicalDesign): design
        model (ModelId): model
        j (int): predictor in the model

    Returns:
        float: VIF, at least 1
    """
    _, norm = adjusted_predictor(design, model, j)
    return float(design.column_norms[j - 1]**2 / norm**2)


def sign_class_keys(vectors: np.ndarray,
                    tolerance: float = DEFAULT_DEDUP_TOLERANCE) -> list[bytes]:
    """
    Hash keys of vectors up to sign: the first coordinate that is clearly nonzero
    is made positive, then coordinates are quantized with step `tolerance`

    Args:
        vectors (np.ndarray): k x d matrix of unit rows
        tolerance (float, optional): quantization step

    Returns:
        list[bytes]: keys, equal for vectors of one sign class
    """
    vectors = np.atleast_2d(vectors)
    if vectors.shape[0] == 0:
        return []
    threshold = np.sqrt(tolerance)
    significant = np.abs(vectors) > threshold
    first = np.argmax(significant, axis=1)
    signs = np.sign(vectors[np.arange(vectors.shape[0]), first])
    signs[signs == 0] = 1.0
    quantized = np.rint(vectors * signs[:, None] / tolerance).astype(np.int64)
    return [row.tobytes() for row in quantized]


def dedup_up_to_sign(block: DirectionBlock,
                     tolerance: float = DEFAULT_DEDUP_TOLERANCE
                     ) -> DirectionBlock:
    """
    Keeps the first direction of each sign class
    """
    seen = set()
    keep = []
    for i, key in enumerate(sign_class_keys(block.vectors, tolerance)):
        if key not in seen:
            seen.add(key)
            keep.append(i)
    return block.take(keep)


class DirectionSet:
    """
    The set L(X, M) of PoSI directions of a universe.
    Either backed by a stream over the design, or by explicit vectors.
    Re-iterable: every call of iter_blocks starts over
    """

    def __init__(self,
                 design: CanonicalDesign | None = None,
                 universe: ModelUniverse | None = None,
                 dedup: bool = False,
                 dedup_tolerance: float = DEFAULT_DEDUP_TOLERANCE,
                 predictor: int | None = None,
                 block: DirectionBlock | None = None,
                 messages: MessageLog | None = None):
        """
        Constructor

        Args:
            design (CanonicalDesign | None): design to stream from
            universe (ModelUniverse | None): universe, all models if not set
            dedup (bool, optional): if set, directions equal up to sign are kept once
            dedup_tolerance (float, optional): tolerance of sign classes
            predictor (int | None, optional): if set, only the directions of this predictor are emitted
            block (DirectionBlock | None): explicit directions, used instead of a design
            messages (MessageLog | None): log for degenerate pairs
        """
        assert (design is None) != (block is None), 'need a design or a block'
        self.design = design
        self.universe = universe or ModelUniverse()
        self.dedup = dedup
        self.dedup_tolerance = dedup_tolerance
        self.predictor = predictor
        self.messages = messages if messages is not None else MessageLog()
        self._materialized = None
        self._count = None
        self._emitted = None
        if block is not None:
            self._materialized = dedup_up_to_sign(
                block, dedup_tolerance) if dedup else block
            self._emitted = len(block)
            self._count = len(self._materialized)
        elif predictor is not None and not 1 <= predictor <= design.p:
            raise DataError(f'predictor {predictor} is out of range 1..{design.p}')

    @classmethod
    def from_vectors(cls,
                     vectors: np.ndarray,
                     dedup: bool = False,
                     normalize: bool = True) -> "DirectionSet":
        """
        Direction set of arbitrary vectors, without provenance

        Args:
            vectors (np.ndarray): k x d matrix
            dedup (bool, optional): if set, removes duplicates up to sign
            normalize (bool, optional): if set, rows are scaled to unit length

        Returns:
            DirectionSet: materialized set
        """
        vectors = np.atleast_2d(np.asarray(vectors, dtype=float))
        norms = np.linalg.norm(vectors, axis=1)
        if np.any(norms == 0):
            raise DataError('zero direction')
        if normalize:
            vectors = vectors / norms[:, None]
        k = vectors.shape[0]
        block = DirectionBlock(vectors, np.zeros(k, dtype=int), [0] * k, norms)
        return cls(block=block, dedup=dedup)

    @property
    def d(self) -> int:
        if self.design is not None:
            return self.design.d
        return self._materialized.vectors.shape[1]

    @property
    def is_materialized(self) -> bool:
        return self._materialized is not None

    def count_bound(self) -> int:
        """
        Upper bound on the number of directions, known before streaming
        """
        if self._materialized is not None:
            return len(self._materialized)
        return self.universe.pair_count_bound(self.design.p, self.predictor)

    def parts(self) -> list[Part]:
        """
        Independent parts of the stream. Their union in order is the whole stream
        """
        if self._materialized is not None or self.dedup:
            return [Part()]
        models = self.universe.finite_models(self.design.p)
        if models is not None:
            return [
                Part(models=tuple(models[i:i + MODELS_PER_PART]))
                for i in range(0, len(models), MODELS_PER_PART)
            ] or [Part(models=())]
        return [Part(first) for first in range(self.design.p + 1)]

    def iter_blocks(self, part: Part | None = None) -> Iterator[DirectionBlock]:
        """
        Streams directions in blocks of about DIRECTION_BUFFER_SIZE rows

        Args:
            part (Part | None, optional): part to stream, the whole set if not set

        Returns:
            Iterator[DirectionBlock]: blocks
        """
        if self._materialized is not None or self.dedup:
            block = self.materialize()
            for i in range(0, len(block), DIRECTION_BUFFER_SIZE):
                yield block.take(np.arange(i, min(i + DIRECTION_BUFFER_SIZE, len(block))))
            return
        parts = [part] if part is not None else self.parts()
        for part in parts:
            if part.models is not None:
                yield from self._buffered(self._iter_models(part.models))
            else:
                yield from self._buffered(self._iter_subsets(part.first))

    def __iter__(self) -> Iterator[Direction]:
        for block in self.iter_blocks():
            for i in range(len(block)):
                yield block[i]

    def materialize(self) -> DirectionBlock:
        """
        All directions in one block, deduplicated if requested
        """
        if self._materialized is None:
            blocks = []
            for part in self.parts_raw():
                if part.models is not None:
                    blocks.extend(self._iter_models(part.models))
                else:
                    blocks.extend(self._iter_subsets(part.first))
            block = DirectionBlock.concat(blocks, self.d)
            self._emitted = len(block)
            if self.dedup:
                block = dedup_up_to_sign(block, self.dedup_tolerance)
            self._materialized = block
            self._count = len(block)
            logger.debug(
                f'materialized {self._count} directions of {self._emitted} emitted'
            )
        return self._materialized

    def parts_raw(self) -> list[Part]:
        """
        Parts of the underlying stream, ignoring dedup
        """
        models = self.universe.finite_models(self.design.p)
        if models is not None:
            return [Part(models=tuple(models))]
        return [Part(first) for first in range(self.design.p + 1)]

    @property
    def count(self) -> int:
        """
        Number of directions in the set (after dedup if requested)
        """
        if self._count is None:
            if self.dedup:
                self.materialize()
            else:
                self._count = sum(len(b) for b in self.iter_blocks())
                self._emitted = self._count
        return self._count

    @property
    def emitted_count(self) -> int:
        """
        Number of directions before dedup
        """
        if self._emitted is None:
            self.count
        return self._emitted

    def check_nonempty(self):
        if self.count == 0:
            raise InfeasibleError(
                f'universe "{self.universe}" gives no directions')

    def _buffered(self, blocks: Iterator[DirectionBlock]
                  ) -> Iterator[DirectionBlock]:
        pending = []
        size = 0
        for block in blocks:
            if len(block) == 0:
                continue
            pending.append(block)
            size += len(block)
            if size >= DIRECTION_BUFFER_SIZE:
                yield DirectionBlock.concat(pending, self.d)
                pending, size = [], 0
        if pending:
            yield DirectionBlock.concat(pending, self.d)

    def _emit(self, subset: int, residual: np.ndarray,
              candidates: int) -> DirectionBlock | None:
        design = self.design
        if self.predictor is not None:
            candidates &= 1 << (self.predictor - 1)
        if not candidates:
            return None
        columns = []
        mask = candidates
        while mask:
            low = mask & -mask
            columns.append(low.bit_length() - 1)
            mask ^= low
        columns = np.array(columns)
        vectors = residual[:, columns]
        norms = np.linalg.norm(vectors, axis=0)
        full_norms = design.column_norms[columns]
        good = (norms >= design.rank_tolerance * full_norms) & (norms > 0)
        if not np.all(good):
            for c in columns[~good]:
                self.messages.add(
                    'degenerate adjusted predictor skipped',
                    details=f'predictor {c + 1}, model {ModelId(subset | 1 << int(c))}')
        if self.universe.screens_pairs:
            with np.errstate(divide='ignore'):
                vifs = full_norms**2 / np.where(good, norms, 1.0)**2
            good &= np.array([self.universe.accepts_pair(v) for v in vifs],
                             dtype=bool)
        if not np.any(good):
            return None
        columns, vectors, norms = columns[good], vectors[:, good], norms[good]
        return DirectionBlock((vectors / norms).T.copy(), columns + 1,
                              [subset | 1 << int(c) for c in columns], norms)

    def _iter_subsets(self, first: int) -> Iterator[DirectionBlock]:
        design = self.design
        p = design.p
        tol = design.rank_tolerance
        full_norms = design.column_norms
        universe = self.universe
        slack = 1

        def child(residual, k):
            column = residual[:, k - 1]
            norm = np.linalg.norm(column)
            if norm < tol * full_norms[k - 1] or norm == 0:
                return None
            q = column / norm
            return residual - np.outer(q, q @ residual)

        if first == 0:
            block = self._emit(0, design.values, universe.candidates(0, p))
            if block is not None:
                yield block
            return
        root = 1 << (first - 1)
        if universe.prune(root, p, slack):
            return
        if self.predictor == first:
            return
        residual = child(design.values, first)
        if residual is None:
            return
        stack = [(root, residual)]
        while stack:
            subset, residual = stack.pop()
            block = self._emit(subset, residual, universe.candidates(subset, p))
            if block is not None:
                yield block
            children = []
            for k in range(subset.bit_length() + 1, p + 1):
                if self.predictor == k:
                    continue
                grown = subset | 1 << (k - 1)
                if universe.prune(grown, p, slack):
                    continue
                grown_residual = child(residual, k)
                if grown_residual is not None:
                    children.append((grown, grown_residual))
            stack.extend(reversed(children))

    def _iter_models(self,
                     models: tuple[ModelId, ...]) -> Iterator[DirectionBlock]:
        design = self.design
        for model in models:
            members = [j for j in model]
            if self.predictor is not None:
                if self.predictor not in model:
                    continue
                members = [self.predictor]
            vectors, predictors, norms = [], [], []
            for j in members:
                try:
                    residual, norm = adjusted_predictor(design, model, j)
                except DataError as e:
                    self.messages.add('degenerate adjusted predictor skipped',
                                      details=str(e))
                    continue
                if self.universe.screens_pairs and not self.universe.accepts_pair(
                        design.column_norms[j - 1]**2 / norm**2):
                    continue
                vectors.append(residual / norm)
                predictors.append(j)
                norms.append(norm)
            if vectors:
                yield DirectionBlock(np.array(vectors), np.array(predictors),
                                     [model.mask] * len(vectors),
                                     np.array(norms))


def direction_stream(design: CanonicalDesign,
                     universe: ModelUniverse | None = None,
                     dedup: bool = False,
                     dedup_tolerance: float = DEFAULT_DEDUP_TOLERANCE,
                     predictor: int | None = None) -> DirectionSet:
    """
    Builds the direction set L(X, M) of a universe

    Args:
        design (CanonicalDesign): design in canonical coordinates
        universe (ModelUniverse | None, optional): universe, all models if not set
        dedup (bool, optional): if set, directions equal up to sign are kept once
        dedup_tolerance (float, optional): tolerance for sign classes
        predictor (int | None, optional): if set, only l*_{j.M} with j = predictor

    Returns:
        DirectionSet: re-iterable set
    """
    return DirectionSet(design,
                        universe,
                        dedup=dedup,
                        dedup_tolerance=dedup_tolerance,
                        predictor=predictor)


def gram_schmidt_chain(design: CanonicalDesign) -> np.ndarray:
    """
    Directions l*_{k.{1..k}} for k = 1..min(d, p); for a full-rank prefix they are orthonormal

    Args:
        design (CanonicalDesign): design

    Returns:
        np.ndarray: k x d matrix of directions
    """
    chain = []
    for k in range(1, min(design.d, design.p) + 1):
        model = ModelId((1 << k) - 1)
        try:
            residual, norm = adjusted_predictor(design, model, k)
        except DataError:
            break
        chain.append(residual / norm)
    return np.array(chain)
