"""Attribution pipeline: pattern streams x cached diagonals x fast matvec.

Per tree and per leaf, the engine (1) builds the leaf's background pattern
distribution (empirical counts or cover-ratio products), (2) pulls the cached
secondary diagonals for the leaf's unique-feature count, (3) multiplies each
diagonal by the distribution with the fast kernel, scaled by the leaf weight,
and (4) gathers each consumer's entry by its own pattern.  Trees add up.

Also here: definitional brute-force oracles (subset enumeration over the
model's active features) and a dense baseline that multiplies the full sparse
value matrices in O(3^k) per leaf, kept as an independent regression anchor.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
import math

import numpy as np
import scipy.sparse

from .cubes import (
    BANZHAF,
    INTERACTION,
    SHAPLEY,
    DiagonalCache,
    build_diagonal_cache,
    cache_nbytes,
    cube_banzhaf,
    cube_interaction,
    cube_shapley,
    map_patterns_to_cubes,
    pair_index,
)
from .errors import (
    BudgetExceededError,
    DepthCapError,
    EmptyBackgroundError,
    MissingCoverError,
    TooManyFeaturesError,
    ValidationError,
    ZeroCoverError,
)
from .fastmult import diagonal_matvec
from .model import EnsembleModel, Leaf, root_to_leaf_paths
from .patterns import (
    DEFAULT_FEATURE_CAP,
    _as_rows,
    background_distribution,
    iter_leaf_patterns,
    path_dependent_distribution,
)

BACKGROUND = "background"
PATH_DEPENDENT = "path-dependent"
MODES = (BACKGROUND, PATH_DEPENDENT)

BRUTE_FORCE_FEATURE_CAP = 14

# Test hook: when set, applied to every freshly built diagonal cache.  Lets the
# validation command prove it detects a corrupted cache.
_cache_test_hook = None


@dataclass
class ExplainRequest:
    model: EnsembleModel
    consumers: np.ndarray
    background: np.ndarray | None = None
    mode: str = BACKGROUND
    functional: str = SHAPLEY


@dataclass
class AttributionResult:
    """values is (n, f) for scalar functionals, (n, f, f) for interactions."""

    values: np.ndarray
    base_value: float


@dataclass
class WorkspaceStats:
    """Peak per-leaf working-set bytes, excluding the shared diagonal cache."""

    peak_bytes: int = 0

    def update(self, nbytes: int) -> None:
        if nbytes > self.peak_bytes:
            self.peak_bytes = nbytes


def _checked_rows(rows, n_features, what):
    X = _as_rows(rows)
    if X.shape[1] != n_features:
        raise ValidationError(
            f"{what} has {X.shape[1]} columns, model expects {n_features}"
        )
    return X


def _prepare(request: ExplainRequest):
    if request.mode not in MODES:
        raise ValueError(f"unknown mode {request.mode!r}")
    if request.functional not in (SHAPLEY, BANZHAF, INTERACTION):
        raise ValueError(f"unknown functional {request.functional!r}")
    model = request.model
    X = _checked_rows(request.consumers, model.n_features, "consumer dataset")
    B = None
    if request.mode == BACKGROUND:
        if request.background is None or len(request.background) == 0:
            raise EmptyBackgroundError("background mode needs at least one row")
        B = _checked_rows(request.background, model.n_features, "background dataset")
    return model, X, B


def _cover_expectation(node) -> float:
    if isinstance(node, Leaf):
        return node.weight
    for n in (node, node.left, node.right):
        if n.cover is None:
            raise MissingCoverError("path-dependent mode needs covers on every node")
    if node.cover <= 0 or node.left.cover <= 0 or node.right.cover <= 0:
        raise ZeroCoverError("zero cover encountered while averaging")
    return (
        node.left.cover / node.cover * _cover_expectation(node.left)
        + node.right.cover / node.cover * _cover_expectation(node.right)
    )


def _base_value(model: EnsembleModel, mode: str, B) -> float:
    if mode == BACKGROUND:
        return float(np.mean(model.predict(B)))
    return model.base_score + sum(_cover_expectation(t.root) for t in model.trees)


def explain(
    request: ExplainRequest,
    *,
    threads: int = 1,
    memory_budget_bytes: int | None = None,
    depth_cap: int = DEFAULT_FEATURE_CAP,
    cache: DiagonalCache | None = None,
    workspace_stats: WorkspaceStats | None = None,
) -> AttributionResult:
    """Exact attributions for every consumer row.

    Deterministic for a fixed model and datasets: leaves are processed in
    depth-first order and trees are reduced in model order, so repeated runs
    (any thread count) are bit-identical.
    """
    if threads < 1:
        raise ValueError("threads must be >= 1")
    model, X, B = _prepare(request)
    functional = request.functional
    F = model.n_features
    n = X.shape[0]

    k_max = max((t.max_unique_features for t in model.trees), default=0)
    if k_max > depth_cap:
        raise DepthCapError(f"model needs {k_max} unique features, cap is {depth_cap}")

    if memory_budget_bytes is not None and k_max >= 1:
        rows_per_leaf = k_max * (k_max - 1) // 2 if functional == INTERACTION else k_max
        projected = 8 * (1 << k_max) * max(rows_per_leaf, 1) * threads
        projected += cache_nbytes(k_max, functional)
        if functional == INTERACTION:
            projected += cache_nbytes(k_max, SHAPLEY)
        if projected > memory_budget_bytes:
            raise BudgetExceededError(
                f"projected peak {projected} bytes exceeds budget {memory_budget_bytes}"
            )

    main_cache = shap_cache = None
    if k_max >= 1:
        if cache is not None:
            if cache.kind != functional or cache.depth < k_max:
                raise ValueError("supplied cache does not match this request")
            main_cache = cache
        else:
            main_cache = build_diagonal_cache(k_max, functional, cap=depth_cap)
        if _cache_test_hook is not None:
            main_cache = _cache_test_hook(main_cache) or main_cache
        shap_cache = (
            build_diagonal_cache(k_max, SHAPLEY, cap=depth_cap)
            if functional == INTERACTION
            else main_cache
        )

    interaction = functional == INTERACTION

    def tree_values(tree):
        acc = np.zeros((n, F, F)) if interaction else np.zeros((n, F))
        phi = np.zeros((n, F)) if interaction else None
        cons = iter_leaf_patterns(tree, X, cap=depth_cap)
        bg = iter_leaf_patterns(tree, B, cap=depth_cap) if B is not None else None
        for (leaf, path), citem in zip(root_to_leaf_paths(tree), cons):
            assert citem.leaf is leaf, "pattern stream out of step with path stream"
            feats = citem.features
            k = len(feats)
            if bg is not None:
                f = background_distribution(next(bg).patterns, k)
            else:
                f = path_dependent_distribution(leaf, path)
            if k == 0:
                continue  # constant leaf: contributes to the base value only
            pc = citem.patterns
            w = leaf.weight
            if workspace_stats is not None:
                held = 3 * f.nbytes + pc.nbytes + (B.shape[0] * 4 if B is not None else 0)
                workspace_stats.update(held)
            if interaction:
                slevel = shap_cache.levels[k]
                plevel = main_cache.levels[k]
                for j, feat in enumerate(feats):
                    phi[:, feat] += w * diagonal_matvec(slevel[j], f)[pc]
                for (j1, f1), (j2, f2) in combinations(enumerate(feats), 2):
                    s = diagonal_matvec(plevel[pair_index(k, j1, j2)], f)
                    contrib = w * s[pc]
                    acc[:, f1, f2] += contrib
                    acc[:, f2, f1] += contrib
            else:
                level = main_cache.levels[k]
                for j, feat in enumerate(feats):
                    acc[:, feat] += w * diagonal_matvec(level[j], f)[pc]
        return acc, phi

    if threads > 1 and len(model.trees) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_tree = list(pool.map(tree_values, model.trees))
    else:
        per_tree = [tree_values(t) for t in model.trees]

    values = np.zeros((n, F, F)) if interaction else np.zeros((n, F))
    phi_total = np.zeros((n, F)) if interaction else None
    for acc, phi in per_tree:  # fixed reduction order: model tree order
        values += acc
        if interaction:
            phi_total += phi

    if interaction:
        idx = np.arange(F)
        values[:, idx, idx] = phi_total - values.sum(axis=2)

    return AttributionResult(values, _base_value(model, request.mode, B))


# ---------------------------------------------------------------------------
# brute-force oracles (definitional enumeration over active features)
# ---------------------------------------------------------------------------

def _attributions_from_game(V: np.ndarray, active, functional: str, n_features: int):
    """Definitional Shapley / Banzhaf / interaction values from a game vector.

    ``V[s]`` is the game value of the coalition whose members are the active
    features at the set bits of ``s``.
    """
    nA = len(active)
    total = 1 << nA
    masks = np.arange(total)
    sizes = np.bitwise_count(masks.astype(np.uint64)).astype(np.int64)

    def shapley_vector():
        phi = np.zeros(n_features)
        if nA == 0:
            return phi
        w = np.array(
            [
                math.factorial(s) * math.factorial(nA - 1 - s) / math.factorial(nA)
                for s in range(nA)
            ]
        )
        for i, feat in enumerate(active):
            bit = 1 << i
            sub = masks[(masks & bit) == 0]
            phi[feat] = float(np.sum(w[sizes[sub]] * (V[sub | bit] - V[sub])))
        return phi

    if functional == SHAPLEY:
        return shapley_vector()
    if functional == BANZHAF:
        phi = np.zeros(n_features)
        for i, feat in enumerate(active):
            bit = 1 << i
            sub = masks[(masks & bit) == 0]
            phi[feat] = float(np.sum(V[sub | bit] - V[sub]) * 2.0 ** (1 - nA))
        return phi

    vals = np.zeros((n_features, n_features))
    if nA >= 2:
        coef = np.array(
            [
                math.factorial(s) * math.factorial(nA - 2 - s) / math.factorial(nA - 1)
                for s in range(nA - 1)
            ]
        )
        for (i1, f1), (i2, f2) in combinations(list(enumerate(active)), 2):
            b1, b2 = 1 << i1, 1 << i2
            sub = masks[(masks & (b1 | b2)) == 0]
            delta = V[sub | b1 | b2] - V[sub | b1] - V[sub | b2] + V[sub]
            pairwise = float(np.sum(coef[sizes[sub]] * delta))
            vals[f1, f2] = pairwise
            vals[f2, f1] = pairwise
    phi = shapley_vector()
    idx = np.arange(n_features)
    vals[idx, idx] = phi - vals.sum(axis=1)
    return vals


def _active_or_raise(model: EnsembleModel, max_active: int):
    active = model.active_features()
    if len(active) > max_active:
        raise TooManyFeaturesError(
            f"{len(active)} active features; brute force capped at {max_active}"
        )
    return active


def brute_force_background(
    model: EnsembleModel,
    x,
    background,
    functional: str = SHAPLEY,
    max_active: int = BRUTE_FORCE_FEATURE_CAP,
):
    """Oracle: v(S) = mean prediction over background rows composited with x on S.

    Returns (values, base_value) for the single consumer row ``x``.
    """
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    B = _checked_rows(background, model.n_features, "background dataset")
    active = _active_or_raise(model, max_active)
    nA = len(active)
    total = 1 << nA
    m = B.shape[0]
    composite = np.repeat(B[None, :, :], total, axis=0)
    masks = np.arange(total)
    for i, feat in enumerate(active):
        chosen = (masks >> i) & 1 == 1
        composite[chosen, :, feat] = x[feat]
    preds = model.predict(composite.reshape(total * m, model.n_features))
    V = preds.reshape(total, m).mean(axis=1)
    return _attributions_from_game(V, active, functional, model.n_features), float(V[0])


def brute_force_path_dependent(
    model: EnsembleModel,
    x,
    functional: str = SHAPLEY,
    max_active: int = BRUTE_FORCE_FEATURE_CAP,
):
    """Oracle: v(S) by traversal, following x on S-features and cover-weighting
    both branches elsewhere.  Returns (values, base_value)."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    active = _active_or_raise(model, max_active)
    bit_of = {feat: i for i, feat in enumerate(active)}
    total = 1 << len(active)
    masks = np.arange(total)

    def game(node):
        if isinstance(node, Leaf):
            return np.full(total, node.weight)
        left = game(node.left)
        right = game(node.right)
        for nd in (node, node.left, node.right):
            if nd.cover is None:
                raise MissingCoverError("path-dependent oracle needs covers")
        if node.cover <= 0 or node.left.cover <= 0 or node.right.cover <= 0:
            raise ZeroCoverError("zero cover in path-dependent oracle")
        consumer = left if bool(node.goes_left(np.array([x[node.feature]]))[0]) else right
        mixed = (node.left.cover / node.cover) * left + (
            node.right.cover / node.cover
        ) * right
        has = (masks >> bit_of[node.feature]) & 1 == 1
        return np.where(has, consumer, mixed)

    V = np.full(total, model.base_score, dtype=np.float64)
    for tree in model.trees:
        V = V + game(tree.root)
    return _attributions_from_game(V, active, functional, model.n_features), float(V[0])


# ---------------------------------------------------------------------------
# dense baseline: full sparse value matrices, O(3^k) per leaf
# ---------------------------------------------------------------------------

@dataclass
class DenseBaselineStats:
    """Per-leaf stored-entry counts and total sparse-table bytes."""

    leaf_nonzeros: list = field(default_factory=list)
    table_bytes: int = 0


def _sparse_tables(k: int, functional: str):
    cube_rows = map_patterns_to_cubes(range(k))
    rows, cols, cubes = [], [], []
    for pc, row in cube_rows.items():
        for pb, cube in row.items():
            rows.append(pc)
            cols.append(pb)
            cubes.append(cube)
    shape = (1 << k, 1 << k)

    def matrix(values):
        return scipy.sparse.csr_matrix((values, (rows, cols)), shape=shape)

    if functional == INTERACTION:
        mats = [
            matrix([cube_interaction(c, j1, j2) for c in cubes])
            for j1, j2 in combinations(range(k), 2)
        ]
        shap = [matrix([cube_shapley(c, j) for c in cubes]) for j in range(k)]
        return mats, shap, len(cubes)
    fn = cube_shapley if functional == SHAPLEY else cube_banzhaf
    mats = [matrix([fn(c, j) for c in cubes]) for j in range(k)]
    return mats, None, len(cubes)


def explain_dense(
    request: ExplainRequest,
    *,
    depth_cap: int = 12,
    stats: DenseBaselineStats | None = None,
) -> AttributionResult:
    """Same contract as :func:`explain`, via full sparse value matrices.

    Regression anchor for the fast path: the matrices are assembled from the
    cube table entry by entry and multiplied sparsely, no diagonals involved.
    """
    model, X, B = _prepare(request)
    functional = request.functional
    F = model.n_features
    n = X.shape[0]
    interaction = functional == INTERACTION

    k_max = max((t.max_unique_features for t in model.trees), default=0)
    if k_max > depth_cap:
        raise DepthCapError(
            f"dense baseline capped at {depth_cap} unique features, model needs {k_max}"
        )
    tables: dict[int, tuple] = {}

    values = np.zeros((n, F, F)) if interaction else np.zeros((n, F))
    phi_total = np.zeros((n, F)) if interaction else None
    for tree in model.trees:
        cons = iter_leaf_patterns(tree, X, cap=depth_cap)
        bg = iter_leaf_patterns(tree, B, cap=depth_cap) if B is not None else None
        for (leaf, path), citem in zip(root_to_leaf_paths(tree), cons):
            feats = citem.features
            k = len(feats)
            if bg is not None:
                f = background_distribution(next(bg).patterns, k)
            else:
                f = path_dependent_distribution(leaf, path)
            if k == 0:
                continue
            if k not in tables:
                tables[k] = _sparse_tables(k, functional)
                if stats is not None:
                    for group in tables[k][:2]:
                        for mat in group or []:
                            stats.table_bytes += (
                                mat.data.nbytes + mat.indices.nbytes + mat.indptr.nbytes
                            )
            mats, shap_mats, entry_count = tables[k]
            if stats is not None:
                stats.leaf_nonzeros.append(entry_count)
            pc = citem.patterns
            w = leaf.weight
            if interaction:
                for j, feat in enumerate(feats):
                    phi_total[:, feat] += w * shap_mats[j].dot(f)[pc]
                for (j1, f1), (j2, f2) in combinations(enumerate(feats), 2):
                    contrib = w * mats[pair_index(k, j1, j2)].dot(f)[pc]
                    values[:, f1, f2] += contrib
                    values[:, f2, f1] += contrib
            else:
                for j, feat in enumerate(feats):
                    values[:, feat] += w * mats[j].dot(f)[pc]

    if interaction:
        idx = np.arange(F)
        values[:, idx, idx] = phi_total - values.sum(axis=2)

    return AttributionResult(values, _base_value(model, request.mode, B))
