"""Reward-guided tree search over chained triple paths.

The tree's root is the empty path; root actions pair an anchor entity with
one of its incident triples, and deeper actions extend the walk frontier by
one unused triple. Rewards are evaluated directly on the partial path at
first visit (no rollout) and cached; later passes through a node re-credit
the cached value. The search consumes no randomness, so a fixed
configuration is bit-reproducible; the seed field is provenance metadata.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .embeddings import EmbeddingProvider
from .errors import ChainError, ConfigError, EmptySearchError
from .extraction import UserKnowledgeThread
from .graph import KnowledgeGraph, Layer, Triple
from .ontology import Ontology
from .reward import RewardBreakdown, RewardConfig, RewardContext, make_context, reward
from .traversal import KnowledgeThread, seed_entities, thread_from_walk


@dataclass(frozen=True)
class SearchConfig:
    exploration: float = 1.414
    iterations: int = 2000
    adaptive_exploration: bool = True  # False freezes the constant at c
    horizon: int | None = None  # T in c' = c * (1 + t/T); defaults to iterations
    max_actions: int = 30
    path_cap: int = 25
    layer_bonus: float = 0.1
    depth_start: int = 20
    depth_floor: int = 10
    depth_interval: int = 100
    prune_visits: int = 10
    prune_factor: float = 0.5
    enable_pruning: bool = True
    seed: int = 0

    def __post_init__(self) -> None:
        if self.iterations < 1:
            raise ConfigError("iterations must be at least 1")
        if self.max_actions < 1 or self.path_cap < 1:
            raise ConfigError("caps must be at least 1")
        if self.depth_floor < 1 or self.depth_start < self.depth_floor:
            raise ConfigError("depth schedule must stay at or above its floor")
        if self.depth_interval < 1:
            raise ConfigError("depth_interval must be at least 1")
        if self.horizon is not None and self.horizon < 1:
            raise ConfigError("horizon must be at least 1 when set")

    def depth_limit(self, t: int) -> int:
        return max(self.depth_floor, self.depth_start - t // self.depth_interval)

    def exploration_at(self, t: int) -> float:
        if not self.adaptive_exploration:
            return self.exploration
        horizon = self.horizon or self.iterations
        return self.exploration * (1.0 + t / horizon)


class MctsNode:
    """One partial path; the walk is reconstructed by climbing parents."""

    __slots__ = (
        "parent",
        "triple",
        "entity",
        "origin",
        "depth",
        "children",
        "visits",
        "total_reward",
        "expanded",
        "closed",
        "breakdown",
        "layer_gain",
    )

    def __init__(
        self,
        parent: "MctsNode | None",
        triple: Triple | None,
        entity: str | None,
        origin: str | None = None,
        layer_gain: int = 0,
    ) -> None:
        self.parent = parent
        self.triple = triple
        self.entity = entity  # walk frontier
        self.origin = origin  # walk start, set on depth-1 nodes only
        self.depth = 0 if parent is None else parent.depth + 1
        self.children: list[MctsNode] = []
        self.visits = 0
        self.total_reward = 0.0
        self.expanded = False
        self.closed = False
        self.breakdown: RewardBreakdown | None = None
        self.layer_gain = layer_gain

    def mean_reward(self) -> float:
        return self.total_reward / self.visits if self.visits else 0.0

    def walk(self) -> tuple[str, ...]:
        nodes: list[str] = []
        cursor: MctsNode | None = self
        start = None
        while cursor is not None and cursor.parent is not None:
            nodes.append(cursor.entity)  # type: ignore[arg-type]
            start = cursor.origin
            cursor = cursor.parent
        nodes.append(start)  # type: ignore[arg-type]
        nodes.reverse()
        return tuple(nodes)

    def path_triples(self) -> tuple[Triple, ...]:
        triples: list[Triple] = []
        cursor: MctsNode | None = self
        while cursor is not None and cursor.triple is not None:
            triples.append(cursor.triple)
            cursor = cursor.parent
        triples.reverse()
        return tuple(triples)


@dataclass
class ReasoningThread:
    """The selected path with its full scoring record."""

    thread: KnowledgeThread
    breakdown: RewardBreakdown
    layers_spanned: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.breakdown.total <= 1.0 + 1e-12:
            raise ChainError(f"reward total {self.breakdown.total} outside [0, 1]")
        if len(self.thread.triples) > 25:
            raise ChainError("path exceeds the 25-triple cap")

    def to_dict(self) -> dict:
        payload = self.thread.to_dict()
        payload["reward"] = self.breakdown.to_dict()
        payload["layers_spanned"] = self.layers_spanned
        return payload


def uct(node: MctsNode, parent_visits: int, cfg: SearchConfig, t: int) -> float:
    """Selection score; unvisited nodes rank above every visited sibling."""
    if node.visits == 0:
        return math.inf
    exploit = node.total_reward / node.visits
    explore = cfg.exploration_at(t) * math.sqrt(math.log(parent_visits) / node.visits)
    bonus = cfg.layer_bonus * node.layer_gain / 3.0
    return exploit + explore + bonus


def _prunable(child: MctsNode, best_sibling_mean: float, cfg: SearchConfig) -> bool:
    """Dynamic threshold rule: heavily sampled and clearly below the best sibling."""
    return (
        child.visits >= cfg.prune_visits
        and child.mean_reward() < cfg.prune_factor * best_sibling_mean
    )


def _close_weak_children(parent: MctsNode, cfg: SearchConfig) -> None:
    visited = [c for c in parent.children if c.visits > 0 and not c.closed]
    if len(visited) < 2:
        return
    best_mean = max(c.mean_reward() for c in visited)
    for child in visited:
        if _prunable(child, best_mean, cfg):
            child.closed = True


def prune_branches(tree: MctsNode, cfg: SearchConfig) -> MctsNode:
    """Apply the dynamic-threshold rule across the whole tree; returns the root."""
    stack = [tree]
    while stack:
        node = stack.pop()
        _close_weak_children(node, cfg)
        stack.extend(node.children)
    return tree


def _layer_gain(g: KnowledgeGraph, from_entity: str, to_entity: str) -> int:
    a = g.entity(from_entity).layer.ordinal
    b = g.entity(to_entity).layer.ordinal
    if a is None or b is None:
        return 0
    return b - a


def _expand(node: MctsNode, g: KnowledgeGraph, ctx: RewardContext, cfg: SearchConfig) -> None:
    node.expanded = True
    if node.depth >= cfg.path_cap:
        return
    used = {t.key() for t in node.path_triples()}
    frontier = node.entity
    assert frontier is not None
    candidates: list[tuple[float, str, tuple, Triple]] = []
    for triple in g.incident_triples(frontier):
        if triple.key() in used:
            continue
        other = triple.object if triple.subject == frontier else triple.subject
        score = ctx.relevance(g.entity(other).label)
        candidates.append((-score, other, triple.key(), triple))
    candidates.sort(key=lambda item: item[:3])
    for neg_score, other, _, triple in candidates[: cfg.max_actions]:
        node.children.append(
            MctsNode(
                parent=node,
                triple=triple,
                entity=other,
                layer_gain=_layer_gain(g, frontier, other),
            )
        )


def _expand_root(
    root: MctsNode,
    g: KnowledgeGraph,
    seeds: list[str],
    ctx: RewardContext,
    cfg: SearchConfig,
) -> None:
    root.expanded = True
    candidates: list[tuple[float, str, str, tuple, Triple]] = []
    for seed in seeds:
        for triple in g.incident_triples(seed):
            other = triple.object if triple.subject == seed else triple.subject
            score = ctx.relevance(g.entity(other).label)
            candidates.append((-score, seed, other, triple.key(), triple))
    candidates.sort(key=lambda item: item[:4])
    for neg_score, seed, other, _, triple in candidates[: cfg.max_actions]:
        root.children.append(
            MctsNode(
                parent=root,
                triple=triple,
                entity=other,
                origin=seed,
                layer_gain=_layer_gain(g, seed, other),
            )
        )


def _select_child(node: MctsNode, cfg: SearchConfig, t: int) -> MctsNode | None:
    if cfg.enable_pruning:
        _close_weak_children(node, cfg)
    best: MctsNode | None = None
    best_score = -math.inf
    for child in node.children:
        if child.closed:
            continue
        score = uct(child, max(1, node.visits), cfg, t)
        if score > best_score:
            best = child
            best_score = score
    return best


def _backpropagate(node: MctsNode, value: float) -> None:
    cursor: MctsNode | None = node
    while cursor is not None:
        cursor.visits += 1
        cursor.total_reward += value
        cursor = cursor.parent


def resolve_seeds(
    g: KnowledgeGraph,
    thread: UserKnowledgeThread,
    ctx: RewardContext,
    limit: int = 5,
) -> list[str]:
    """User-anchored entities, or the most user-relevant entities as fallback."""
    anchored = seed_entities(g, thread)
    if anchored:
        return anchored
    ranked = sorted(
        g.entities,
        key=lambda eid: (-ctx.relevance(g.entity(eid).label), eid),
    )
    return ranked[:limit]


def run_mcts(
    g: KnowledgeGraph,
    thread: UserKnowledgeThread,
    embedder: EmbeddingProvider,
    onto: Ontology,
    seeds: list[str] | None = None,
    search_cfg: SearchConfig | None = None,
    reward_cfg: RewardConfig | None = None,
) -> tuple[ReasoningThread, dict]:
    """Run the full budget and pick the best-reward evaluated path.

    The final selection prefers paths spanning at least two known layers and
    falls back to the overall best when none does; ties break on the
    lexicographically smallest entity walk. Returns the selected thread and
    a machine-readable search report.
    """
    cfg = search_cfg or SearchConfig()
    ctx = make_context(g, thread, embedder, onto, reward_cfg)
    seed_list = seeds if seeds is not None else resolve_seeds(g, thread, ctx)
    seed_list = [s for s in seed_list if g.has_entity(s)]

    root = MctsNode(parent=None, triple=None, entity=None)
    _expand_root(root, g, seed_list, ctx, cfg)
    if not root.children:
        raise EmptySearchError("no expandable action from any seed entity")

    evaluated: list[MctsNode] = []
    best_total = -math.inf
    trajectory: list[tuple[int, float]] = []

    for t in range(cfg.iterations):
        depth_budget = cfg.depth_limit(t)
        node = root
        while True:
            if node.parent is not None and node.visits == 0:
                walk = node.walk()
                kthread = thread_from_walk(g, node.path_triples(), walk)
                node.breakdown = reward(kthread, ctx)
                evaluated.append(node)
                best_total = max(best_total, node.breakdown.total)
                _backpropagate(node, node.breakdown.total)
                break
            if node.depth >= depth_budget:
                _backpropagate(node, node.breakdown.total if node.breakdown else 0.0)
                break
            if not node.expanded:
                _expand(node, g, ctx, cfg)
            child = _select_child(node, cfg, t)
            if child is None:
                # Dead end: every action closed or none exist.
                _backpropagate(node, node.breakdown.total if node.breakdown else 0.0)
                break
            node = child
        done = t + 1
        if done % 100 == 0 or done == cfg.iterations:
            trajectory.append((done, best_total))

    spanning = [
        n
        for n in evaluated
        if _distinct_known_layers(g, n.walk()) >= 2
    ]
    pool = spanning or evaluated
    best = min(
        pool,
        key=lambda n: (-n.breakdown.total, n.walk()),  # type: ignore[union-attr]
    )
    walk = best.walk()
    kthread = thread_from_walk(g, best.path_triples(), walk, score=best.breakdown.total)
    result = ReasoningThread(
        thread=kthread,
        breakdown=best.breakdown,
        layers_spanned=_distinct_known_layers(g, walk),
    )
    explored: set[str] = set()
    for n in evaluated:
        explored.update(n.walk())
    report = {
        "seed": cfg.seed,
        "iterations": cfg.iterations,
        "nodes_expanded": _count_nodes(root) - 1,
        "paths_evaluated": len(evaluated),
        "explored_entities": sorted(explored),
        "best_reward_trajectory": [[t, round(r, 9)] for t, r in trajectory],
        "tau_star": result.to_dict(),
    }
    return result, report


def _distinct_known_layers(g: KnowledgeGraph, walk: tuple[str, ...]) -> int:
    return len(
        {
            g.entity(eid).layer
            for eid in walk
            if g.entity(eid).layer is not Layer.UNKNOWN
        }
    )


def _count_nodes(root: MctsNode) -> int:
    count = 0
    stack = [root]
    while stack:
        node = stack.pop()
        count += 1
        stack.extend(node.children)
    return count
