"""Run configuration: INI file loading with validated module configs.

One flat INI file configures every stage. Each section maps onto one
module's config dataclass, so all weight-sum and range invariants are
enforced while loading, not at first use. Provider endpoints can be
overridden through KGTHREADS_EMBED_ENDPOINT and
KGTHREADS_COMPLETE_ENDPOINT; nothing else reads the environment.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from .enrichment import EnrichmentConfig
from .errors import ConfigError, GraphFormatError
from .graph import Layer
from .mcts import SearchConfig
from .pruning import PruneConfig
from .reward import RewardConfig
from .traversal import LinkProposalConfig

EMBED_ENDPOINT_VAR = "KGTHREADS_EMBED_ENDPOINT"
COMPLETE_ENDPOINT_VAR = "KGTHREADS_COMPLETE_ENDPOINT"

DEFAULT_APPROACH = "ret_eval"


def default_graph_path() -> Path:
    return Path(str(resources.files("kgthreads.data") / "desk_kg.json"))


@dataclass(frozen=True)
class RunConfig:
    embed_endpoint: str | None = None
    complete_endpoint: str | None = None
    graph_path: Path = field(default_factory=default_graph_path)
    model_path: Path | None = None
    seed: int = 0
    approach: str = DEFAULT_APPROACH
    prune: PruneConfig = field(default_factory=PruneConfig)
    enrichment: EnrichmentConfig = field(default_factory=EnrichmentConfig)
    links: LinkProposalConfig = field(default_factory=LinkProposalConfig)
    search: SearchConfig = field(default_factory=SearchConfig)
    reward: RewardConfig = field(default_factory=RewardConfig)

    def __post_init__(self) -> None:
        if self.approach not in ("ret_eval", "gnn", "rm"):
            raise ConfigError(f"unknown approach {self.approach!r}")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if not Path(self.graph_path).is_file():
            raise ConfigError(f"graph file not found: {self.graph_path}")
        if self.model_path is not None and not Path(self.model_path).is_file():
            raise ConfigError(f"model file not found: {self.model_path}")

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, seed=seed, search=replace(self.search, seed=seed))


def _get(parser: configparser.ConfigParser, section: str, key: str):
    if parser.has_option(section, key):
        return parser.get(section, key)
    return None


def _typed(raw: str, like) -> object:
    """Coerce an INI string to the type of the dataclass default it replaces."""
    if isinstance(like, bool):
        lowered = raw.strip().lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"expected a boolean, got {raw!r}")
    if isinstance(like, int) and not isinstance(like, bool):
        return int(raw)
    if isinstance(like, float):
        return float(raw)
    return raw


def _section_kwargs(parser, section: str, defaults, fields: tuple[str, ...]) -> dict:
    kwargs = {}
    for name in fields:
        raw = _get(parser, section, name)
        if raw is None:
            continue
        kwargs[name] = _typed(raw, getattr(defaults, name))
    return kwargs


def load_config(path: str | Path | None = None, env: dict | None = None) -> RunConfig:
    """Build a RunConfig from an INI file, or defaults when path is None."""
    env = os.environ if env is None else env
    parser = configparser.ConfigParser()
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            parser.read(path)
        except configparser.Error as exc:
            raise ConfigError(f"bad config file {path}: {exc}") from exc

    try:
        prune_kwargs = _section_kwargs(
            parser, "prune", PruneConfig(), ("hops", "max_retained")
        )
        raw_threshold = _get(parser, "prune", "threshold")
        if raw_threshold is not None:
            prune_kwargs["threshold"] = float(raw_threshold)
        prune = PruneConfig(**prune_kwargs)

        enrichment = EnrichmentConfig(
            **_section_kwargs(
                parser,
                "enrichment",
                EnrichmentConfig(),
                (
                    "limit",
                    "near_duplicate_cosine",
                    "off_domain_floor",
                    "max_prompt_tokens",
                    "max_completion_tokens",
                ),
            )
        )
        links = LinkProposalConfig(
            **_section_kwargs(
                parser,
                "links",
                LinkProposalConfig(),
                (
                    "top_k",
                    "direct_threshold",
                    "bridged_threshold",
                    "max_bridge_hops",
                    "cross_layer_threshold",
                    "max_semantic",
                    "max_cross_layer",
                ),
            )
        )

        search_kwargs = _section_kwargs(
            parser,
            "search",
            SearchConfig(),
            (
                "exploration",
                "iterations",
                "adaptive_exploration",
                "max_actions",
                "path_cap",
                "layer_bonus",
                "depth_start",
                "depth_floor",
                "depth_interval",
                "prune_visits",
                "prune_factor",
                "enable_pruning",
            ),
        )
        raw_horizon = _get(parser, "search", "horizon")
        if raw_horizon is not None and raw_horizon.strip().lower() not in ("", "none"):
            search_kwargs["horizon"] = int(raw_horizon)
        search = SearchConfig(**search_kwargs)

        reward_kwargs = _section_kwargs(
            parser, "reward", RewardConfig(), ("alpha", "beta", "gamma", "preferred_length")
        )
        raw_weights = _get(parser, "reward", "weights")
        if raw_weights is not None:
            reward_kwargs["weights"] = tuple(
                float(w) for w in raw_weights.split(",") if w.strip()
            )
        raw_target = _get(parser, "reward", "target_layer")
        if raw_target is not None:
            reward_kwargs["target_layer"] = Layer.from_name(raw_target.strip())
        reward = RewardConfig(**reward_kwargs)

        run_kwargs: dict = {}
        raw_seed = _get(parser, "run", "seed")
        if raw_seed is not None:
            run_kwargs["seed"] = int(raw_seed)
        raw_approach = _get(parser, "run", "approach")
        if raw_approach is not None:
            run_kwargs["approach"] = raw_approach.strip()
        raw_graph = _get(parser, "run", "graph")
        if raw_graph is not None:
            run_kwargs["graph_path"] = Path(raw_graph).expanduser()
        raw_model = _get(parser, "run", "model")
        if raw_model is not None and raw_model.strip().lower() not in ("", "none"):
            run_kwargs["model_path"] = Path(raw_model).expanduser()
    except (ValueError, TypeError, GraphFormatError) as exc:
        raise ConfigError(f"bad config value: {exc}") from exc

    embed_endpoint = _get(parser, "providers", "embed_endpoint")
    complete_endpoint = _get(parser, "providers", "complete_endpoint")
    if env.get(EMBED_ENDPOINT_VAR):
        embed_endpoint = env[EMBED_ENDPOINT_VAR]
    if env.get(COMPLETE_ENDPOINT_VAR):
        complete_endpoint = env[COMPLETE_ENDPOINT_VAR]

    cfg = RunConfig(
        embed_endpoint=embed_endpoint or None,
        complete_endpoint=complete_endpoint or None,
        seed=run_kwargs.pop("seed", 0),
        approach=run_kwargs.pop("approach", DEFAULT_APPROACH),
        prune=prune,
        enrichment=enrichment,
        links=links,
        search=search,
        reward=reward,
        **run_kwargs,
    )
    if cfg.seed != cfg.search.seed:
        cfg = replace(cfg, search=replace(cfg.search, seed=cfg.seed))
    return cfg
