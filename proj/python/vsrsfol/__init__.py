"""Python front end to the vsrsfol C++ core."""

from ._core import (
    RuleParseError,
    __version__,
    bind,
    bundle,
    cli,
    compute_reward,
    cosine,
    default_rules_text,
    encode_scene,
    evaluate_csv,
    extract_facts,
    infer,
    random_vector,
    run_episode,
    unbind,
)

__all__ = [
    "RuleParseError",
    "__version__",
    "bind",
    "bundle",
    "cli",
    "compute_reward",
    "cosine",
    "default_rules_text",
    "encode_scene",
    "evaluate_csv",
    "extract_facts",
    "infer",
    "random_vector",
    "run_episode",
    "unbind",
]
